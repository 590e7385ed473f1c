// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "persistkit/workload.hpp"

#include <algorithm>
#include <charconv>
#include <random>

#include "persistkit/error.hpp"
#include "persistkit/hash.hpp"

namespace persistkit {

namespace {

std::uint32_t parse_count(std::string_view text, std::string_view what) {
  std::uint32_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::kInvalidArgument, "bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

OpMix OpMix::parse(std::string_view text) {
  if (text == "insert-only") return {1, 0};
  if (text == "delete-only") return {0, 1};
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(Errc::kInvalidArgument, "op mix must look like A:B, got '" + std::string(text) + "'");
  }
  OpMix mix{parse_count(text.substr(0, colon), "op mix"), parse_count(text.substr(colon + 1), "op mix")};
  if (mix.inserts == 0 && mix.deletes == 0) {
    throw Error(Errc::kInvalidArgument, "op mix 0:0 has no operations");
  }
  return mix;
}

std::string OpMix::label() const {
  if (deletes == 0) return "insert-only";
  if (inserts == 0) return "delete-only";
  return std::to_string(inserts) + ":" + std::to_string(deletes);
}

Trace generate_trace(const WorkloadSpec& spec) {
  if (spec.mix.inserts == 0 && spec.mix.deletes == 0) {
    throw Error(Errc::kInvalidArgument, "op mix 0:0 has no operations");
  }
  if (spec.mix.inserts == 0 && spec.init_count < spec.op_count) {
    throw Error(Errc::kInvalidArgument, "delete-only workload needs init_count >= op_count");
  }
  Trace trace;
  const std::uint64_t salt = mix64(spec.seed);
  std::uint64_t counter = 0;
  auto fresh_key = [&] {
    for (;;) {
      const auto key = static_cast<std::int64_t>(mix64(salt + counter++));
      if (key != 0) return key;
    }
  };
  std::mt19937_64 rng(spec.seed);
  std::vector<std::int64_t> live;
  live.reserve(spec.init_count + spec.op_count);
  trace.init_keys.reserve(spec.init_count);
  for (std::uint64_t i = 0; i < spec.init_count; ++i) {
    trace.init_keys.push_back(fresh_key());
    live.push_back(trace.init_keys.back());
  }
  const std::uint64_t period = spec.mix.inserts + spec.mix.deletes;
  trace.ops.reserve(spec.op_count);
  for (std::uint64_t i = 0; i < spec.op_count; ++i) {
    if (i % period < spec.mix.inserts) {
      trace.ops.push_back({Op::Kind::kInsert, fresh_key()});
      live.push_back(trace.ops.back().key);
      continue;
    }
    if (live.empty()) {
      throw Error(Errc::kInvalidArgument, "delete at op " + std::to_string(i) + " on an empty structure");
    }
    const std::size_t pick = rng() % live.size();
    trace.ops.push_back({Op::Kind::kDelete, live[pick]});
    live[pick] = live.back();
    live.pop_back();
  }
  return trace;
}

std::uint64_t peak_live(const Trace& trace) {
  std::uint64_t live = trace.init_keys.size();
  std::uint64_t peak = live;
  for (const Op& op : trace.ops) {
    if (op.kind == Op::Kind::kInsert) {
      peak = std::max(peak, ++live);
    } else {
      --live;
    }
  }
  return peak;
}

RegionLayout layout_for(const WorkloadSpec& spec, const Trace& trace) {
  const std::uint64_t n = peak_live(trace);
  switch (spec.structure) {
    case Structure::kList: return RegionLayout::for_slots(n, 0, 0);
    case Structure::kTree: return RegionLayout::for_slots(0, n, 0);
    case Structure::kMap: {
      // Room for the bucket array at this load factor, whatever it is.
      RegionLayout layout = RegionLayout::for_slots(0, 0, n);
      std::uint64_t bc = 1;
      while (static_cast<double>(std::max(n, trace.init_keys.size())) > spec.load_factor * bc) bc <<= 1;
      for (auto& a : layout.arenas) {
        if (a.id == ArenaId::kMapBuckets) {
          a.length = std::max(a.length, (bc * 8 + kDeviceBlock - 1) / kDeviceBlock * kDeviceBlock);
        }
      }
      return layout;
    }
  }
  return {};
}

ArenaId root_arena(Structure s) noexcept {
  switch (s) {
    case Structure::kList: return ArenaId::kList;
    case Structure::kTree: return ArenaId::kTreeNodes;
    case Structure::kMap: return ArenaId::kMapEntries;
  }
  return ArenaId::kList;
}

Structure parse_structure(std::string_view text) {
  if (text == "list") return Structure::kList;
  if (text == "tree" || text == "bptree") return Structure::kTree;
  if (text == "map" || text == "hashmap") return Structure::kMap;
  throw Error(Errc::kInvalidArgument, "unknown structure '" + std::string(text) + "'");
}

Mode parse_mode(std::string_view text) {
  if (text == "full") return Mode::kFullyPersistent;
  if (text == "partly") return Mode::kPartlyDirect;
  if (text == "partly-ckpt") return Mode::kPartlyCheckpoint;
  throw Error(Errc::kInvalidArgument, "unknown mode '" + std::string(text) + "'");
}

Backend parse_backend(std::string_view text) {
  if (text == "file") return Backend::kFileBacked;
  if (text == "sim") return Backend::kSimulatedCrash;
  throw Error(Errc::kInvalidArgument, "unknown backend '" + std::string(text) + "'");
}

FencePolicy parse_fence(std::string_view text) {
  if (text == "per-op") return FencePolicy::per_op();
  if (text.starts_with("batch=")) {
    const std::uint32_t k = parse_count(text.substr(6), "fence batch");
    if (k == 0) throw Error(Errc::kInvalidArgument, "fence batch must be at least 1");
    return FencePolicy::batched(k);
  }
  throw Error(Errc::kInvalidArgument, "fence policy must be per-op or batch=K");
}

std::string fence_label(FencePolicy fence) {
  return fence.ops_per_fence <= 1 ? "per-op" : "batch=" + std::to_string(fence.ops_per_fence);
}

}  // namespace persistkit
