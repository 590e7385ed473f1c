// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "persistkit/bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "persistkit/crash_harness.hpp"
#include "persistkit/error.hpp"
#include "persistkit/handle.hpp"
#include "persistkit/list.hpp"

namespace persistkit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::filesystem::path region_file(std::string_view tag) {
  return region_dir() / ("persistkit-" + std::to_string(::getpid()) + "-" + std::string(tag) + ".region");
}

// Removes a FileBacked region file when the bench step ends.
struct FileGuard {
  std::filesystem::path path;
  bool active;
  ~FileGuard() {
    if (!active) return;
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

BenchRow median_row(const std::vector<BenchRow>& runs) {
  BenchRow row = runs.front();
  std::vector<double> wall, flush;
  for (const auto& r : runs) {
    wall.push_back(r.wall_s);
    flush.push_back(r.flush_s);
  }
  row.wall_s = median(wall);
  row.flush_s = median(flush);
  row.flush_fraction = row.wall_s > 0.0 ? row.flush_s / row.wall_s : 0.0;
  row.repeat = "median";
  return row;
}

void fill_counts(BenchRow& row, const RunStats& stats, double wall) {
  row.line_flushes = stats.line_flushes;
  row.fences = stats.fences;
  row.wall_s = wall;
  row.flush_s = stats.flush_time;
  row.flush_fraction = wall > 0.0 ? stats.flush_time / wall : 0.0;
}

void check_layout_fits(const RegionLayout& have, const RegionLayout& need) {
  for (const auto& n : need.arenas) {
    const auto it = std::find_if(have.arenas.begin(), have.arenas.end(),
                                 [&](const ArenaSpec& a) { return a.id == n.id; });
    const std::uint64_t got = it == have.arenas.end() ? 0 : it->length;
    if (got < n.length) {
      throw Error(Errc::kOutOfSpace, std::string(arena_name(n.id)) + " arena has " +
                                         std::to_string(got) + " bytes, workload needs " +
                                         std::to_string(n.length));
    }
  }
}

std::string fraction_label(double f) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "flush-fraction=%g", f);
  return buf;
}

}  // namespace

void write_csv_header(std::ostream& out) {
  out << "structure,mode,workload,ops,line_flushes,fences,wall_s,flush_s,flush_fraction,repeat\n";
}

void write_csv_row(std::ostream& out, const BenchRow& row) {
  char nums[128];
  std::snprintf(nums, sizeof(nums), "%.6f,%.6f,%.4f", row.wall_s, row.flush_s, row.flush_fraction);
  out << row.structure << ',' << row.mode << ',' << row.workload << ',' << row.ops << ','
      << row.line_flushes << ',' << row.fences << ',' << nums << ',' << row.repeat << '\n';
}

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows, bool header) {
  if (header) write_csv_header(out);
  for (const auto& row : rows) write_csv_row(out, row);
}

std::filesystem::path region_dir() {
  if (const char* dir = std::getenv("PERSISTKIT_REGION_DIR"); dir != nullptr && *dir != '\0') {
    return dir;
  }
  return std::filesystem::temp_directory_path();
}

std::vector<BenchRow> run_workload(const BenchConfig& config) {
  if (config.repeats < 1) throw Error(Errc::kInvalidArgument, "repeats must be at least 1");
  const WorkloadSpec& spec = config.workload;
  const Trace trace = generate_trace(spec);
  const RegionLayout need = layout_for(spec, trace);
  RegionLayout layout = need;
  std::uint64_t capacity = need.required_capacity();
  if (config.capacity != 0) {
    capacity = config.capacity;
    layout = RegionLayout::for_capacity(capacity);
    check_layout_fits(layout, need);
  }

  std::vector<BenchRow> rows;
  for (std::uint32_t r = 0; r < config.repeats; ++r) {
    const bool file = config.backend == Backend::kFileBacked;
    FileGuard guard{region_file(structure_name(spec.structure)), file};
    RegionOptions options;
    options.time_flushes = true;
    Region region = Region::create(guard.path, capacity, config.backend, layout, options);
    region.pretouch();
    auto handle = init_structure(region, spec);
    for (std::int64_t k : trace.init_keys) handle->insert(k);
    handle->finish();
    region.reset_stats();

    const auto start = Clock::now();
    for (const Op& op : trace.ops) {
      if (op.kind == Op::Kind::kInsert) {
        handle->insert(op.key);
      } else {
        handle->erase(op.key);
      }
    }
    handle->finish();
    const double wall = seconds_since(start);

    BenchRow row;
    row.structure = structure_name(spec.structure);
    row.mode = mode_name(spec.mode);
    row.workload = spec.mix.label();
    row.ops = trace.ops.size();
    fill_counts(row, region.stats(), wall);
    row.repeat = std::to_string(r);
    rows.push_back(row);
  }
  rows.push_back(median_row(rows));
  return rows;
}

std::vector<BenchRow> run_flush_scaling(std::uint64_t base_ops, const std::vector<double>& fractions,
                                        Backend backend, std::uint32_t repeats) {
  if (repeats < 1) throw Error(Errc::kInvalidArgument, "repeats must be at least 1");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw Error(Errc::kInvalidArgument, "flush fraction must lie in (0, 1]");
    }
  }
  const RegionLayout layout = RegionLayout::for_slots(base_ops, 0, 0);
  // Repeats go round-robin over the fractions so clock and cache drift
  // spreads evenly instead of landing on whichever fraction runs first.
  std::vector<std::vector<BenchRow>> runs(fractions.size());
  for (std::uint32_t r = 0; r < repeats; ++r) {
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
      const double f = fractions[fi];
      FileGuard guard{region_file("flush-scaling"), backend == Backend::kFileBacked};
      RegionOptions options;
      options.time_flushes = true;
      Region region = Region::create(guard.path, layout.required_capacity(), backend, layout, options);
      region.pretouch();
      region.reset_stats();
      Offset prev = kNil;
      const auto start = Clock::now();
      for (std::uint64_t i = 0; i < base_ops; ++i) {
        const Offset node = region.alloc(ArenaId::kList, kLineSize, kLineSize);
        region.store(node, ListNodeLine{make_payload56(static_cast<std::int64_t>(i + 1)), prev});
        const auto lo = static_cast<std::uint64_t>(static_cast<double>(i) * f);
        const auto hi = static_cast<std::uint64_t>(static_cast<double>(i + 1) * f);
        if (hi > lo) {
          region.flush(node, kLineSize);
          region.fence();
        }
        prev = node;
      }
      const double wall = seconds_since(start);
      BenchRow row;
      row.structure = "simple-list";
      row.mode = "partly";
      row.workload = fraction_label(f);
      row.ops = base_ops;
      fill_counts(row, region.stats(), wall);
      row.repeat = std::to_string(r);
      runs[fi].push_back(row);
    }
  }
  std::vector<BenchRow> rows;
  for (const auto& per_fraction : runs) rows.push_back(median_row(per_fraction));
  return rows;
}

std::vector<BenchRow> run_granularity_bench(const std::vector<std::uint32_t>& sizes,
                                            std::uint64_t op_count, Backend backend,
                                            std::uint32_t repeats) {
  if (repeats < 1) throw Error(Errc::kInvalidArgument, "repeats must be at least 1");
  for (std::uint32_t s : sizes) {
    if (s != 8 && s != 16 && s != 32 && s != 64) {
      throw Error(Errc::kInvalidArgument, "flush size must be 8, 16, 32 or 64, got " + std::to_string(s));
    }
  }
  const RegionLayout layout = RegionLayout::for_slots(op_count, 0, 0);
  std::vector<std::vector<BenchRow>> runs(sizes.size());
  for (std::uint32_t r = 0; r < repeats; ++r) {
    for (std::size_t si = 0; si < sizes.size(); ++si) {
      const std::uint32_t size = sizes[si];
      FileGuard guard{region_file("granularity"), backend == Backend::kFileBacked};
      RegionOptions options;
      options.time_flushes = true;
      Region region = Region::create(guard.path, layout.required_capacity(), backend, layout, options);
      region.pretouch();
      region.reset_stats();
      const auto start = Clock::now();
      for (std::uint64_t i = 0; i < op_count; ++i) {
        const Offset slot = region.alloc(ArenaId::kList, kLineSize, kLineSize);
        region.store(slot, make_payload64(static_cast<std::int64_t>(i + 1)));
        for (std::uint64_t c = 0; c < kLineSize; c += size) region.flush(slot + c, size);
        region.fence();
      }
      const double wall = seconds_since(start);
      BenchRow row;
      row.structure = "payload64";
      row.mode = "partly";
      row.workload = "chunk=" + std::to_string(size) + "B";
      row.ops = op_count;
      fill_counts(row, region.stats(), wall);
      row.repeat = std::to_string(r);
      runs[si].push_back(row);
    }
  }
  std::vector<BenchRow> rows;
  for (const auto& per_size : runs) rows.push_back(median_row(per_size));
  return rows;
}

std::uint64_t entries_for_bytes(Structure structure, std::uint64_t size_bytes) {
  switch (structure) {
    case Structure::kList: return size_bytes / 128;
    case Structure::kMap: return size_bytes / 128;
    // 64B record plus roughly a twelfth of a 256B leaf.
    case Structure::kTree: return size_bytes / 84;
  }
  return 0;
}

ReconstructionResult run_reconstruction_bench(Structure structure, std::uint64_t size_bytes,
                                              Backend backend, std::uint64_t seed,
                                              double load_factor, std::uint32_t bucket_size) {
  WorkloadSpec spec;
  spec.structure = structure;
  spec.mode = Mode::kPartlyDirect;
  spec.init_count = entries_for_bytes(structure, size_bytes);
  spec.op_count = 0;
  spec.seed = seed;
  spec.load_factor = load_factor;
  spec.bucket_size = bucket_size;
  spec.fence = FencePolicy::batched(1024);
  const Trace trace = generate_trace(spec);
  const RegionLayout layout = layout_for(spec, trace);

  const bool file = backend == Backend::kFileBacked;
  FileGuard guard{region_file("reconstruct"), file};
  std::optional<Region> region =
      Region::create(guard.path, layout.required_capacity(), backend, layout);
  {
    auto handle = init_structure(*region, spec);
    for (std::int64_t k : trace.init_keys) handle->insert(k);
    handle->finish();
  }
  Region target = [&] {
    if (!file) return region->simulate_crash(PendingPolicy::keep_all());
    region.reset();
    return Region::open(guard.path);
  }();
  target.pretouch();

  ReconstructionResult result;
  result.entries = trace.init_keys.size();
  auto handle = reconstruct_structure(target, spec, &result.seconds);

  handle->check();
  const Content want = reference_content(structure, trace, trace.init_keys.size());
  const Content got = handle->content();
  if (got != want) {
    std::ostringstream msg;
    msg << structure_name(structure) << " reconstruction diverged: " << got.size()
        << " items recovered, " << want.size() << " expected";
    for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
      if (!(got[i] == want[i])) {
        msg << ", first difference at index " << i << " (key " << want[i].key << ")";
        break;
      }
    }
    throw Error(Errc::kVerification, msg.str());
  }
  result.verified = true;

  BenchRow& row = result.row;
  row.structure = structure_name(structure);
  row.mode = mode_name(spec.mode);
  row.workload = "reconstruct-" + std::to_string(size_bytes >> 20) + "MiB";
  row.ops = result.entries;
  row.line_flushes = target.stats().line_flushes;
  row.fences = target.stats().fences;
  row.wall_s = result.seconds;
  row.repeat = "0";
  return result;
}

}  // namespace persistkit
