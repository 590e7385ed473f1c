// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "persistkit/region.hpp"
#include "persistkit/types.hpp"

namespace persistkit {

/// Insert/delete ratio. The trace repeats `inserts` inserts then `deletes`
/// deletes until op_count is reached.
struct OpMix {
  std::uint32_t inserts = 1;
  std::uint32_t deletes = 0;

  /// Accepts "A:B", "insert-only" and "delete-only".
  static OpMix parse(std::string_view text);
  std::string label() const;
  friend bool operator==(const OpMix&, const OpMix&) = default;
};

struct WorkloadSpec {
  Structure structure = Structure::kList;
  Mode mode = Mode::kPartlyDirect;
  OpMix mix;
  std::uint64_t op_count = 0;
  std::uint64_t init_count = 0;
  std::uint64_t seed = 1;
  FencePolicy fence;
  double load_factor = 0.75;
  std::uint32_t bucket_size = 19;
};

struct Op {
  enum class Kind : std::uint8_t { kInsert, kDelete };
  Kind kind;
  std::int64_t key;
  friend bool operator==(const Op&, const Op&) = default;
};

struct Trace {
  std::vector<std::int64_t> init_keys;
  std::vector<Op> ops;
};

/// Deterministic for a fixed spec. Keys are distinct and never 0; deletes
/// pick a uniformly random live key. Throws kInvalidArgument when a delete
/// would hit an empty structure.
Trace generate_trace(const WorkloadSpec& spec);

/// Largest number of simultaneously live keys over the trace.
std::uint64_t peak_live(const Trace& trace);

/// Exact-fit region layout for a trace on the spec's structure.
RegionLayout layout_for(const WorkloadSpec& spec, const Trace& trace);

/// Arena whose init flag marks the structure as present.
ArenaId root_arena(Structure s) noexcept;

Structure parse_structure(std::string_view text);
Mode parse_mode(std::string_view text);
Backend parse_backend(std::string_view text);
/// "per-op" or "batch=K".
FencePolicy parse_fence(std::string_view text);
std::string fence_label(FencePolicy fence);

}  // namespace persistkit
