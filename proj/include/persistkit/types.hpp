// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace persistkit {

/// Region-relative byte offset. Offset 0 is the region header, so it doubles
/// as the NIL link for every structure.
using Offset = std::uint64_t;
inline constexpr Offset kNil = 0;

inline constexpr std::uint64_t kLineSize = 64;
inline constexpr std::uint64_t kDeviceBlock = 256;

enum class Backend { kFileBacked, kSimulatedCrash };

enum class Mode : std::uint32_t {
  kFullyPersistent = 1,
  kPartlyDirect = 2,
  kPartlyCheckpoint = 3,
};

enum class Structure { kList, kTree, kMap };

std::string_view mode_name(Mode mode) noexcept;
std::string_view structure_name(Structure s) noexcept;
std::string_view backend_name(Backend b) noexcept;

inline bool is_partly(Mode mode) noexcept { return mode != Mode::kFullyPersistent; }

inline constexpr std::uint64_t line_of(Offset off) noexcept { return off / kLineSize; }

/// 56B payload shared by list nodes and hashmap entries (seven 8B words).
struct Payload56 {
  std::array<std::int64_t, 7> words{};
  friend bool operator==(const Payload56&, const Payload56&) = default;
};
static_assert(sizeof(Payload56) == 56);

/// 64B record payload of the B+Tree (eight 8B words, one cache line).
struct Payload64 {
  std::array<std::int64_t, 8> words{};
  friend bool operator==(const Payload64&, const Payload64&) = default;
};
static_assert(sizeof(Payload64) == 64);

/// Deterministic payload generators used by workloads and tests.
Payload56 make_payload56(std::int64_t seed_word) noexcept;
Payload64 make_payload64(std::int64_t seed_word) noexcept;

/// How often a structure issues its trailing fence.
struct FencePolicy {
  std::uint32_t ops_per_fence = 1;

  static FencePolicy per_op() noexcept { return {}; }
  static FencePolicy batched(std::uint32_t k) noexcept { return {k == 0 ? 1u : k}; }
};

/// Volatile corruption kinds used to exercise checkpoint isolation.
enum class VolatileBug { kSelfLoopNext, kScrambledPrev, kWrongHashCache, kDanglingTail };

std::string_view bug_name(VolatileBug bug) noexcept;

}  // namespace persistkit
