// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace persistkit {

/// SplitMix64 finalizer. A bijection on 64-bit integers; the constants are
/// part of the on-media contract because hashmap reconstruction recomputes
/// bucket placement from it.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// 32-bit hash cached in hashmap entries.
constexpr std::uint32_t hash_key(std::int64_t key) noexcept {
  const std::uint64_t h = mix64(static_cast<std::uint64_t>(key));
  return static_cast<std::uint32_t>(h ^ (h >> 32));
}

}  // namespace persistkit
