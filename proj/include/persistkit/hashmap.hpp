// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "persistkit/persist_view.hpp"
#include "persistkit/region.hpp"
#include "persistkit/types.hpp"

namespace persistkit {

// Entry slot layout (128B, two lines):
//   line 0: key (8B) | value (56B)       persistent in every mode
//   line 1: hash (4B) | pad | next (8B)  persistent only when fully persistent
// Key 0 is the sentinel of an invalid slot.
inline constexpr std::uint64_t kMapSlot = 128;
inline constexpr std::uint64_t kMapHashField = 64;
inline constexpr std::uint64_t kMapNextField = 72;
inline constexpr std::int64_t kSentinelKey = 0;
inline constexpr double kDefaultLoadFactor = 0.75;

struct MapEntryLine {
  std::int64_t key;
  Payload56 value;
};
static_assert(sizeof(MapEntryLine) == kLineSize);

/// Smallest power of two `bc` with size <= load_factor * bc.
std::uint64_t bucket_count_for(std::uint64_t size, double load_factor);

/// Separate-chaining hashmap whose persistent state is the entry lines and
/// the size. Buckets, hash caches and chain links are rebuilt by scanning
/// the entry arena.
class RecoverableMap {
 public:
  static RecoverableMap init(Region& region, std::uint64_t initial_capacity, Mode mode,
                             double load_factor = kDefaultLoadFactor, FencePolicy fence = {});
  static RecoverableMap reconstruct(Region& region, double load_factor = kDefaultLoadFactor,
                                    FencePolicy fence = {});

  void put(std::int64_t key, const Payload56& value);
  void remove(std::int64_t key);
  std::optional<Payload56> get(std::int64_t key) const;

  std::uint64_t size() const noexcept { return size_; }
  std::uint64_t bucket_count() const noexcept { return buckets_.size(); }
  double load_factor() const noexcept { return load_factor_; }
  Mode mode() const noexcept { return view_.mode(); }

  /// Chain residency, hash caches, acyclic chains and size agreement.
  /// Throws Errc::kCorruption on the first violation.
  void check_invariants() const;

  /// Live pairs sorted by key.
  std::vector<std::pair<std::int64_t, Payload56>> items() const;

  void inject_volatile_bug(VolatileBug bug, std::uint64_t seed);
  void finish() { view_.drain(); }
  PersistView& view() noexcept { return view_; }

 private:
  RecoverableMap(Region& region, Mode mode, double load_factor, FencePolicy fence);

  std::uint64_t bucket_of(std::uint32_t hash) const noexcept {
    return hash & (buckets_.size() - 1);
  }
  Offset next_of(Offset entry) const { return view_.load<Offset>(entry + kMapNextField); }
  void set_next(Offset entry, Offset next) { view_.store(entry + kMapNextField, next); }
  void set_head(std::uint64_t bucket, Offset head);
  void store_size();
  void check_bucket_room(std::uint64_t count) const;
  void rehash(std::uint64_t count);
  void flush_volatile_state();

  PersistView view_;
  double load_factor_;
  Offset base_ = 0;
  std::uint64_t slots_ = 0;
  Offset bucket_base_ = 0;
  std::uint64_t bucket_room_ = 0;
  std::uint64_t size_ = 0;
  std::vector<Offset> buckets_;
};

}  // namespace persistkit
