// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstring>
#include <span>
#include <type_traits>
#include <vector>

#include "persistkit/region.hpp"
#include "persistkit/types.hpp"

namespace persistkit {

/// Structure-side access to a region under a persistence mode.
///
/// FullyPersistent and PartlyDirect read and write the region in place.
/// PartlyCheckpoint keeps a volatile mirror of the region: loads and stores
/// hit the mirror, and flush() first copies the covered lines from the mirror
/// into the region, so a flush is the only way state reaches the region.
class PersistView {
 public:
  PersistView(Region& region, Mode mode, FencePolicy fence = {});

  Mode mode() const noexcept { return mode_; }
  Region& region() noexcept { return *region_; }
  const Region& region() const noexcept { return *region_; }
  FencePolicy fence_policy() const noexcept { return fence_; }

  template <class T>
  T load(Offset offset) const {
    static_assert(std::is_trivially_copyable_v<T>);
    if (mirror_.empty()) return region_->load<T>(offset);
    check(offset, sizeof(T));
    T value;
    std::memcpy(&value, mirror_.data() + offset, sizeof(T));
    return value;
  }

  template <class T>
  void store(Offset offset, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    if (mirror_.empty()) {
      region_->store(offset, value);
      return;
    }
    check(offset, sizeof(T));
    std::memcpy(mirror_.data() + offset, &value, sizeof(T));
  }

  void flush(Offset offset, std::uint64_t length);

  /// Marks the end of one structure operation; fences per the fence policy.
  void end_op();
  /// Issues a fence if operations completed since the last one.
  void drain();

  /// Checkpoint mode only: writable staged bytes, used for bug injection.
  std::span<std::byte> staged(Offset offset, std::uint64_t length);

 private:
  void check(Offset offset, std::uint64_t length) const;

  Region* region_;
  Mode mode_;
  FencePolicy fence_;
  std::uint32_t ops_since_fence_ = 0;
  std::vector<std::byte> mirror_;
};

}  // namespace persistkit
