// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "persistkit/persist_view.hpp"
#include "persistkit/region.hpp"
#include "persistkit/types.hpp"

namespace persistkit {

// Slot layout (128B, two lines):
//   line 0: value (56B) | next (8B)      persistent in every mode
//   line 1: prev (8B) | padding          persistent only when fully persistent
inline constexpr std::uint64_t kListSlot = 128;
inline constexpr std::uint64_t kListNextField = 56;
inline constexpr std::uint64_t kListPrevField = 64;

struct ListNodeLine {
  Payload56 value;
  Offset next;
};
static_assert(sizeof(ListNodeLine) == kLineSize);

struct NodeRef {
  Offset offset = kNil;
  explicit operator bool() const noexcept { return offset != kNil; }
  friend bool operator==(NodeRef, NodeRef) = default;
};

/// Doubly linked list whose persistent state is only value + next.
///
/// prev links, the tail handle and the length are volatile and rebuilt by
/// reconstruct() in a single forward pass from the persistent head.
class RecoverableList {
 public:
  static RecoverableList init(Region& region, Mode mode, FencePolicy fence = {});
  static RecoverableList reconstruct(Region& region, FencePolicy fence = {});

  NodeRef append(const Payload56& value);
  void remove(NodeRef node);

  Payload56 value(NodeRef node) const;
  NodeRef head() const noexcept { return {head_}; }
  NodeRef tail() const noexcept { return {tail_}; }
  NodeRef next(NodeRef node) const;
  NodeRef prev(NodeRef node) const;
  std::uint64_t length() const noexcept { return length_; }
  Mode mode() const noexcept { return view_.mode(); }

  std::vector<Payload56> values_forward() const;
  std::vector<Payload56> values_backward() const;

  /// Slots currently live (reachable) in the list arena.
  std::uint64_t live_slot_count() const noexcept { return length_; }

  /// Corrupts volatile or staged state. PartlyCheckpoint only.
  void inject_volatile_bug(VolatileBug bug, std::uint64_t seed);

  /// Fences any operations still waiting on a batched fence.
  void finish() { view_.drain(); }

  PersistView& view() noexcept { return view_; }

 private:
  RecoverableList(Region& region, Mode mode, FencePolicy fence);
  std::size_t slot_index(Offset node) const;
  bool is_live(Offset node) const;

  PersistView view_;
  Offset base_ = 0;
  std::uint64_t slots_ = 0;
  Offset head_ = kNil;
  Offset tail_ = kNil;
  std::uint64_t length_ = 0;
  std::vector<bool> live_;
};

}  // namespace persistkit
