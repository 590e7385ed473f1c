// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "persistkit/list.hpp"

#include <string>

#include "persistkit/hash.hpp"

namespace persistkit {

namespace {

constexpr Offset kHeadField = kListRoot;
constexpr Offset kModeField = kListRoot + 8;

Mode read_mode(std::uint32_t raw) {
  if (raw < 1 || raw > 3) throw Error(Errc::kCorruption, "list root block has no valid mode");
  return static_cast<Mode>(raw);
}

}  // namespace

RecoverableList::RecoverableList(Region& region, Mode mode, FencePolicy fence)
    : view_(region, mode, fence),
      base_(region.arena(ArenaId::kList).base),
      slots_(region.arena_slot_capacity(ArenaId::kList, kListSlot)),
      live_(slots_, false) {}

RecoverableList RecoverableList::init(Region& region, Mode mode, FencePolicy fence) {
  if (region.init_flag(ArenaId::kList)) {
    throw Error(Errc::kAlreadyInitialized, "list already initialized in this region");
  }
  RecoverableList list(region, mode, fence);
  list.view_.store(kHeadField, kNil);
  list.view_.store(kModeField, static_cast<std::uint32_t>(mode));
  list.view_.flush(kListRoot, 16);
  region.fence();
  // The flag goes last so a crash before this point leaves the list absent.
  region.set_init_flag(ArenaId::kList, true);
  region.rebuild_arena(ArenaId::kList, kListSlot, list.live_);
  return list;
}

RecoverableList RecoverableList::reconstruct(Region& region, FencePolicy fence) {
  if (!region.init_flag(ArenaId::kList)) {
    throw Error(Errc::kNotInitialized, "list init flag is clear");
  }
  const Mode mode = read_mode(region.load<std::uint32_t>(kModeField));
  RecoverableList list(region, mode, fence);
  Offset prev = kNil;
  Offset node = list.view_.load<Offset>(kHeadField);
  while (node != kNil) {
    const std::size_t idx = list.slot_index(node);
    if (list.live_[idx]) {
      throw Error(Errc::kCorruption, "forward cycle at list node " + std::to_string(node));
    }
    list.live_[idx] = true;
    list.view_.store(node + kListPrevField, prev);
    ++list.length_;
    prev = node;
    node = list.view_.load<Offset>(node + kListNextField);
  }
  list.head_ = list.view_.load<Offset>(kHeadField);
  list.tail_ = prev;
  region.rebuild_arena(ArenaId::kList, kListSlot, list.live_);
  return list;
}

std::size_t RecoverableList::slot_index(Offset node) const {
  if (node < base_ || (node - base_) % kListSlot != 0 || (node - base_) / kListSlot >= slots_) {
    throw Error(Errc::kCorruption, "link " + std::to_string(node) + " is not a list slot");
  }
  return static_cast<std::size_t>((node - base_) / kListSlot);
}

bool RecoverableList::is_live(Offset node) const {
  if (node < base_ || (node - base_) % kListSlot != 0 || (node - base_) / kListSlot >= slots_) {
    return false;
  }
  return live_[(node - base_) / kListSlot];
}

NodeRef RecoverableList::append(const Payload56& value) {
  Region& region = view_.region();
  const Offset node = region.alloc(ArenaId::kList, kListSlot, kLineSize);
  live_[slot_index(node)] = true;

  view_.store(node, ListNodeLine{value, kNil});
  view_.store(node + kListPrevField, tail_);
  view_.flush(node, kLineSize);
  if (mode() == Mode::kFullyPersistent) view_.flush(node + kListPrevField, sizeof(Offset));

  // New node is flushed before anything points at it.
  if (head_ == kNil) {
    view_.store(kHeadField, node);
    view_.flush(kHeadField, sizeof(Offset));
    head_ = node;
  } else {
    view_.store(tail_ + kListNextField, node);
    view_.flush(tail_ + kListNextField, sizeof(Offset));
  }
  tail_ = node;
  ++length_;
  view_.end_op();
  return {node};
}

void RecoverableList::remove(NodeRef ref) {
  const Offset node = ref.offset;
  if (!is_live(node)) {
    throw Error(Errc::kNotFound, "node " + std::to_string(node) + " is not in the list");
  }
  const Offset pred = view_.load<Offset>(node + kListPrevField);
  const Offset succ = view_.load<Offset>(node + kListNextField);

  if (pred == kNil) {
    view_.store(kHeadField, succ);
    view_.flush(kHeadField, sizeof(Offset));
    head_ = succ;
  } else {
    view_.store(pred + kListNextField, succ);
    view_.flush(pred + kListNextField, sizeof(Offset));
  }
  if (succ != kNil) {
    view_.store(succ + kListPrevField, pred);
    if (mode() == Mode::kFullyPersistent) view_.flush(succ + kListPrevField, sizeof(Offset));
  } else {
    tail_ = pred;
  }
  live_[slot_index(node)] = false;
  view_.region().free(ArenaId::kList, node, kListSlot);
  --length_;
  view_.end_op();
}

Payload56 RecoverableList::value(NodeRef node) const {
  return view_.load<ListNodeLine>(node.offset).value;
}

NodeRef RecoverableList::next(NodeRef node) const {
  return {view_.load<Offset>(node.offset + kListNextField)};
}

NodeRef RecoverableList::prev(NodeRef node) const {
  return {view_.load<Offset>(node.offset + kListPrevField)};
}

std::vector<Payload56> RecoverableList::values_forward() const {
  std::vector<Payload56> out;
  out.reserve(length_);
  for (Offset n = head_; n != kNil; n = view_.load<Offset>(n + kListNextField)) {
    if (out.size() > slots_) throw Error(Errc::kCorruption, "forward cycle in list");
    out.push_back(view_.load<ListNodeLine>(n).value);
  }
  return out;
}

std::vector<Payload56> RecoverableList::values_backward() const {
  std::vector<Payload56> out;
  out.reserve(length_);
  for (Offset n = tail_; n != kNil; n = view_.load<Offset>(n + kListPrevField)) {
    if (out.size() > slots_) throw Error(Errc::kCorruption, "backward cycle in list");
    out.push_back(view_.load<ListNodeLine>(n).value);
  }
  return out;
}

void RecoverableList::inject_volatile_bug(VolatileBug bug, std::uint64_t seed) {
  if (mode() != Mode::kPartlyCheckpoint) {
    throw Error(Errc::kUnsupported, "direct modes write through; bugs would reach the region");
  }
  if (length_ == 0 && bug != VolatileBug::kDanglingTail) return;
  auto nth_node = [&](std::uint64_t k) {
    Offset n = head_;
    for (std::uint64_t i = 0; i < k; ++i) n = view_.load<Offset>(n + kListNextField);
    return n;
  };
  switch (bug) {
    case VolatileBug::kSelfLoopNext: {
      const Offset n = nth_node(mix64(seed) % length_);
      view_.store(n + kListNextField, n);
      break;
    }
    case VolatileBug::kScrambledPrev: {
      std::uint64_t i = 0;
      for (Offset n = head_; n != kNil; n = view_.load<Offset>(n + kListNextField), ++i) {
        if (mix64(seed + i) & 1) view_.store(n + kListPrevField, mix64(seed ^ n) | 1);
      }
      break;
    }
    case VolatileBug::kDanglingTail:
      tail_ = base_ + (mix64(seed) % (slots_ + 1)) * kListSlot + 8;
      break;
    case VolatileBug::kWrongHashCache:
      throw Error(Errc::kUnsupported, "list nodes carry no hash cache");
  }
}

}  // namespace persistkit
