// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "persistkit/bptree.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <string>

#include "persistkit/hash.hpp"

namespace persistkit {

namespace {

constexpr Offset kLeftmostField = kTreeRoot;
constexpr Offset kRootField = kTreeRoot + 8;
constexpr Offset kModeField = kTreeRoot + 16;
constexpr std::uint32_t kMinChildren = kInternalMinKeys + 1;

constexpr std::uint32_t cut(std::uint32_t length) {
  return length % 2 == 0 ? length / 2 : length / 2 + 1;
}

TreeNode blank_node(bool leaf) {
  TreeNode n{};
  n.is_leaf = leaf ? 1 : 0;
  return n;
}

Mode read_mode(std::uint32_t raw) {
  if (raw < 1 || raw > 3) throw Error(Errc::kCorruption, "tree root block has no valid mode");
  return static_cast<Mode>(raw);
}

std::uint64_t available_slots(const Region& region, ArenaId id, std::uint64_t slot) {
  const auto& info = region.arena(id);
  return region.arena_free_count(id) + (info.base + info.length - region.arena_cursor(id)) / slot;
}

}  // namespace

double TreeStats::measured_reduction() const noexcept {
  if (leaves == 0) return 0.0;
  return static_cast<double>(leaves + internal_nodes) / static_cast<double>(leaves);
}

double TreeStats::formula_reduction() const noexcept {
  if (leaves == 0 || avg_internal_fanout <= 1.0) return 1.0;
  const double n = static_cast<double>(leaves);
  const double t = avg_internal_fanout;
  return (1.0 - 1.0 / n) * (t / (t - 1.0));
}

std::vector<std::uint32_t> pack_buckets(std::uint64_t children, std::uint32_t bucket_size) {
  std::vector<std::uint32_t> sizes;
  if (children <= 1) return sizes;
  const std::uint64_t count = (children + bucket_size - 1) / bucket_size;
  sizes.assign(count, bucket_size);
  sizes.back() = static_cast<std::uint32_t>(children - bucket_size * (count - 1));
  if (count > 1 && sizes.back() < kMinChildren) {
    const std::uint32_t total = sizes[count - 2] + sizes[count - 1];
    if (total <= kTreeOrder) {
      sizes.pop_back();
      sizes.back() = total;
    } else {
      sizes[count - 2] = total - total / 2;
      sizes[count - 1] = total / 2;
    }
  }
  return sizes;
}

RecoverableTree::RecoverableTree(Region& region, Mode mode, FencePolicy fence)
    : view_(region, mode, fence),
      node_base_(region.arena(ArenaId::kTreeNodes).base),
      node_slots_(region.arena_slot_capacity(ArenaId::kTreeNodes, kTreeNodeSize)),
      record_base_(region.arena(ArenaId::kTreeRecords).base),
      record_slots_(region.arena_slot_capacity(ArenaId::kTreeRecords, kTreeRecordSize)) {}

RecoverableTree RecoverableTree::init(Region& region, Mode mode, FencePolicy fence) {
  if (region.init_flag(ArenaId::kTreeNodes)) {
    throw Error(Errc::kAlreadyInitialized, "tree already initialized in this region");
  }
  RecoverableTree tree(region, mode, fence);
  tree.view_.store(kLeftmostField, kNil);
  tree.view_.store(kRootField, kNil);
  tree.view_.store(kModeField, static_cast<std::uint32_t>(mode));
  tree.view_.flush(kTreeRoot, 24);
  region.fence();
  region.set_init_flag(ArenaId::kTreeNodes, true);
  region.rebuild_arena(ArenaId::kTreeNodes, kTreeNodeSize, {});
  region.rebuild_arena(ArenaId::kTreeRecords, kTreeRecordSize, {});
  return tree;
}

// ---------------------------------------------------------------------------
// Per-operation bookkeeping

void RecoverableTree::put(Offset off, const TreeNode& n) {
  const bool seen = std::any_of(touched_.begin(), touched_.end(),
                                [off](const Touched& t) { return t.off == off; });
  if (!seen) touched_.push_back({off, get(off), false});
  view_.store(off, n);
}

Offset RecoverableTree::new_node(bool leaf) {
  const Offset off = view_.region().alloc(ArenaId::kTreeNodes, kTreeNodeSize, kTreeNodeSize);
  touched_.push_back({off, get(off), true});
  view_.store(off, blank_node(leaf));
  return off;
}

void RecoverableTree::drop_node(Offset off) { dropped_.push_back(off); }

void RecoverableTree::set_parent(Offset child, Offset parent) {
  TreeNode n = get(child);
  if (n.parent == to_link(parent)) return;
  n.parent = to_link(parent);
  put(child, n);
}

void RecoverableTree::commit() {
  const bool partly = is_partly(mode());
  auto flush_node = [&](const Touched& t) {
    if (std::find(dropped_.begin(), dropped_.end(), t.off) != dropped_.end()) return;
    TreeNode now = get(t.off);
    if (partly && !now.is_leaf) return;
    if (t.fresh) {
      view_.flush(t.off, kTreeNodeSize);
      return;
    }
    TreeNode before = t.before;
    if (partly) {
      before.parent = 0;
      now.parent = 0;
    }
    const auto* a = reinterpret_cast<const std::byte*>(&before);
    const auto* b = reinterpret_cast<const std::byte*>(&now);
    for (std::uint64_t line = 0; line < kTreeNodeSize / kLineSize; ++line) {
      if (std::memcmp(a + line * kLineSize, b + line * kLineSize, kLineSize) != 0) {
        view_.flush(t.off + line * kLineSize, kLineSize);
      }
    }
  };
  // Fresh nodes first: nothing durable may point at an unflushed node.
  for (const auto& t : touched_) {
    if (t.fresh) flush_node(t);
  }
  for (const auto& t : touched_) {
    if (!t.fresh) flush_node(t);
  }
  const bool root_moved = mode() == Mode::kFullyPersistent && root_ != durable_root_;
  if (leftmost_ != durable_leftmost_ || root_moved) {
    view_.store(kLeftmostField, leftmost_);
    if (mode() == Mode::kFullyPersistent) view_.store(kRootField, root_);
    view_.flush(kTreeRoot, 16);
    durable_leftmost_ = leftmost_;
    durable_root_ = root_;
  }
  for (Offset off : dropped_) view_.region().free(ArenaId::kTreeNodes, off, kTreeNodeSize);
  touched_.clear();
  dropped_.clear();
  view_.end_op();
}

std::uint64_t RecoverableTree::leaf_depth() const {
  std::uint64_t depth = 0;
  for (Offset n = root_; n != kNil;) {
    ++depth;
    const TreeNode node = get(n);
    if (node.is_leaf) break;
    n = from_link(node.links[0]);
  }
  return depth;
}

void RecoverableTree::ensure_room_for_insert() const {
  const Region& region = view_.region();
  if (available_slots(region, ArenaId::kTreeRecords, kTreeRecordSize) < 1 ||
      available_slots(region, ArenaId::kTreeNodes, kTreeNodeSize) < leaf_depth() + 1) {
    throw Error(Errc::kOutOfSpace, "tree arenas cannot absorb another insert");
  }
}

// ---------------------------------------------------------------------------
// Lookup

Offset RecoverableTree::find_leaf(std::int64_t key) const {
  Offset off = root_;
  TreeNode n = get(off);
  while (!n.is_leaf) {
    std::uint32_t i = 0;
    while (i < n.num_keys && key >= n.keys[i]) ++i;
    off = from_link(n.links[i]);
    n = get(off);
  }
  return off;
}

std::optional<Payload64> RecoverableTree::find(std::int64_t key) const {
  if (root_ == kNil) return std::nullopt;
  const TreeNode leaf = get(find_leaf(key));
  for (std::uint32_t i = 0; i < leaf.num_keys; ++i) {
    if (leaf.keys[i] == key) return view_.load<Payload64>(from_link(leaf.links[i]));
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Insertion

void RecoverableTree::insert(std::int64_t key, const Payload64& value) {
  Offset leaf_off = kNil;
  if (root_ != kNil) {
    leaf_off = find_leaf(key);
    const TreeNode leaf = get(leaf_off);
    for (std::uint32_t i = 0; i < leaf.num_keys; ++i) {
      if (leaf.keys[i] == key) {
        throw Error(Errc::kDuplicateKey, "key " + std::to_string(key) + " already present");
      }
    }
  }
  ensure_room_for_insert();

  Region& region = view_.region();
  const Offset record = region.alloc(ArenaId::kTreeRecords, kTreeRecordSize, kTreeRecordSize);
  view_.store(record, value);
  view_.flush(record, kTreeRecordSize);
  const std::uint32_t record_link = to_link(record);

  if (root_ == kNil) {
    const Offset off = new_node(true);
    TreeNode n = blank_node(true);
    n.keys[0] = key;
    n.links[0] = record_link;
    n.num_keys = 1;
    put(off, n);
    root_ = off;
    leftmost_ = off;
  } else {
    TreeNode leaf = get(leaf_off);
    if (leaf.num_keys < kTreeMaxKeys) {
      std::uint32_t pos = 0;
      while (pos < leaf.num_keys && leaf.keys[pos] < key) ++pos;
      for (std::uint32_t i = leaf.num_keys; i > pos; --i) {
        leaf.keys[i] = leaf.keys[i - 1];
        leaf.links[i] = leaf.links[i - 1];
      }
      leaf.keys[pos] = key;
      leaf.links[pos] = record_link;
      ++leaf.num_keys;
      put(leaf_off, leaf);
    } else {
      insert_into_leaf_after_splitting(leaf_off, key, record_link);
    }
  }
  commit();
}

void RecoverableTree::insert_into_leaf_after_splitting(Offset leaf_off, std::int64_t key,
                                                       std::uint32_t record) {
  TreeNode leaf = get(leaf_off);
  std::int64_t keys[kTreeOrder];
  std::uint32_t links[kTreeOrder];
  std::uint32_t pos = 0;
  while (pos < kTreeMaxKeys && leaf.keys[pos] < key) ++pos;
  for (std::uint32_t i = 0, j = 0; i < leaf.num_keys; ++i, ++j) {
    if (j == pos) ++j;
    keys[j] = leaf.keys[i];
    links[j] = leaf.links[i];
  }
  keys[pos] = key;
  links[pos] = record;

  const Offset right_off = new_node(true);
  TreeNode right = blank_node(true);
  const std::uint32_t split = cut(kTreeMaxKeys);
  leaf.num_keys = 0;
  for (std::uint32_t i = 0; i < split; ++i) {
    leaf.keys[i] = keys[i];
    leaf.links[i] = links[i];
    ++leaf.num_keys;
  }
  for (std::uint32_t i = split; i < kTreeOrder; ++i) {
    right.keys[i - split] = keys[i];
    right.links[i - split] = links[i];
    ++right.num_keys;
  }
  right.next = leaf.next;
  leaf.next = to_link(right_off);
  right.parent = leaf.parent;
  put(leaf_off, leaf);
  put(right_off, right);
  insert_into_parent(leaf_off, right.keys[0], right_off);
}

void RecoverableTree::insert_into_parent(Offset left, std::int64_t key, Offset right) {
  const Offset parent_off = from_link(get(left).parent);
  if (parent_off == kNil) {
    const Offset root = new_node(false);
    TreeNode n = blank_node(false);
    n.keys[0] = key;
    n.links[0] = to_link(left);
    n.links[1] = to_link(right);
    n.num_keys = 1;
    put(root, n);
    set_parent(left, root);
    set_parent(right, root);
    root_ = root;
    return;
  }
  TreeNode parent = get(parent_off);
  std::uint32_t left_index = 0;
  while (left_index <= parent.num_keys && parent.links[left_index] != to_link(left)) ++left_index;
  if (left_index > parent.num_keys) {
    throw Error(Errc::kCorruption, "child missing from its parent during insert");
  }
  if (parent.num_keys < kTreeMaxKeys) {
    for (std::uint32_t i = parent.num_keys; i > left_index; --i) {
      parent.links[i + 1] = parent.links[i];
      parent.keys[i] = parent.keys[i - 1];
    }
    parent.links[left_index + 1] = to_link(right);
    parent.keys[left_index] = key;
    ++parent.num_keys;
    put(parent_off, parent);
    set_parent(right, parent_off);
    return;
  }
  insert_into_node_after_splitting(parent_off, left_index, key, right);
}

void RecoverableTree::insert_into_node_after_splitting(Offset old_off, std::uint32_t left_index,
                                                       std::int64_t key, Offset right) {
  TreeNode old = get(old_off);
  std::int64_t keys[kTreeOrder];
  std::uint32_t links[kTreeOrder + 1];
  for (std::uint32_t i = 0, j = 0; i < old.num_keys + 1u; ++i, ++j) {
    if (j == left_index + 1) ++j;
    links[j] = old.links[i];
  }
  for (std::uint32_t i = 0, j = 0; i < old.num_keys; ++i, ++j) {
    if (j == left_index) ++j;
    keys[j] = old.keys[i];
  }
  links[left_index + 1] = to_link(right);
  keys[left_index] = key;

  const std::uint32_t split = cut(kTreeOrder);
  const Offset new_off = new_node(false);
  TreeNode fresh = blank_node(false);
  old.num_keys = 0;
  std::uint32_t i = 0;
  for (; i < split - 1; ++i) {
    old.links[i] = links[i];
    old.keys[i] = keys[i];
    ++old.num_keys;
  }
  old.links[i] = links[i];
  const std::int64_t k_prime = keys[split - 1];
  std::uint32_t j = 0;
  for (++i; i < kTreeOrder; ++i, ++j) {
    fresh.links[j] = links[i];
    fresh.keys[j] = keys[i];
    ++fresh.num_keys;
  }
  fresh.links[j] = links[kTreeOrder];
  fresh.parent = old.parent;
  put(old_off, old);
  put(new_off, fresh);
  for (std::uint32_t c = 0; c <= fresh.num_keys; ++c) set_parent(from_link(fresh.links[c]), new_off);
  insert_into_parent(old_off, k_prime, new_off);
}

// ---------------------------------------------------------------------------
// Deletion

void RecoverableTree::erase(std::int64_t key) {
  if (root_ == kNil) throw Error(Errc::kNotFound, "key " + std::to_string(key) + " not present");
  const Offset leaf_off = find_leaf(key);
  const TreeNode leaf = get(leaf_off);
  std::uint32_t idx = 0;
  while (idx < leaf.num_keys && leaf.keys[idx] != key) ++idx;
  if (idx == leaf.num_keys) {
    throw Error(Errc::kNotFound, "key " + std::to_string(key) + " not present");
  }
  const Offset record = from_link(leaf.links[idx]);
  delete_entry(leaf_off, idx, idx);
  view_.region().free(ArenaId::kTreeRecords, record, kTreeRecordSize);
  commit();
}

void RecoverableTree::delete_entry(Offset n_off, std::uint32_t key_index,
                                   std::uint32_t link_index) {
  TreeNode n = get(n_off);
  for (std::uint32_t i = key_index + 1; i < n.num_keys; ++i) n.keys[i - 1] = n.keys[i];
  const std::uint32_t link_count = n.is_leaf ? n.num_keys : n.num_keys + 1;
  for (std::uint32_t i = link_index + 1; i < link_count; ++i) n.links[i - 1] = n.links[i];
  --n.num_keys;
  put(n_off, n);

  if (n_off == root_) {
    adjust_root();
    return;
  }
  const std::uint32_t min_keys = n.is_leaf ? kLeafMinKeys : kInternalMinKeys;
  if (n.num_keys >= min_keys) return;

  const Offset parent_off = from_link(n.parent);
  const TreeNode parent = get(parent_off);
  std::uint32_t pos = 0;
  while (pos <= parent.num_keys && parent.links[pos] != to_link(n_off)) ++pos;
  if (pos > parent.num_keys) {
    throw Error(Errc::kCorruption, "child missing from its parent during delete");
  }
  const int neighbor_index = static_cast<int>(pos) - 1;
  const std::uint32_t k_prime_index = neighbor_index == -1 ? 0 : static_cast<std::uint32_t>(neighbor_index);
  const std::int64_t k_prime = parent.keys[k_prime_index];
  const Offset neighbor_off = neighbor_index == -1 ? from_link(parent.links[1])
                                                   : from_link(parent.links[neighbor_index]);
  const std::uint32_t capacity = n.is_leaf ? kTreeOrder : kTreeOrder - 1;
  if (get(neighbor_off).num_keys + n.num_keys < capacity) {
    coalesce(n_off, neighbor_off, neighbor_index, k_prime_index, k_prime);
  } else {
    redistribute(n_off, neighbor_off, neighbor_index, k_prime_index, k_prime);
  }
}

void RecoverableTree::adjust_root() {
  const TreeNode root = get(root_);
  if (root.num_keys > 0) return;
  if (!root.is_leaf) {
    const Offset child = from_link(root.links[0]);
    set_parent(child, kNil);
    drop_node(root_);
    root_ = child;
  } else {
    drop_node(root_);
    root_ = kNil;
    leftmost_ = kNil;
  }
}

void RecoverableTree::coalesce(Offset n_off, Offset neighbor_off, int neighbor_index,
                               std::uint32_t k_prime_index, std::int64_t k_prime) {
  // Always fold the right node into the left one; the leftmost leaf survives.
  if (neighbor_index == -1) std::swap(n_off, neighbor_off);
  TreeNode left = get(neighbor_off);
  const TreeNode right = get(n_off);
  const Offset parent_off = from_link(right.parent);
  const std::uint32_t ins = left.num_keys;
  if (!right.is_leaf) {
    left.keys[ins] = k_prime;
    ++left.num_keys;
    for (std::uint32_t j = 0; j < right.num_keys; ++j) {
      left.keys[ins + 1 + j] = right.keys[j];
      left.links[ins + 1 + j] = right.links[j];
      ++left.num_keys;
    }
    left.links[ins + 1 + right.num_keys] = right.links[right.num_keys];
    put(neighbor_off, left);
    for (std::uint32_t j = 0; j <= right.num_keys; ++j) {
      set_parent(from_link(right.links[j]), neighbor_off);
    }
  } else {
    for (std::uint32_t j = 0; j < right.num_keys; ++j) {
      left.keys[ins + j] = right.keys[j];
      left.links[ins + j] = right.links[j];
      ++left.num_keys;
    }
    left.next = right.next;
    put(neighbor_off, left);
  }
  drop_node(n_off);
  delete_entry(parent_off, k_prime_index, k_prime_index + 1);
}

void RecoverableTree::redistribute(Offset n_off, Offset neighbor_off, int neighbor_index,
                                   std::uint32_t k_prime_index, std::int64_t k_prime) {
  TreeNode n = get(n_off);
  TreeNode nb = get(neighbor_off);
  const Offset parent_off = from_link(n.parent);
  TreeNode parent = get(parent_off);
  Offset moved_child = kNil;

  if (neighbor_index != -1) {
    // Left neighbour: its last entry becomes n's first.
    if (!n.is_leaf) n.links[n.num_keys + 1] = n.links[n.num_keys];
    for (std::uint32_t i = n.num_keys; i > 0; --i) {
      n.keys[i] = n.keys[i - 1];
      n.links[i] = n.links[i - 1];
    }
    if (!n.is_leaf) {
      n.links[0] = nb.links[nb.num_keys];
      moved_child = from_link(n.links[0]);
      n.keys[0] = k_prime;
      parent.keys[k_prime_index] = nb.keys[nb.num_keys - 1];
    } else {
      n.links[0] = nb.links[nb.num_keys - 1];
      n.keys[0] = nb.keys[nb.num_keys - 1];
      parent.keys[k_prime_index] = n.keys[0];
    }
  } else {
    // Right neighbour: its first entry becomes n's last.
    if (n.is_leaf) {
      n.keys[n.num_keys] = nb.keys[0];
      n.links[n.num_keys] = nb.links[0];
      parent.keys[k_prime_index] = nb.keys[1];
    } else {
      n.keys[n.num_keys] = k_prime;
      n.links[n.num_keys + 1] = nb.links[0];
      moved_child = from_link(nb.links[0]);
      parent.keys[k_prime_index] = nb.keys[0];
    }
    std::uint32_t i = 0;
    for (; i + 1 < nb.num_keys; ++i) {
      nb.keys[i] = nb.keys[i + 1];
      nb.links[i] = nb.links[i + 1];
    }
    if (!n.is_leaf) nb.links[i] = nb.links[i + 1];
  }
  ++n.num_keys;
  --nb.num_keys;
  put(n_off, n);
  put(neighbor_off, nb);
  put(parent_off, parent);
  if (moved_child != kNil) set_parent(moved_child, n_off);
}

// ---------------------------------------------------------------------------
// Reconstruction

RecoverableTree RecoverableTree::reconstruct(Region& region, std::uint32_t bucket_size,
                                             FencePolicy fence) {
  if (bucket_size < kMinBucketSize || bucket_size > kTreeOrder) {
    throw Error(Errc::kInvalidArgument, "bucket size must lie in [" +
                                            std::to_string(kMinBucketSize) + ", " +
                                            std::to_string(kTreeOrder) + "]");
  }
  if (!region.init_flag(ArenaId::kTreeNodes)) {
    throw Error(Errc::kNotInitialized, "tree init flag is clear");
  }
  const Mode mode = read_mode(region.load<std::uint32_t>(kModeField));
  RecoverableTree tree(region, mode, fence);
  PersistView& view = tree.view_;

  const Offset stored_leftmost = view.load<Offset>(kLeftmostField);
  tree.durable_leftmost_ = stored_leftmost;
  tree.durable_root_ = mode == Mode::kFullyPersistent ? view.load<Offset>(kRootField) : kNil;

  std::vector<bool> live_nodes(tree.node_slots_, false);
  std::vector<bool> live_records(tree.record_slots_, false);
  std::vector<Offset> level;
  std::vector<std::int64_t> mins;
  std::optional<std::int64_t> last_key;

  for (Offset cur = stored_leftmost; cur != kNil;) {
    if (cur < tree.node_base_ || (cur - tree.node_base_) % kTreeNodeSize != 0 ||
        (cur - tree.node_base_) / kTreeNodeSize >= tree.node_slots_) {
      throw Error(Errc::kCorruption, "leaf link " + std::to_string(cur) + " is not a node slot");
    }
    const auto idx = static_cast<std::size_t>((cur - tree.node_base_) / kTreeNodeSize);
    if (live_nodes[idx]) throw Error(Errc::kCorruption, "cycle in leaf chain");
    const TreeNode leaf = view.load<TreeNode>(cur);
    if (!leaf.is_leaf || leaf.num_keys > kTreeMaxKeys) {
      throw Error(Errc::kCorruption, "invalid leaf at " + std::to_string(cur));
    }
    if (leaf.num_keys == 0) {
      if (cur == stored_leftmost && leaf.next == 0) break;  // initialized but empty
      throw Error(Errc::kCorruption, "empty leaf inside the leaf chain");
    }
    for (std::uint32_t i = 0; i < leaf.num_keys; ++i) {
      if (last_key && leaf.keys[i] <= *last_key) {
        throw Error(Errc::kCorruption, "leaf chain key order violated at key " +
                                           std::to_string(leaf.keys[i]));
      }
      last_key = leaf.keys[i];
      const Offset rec = from_link(leaf.links[i]);
      if (rec < tree.record_base_ || (rec - tree.record_base_) % kTreeRecordSize != 0 ||
          (rec - tree.record_base_) / kTreeRecordSize >= tree.record_slots_) {
        throw Error(Errc::kCorruption, "record link " + std::to_string(rec) + " is invalid");
      }
      const auto ridx = static_cast<std::size_t>((rec - tree.record_base_) / kTreeRecordSize);
      if (live_records[ridx]) throw Error(Errc::kCorruption, "record shared by two keys");
      live_records[ridx] = true;
    }
    live_nodes[idx] = true;
    level.push_back(cur);
    mins.push_back(leaf.keys[0]);
    cur = from_link(leaf.next);
  }
  region.rebuild_arena(ArenaId::kTreeNodes, kTreeNodeSize, live_nodes);
  region.rebuild_arena(ArenaId::kTreeRecords, kTreeRecordSize, live_records);

  if (level.empty()) {
    tree.root_ = kNil;
    tree.leftmost_ = kNil;
    return tree;
  }
  tree.leftmost_ = level.front();

  std::vector<Offset> internals;
  while (level.size() > 1) {
    const auto sizes = pack_buckets(level.size(), bucket_size);
    std::vector<Offset> next_level;
    std::vector<std::int64_t> next_mins;
    std::size_t pos = 0;
    for (std::uint32_t count : sizes) {
      const Offset off = region.alloc(ArenaId::kTreeNodes, kTreeNodeSize, kTreeNodeSize);
      TreeNode n = blank_node(false);
      for (std::uint32_t c = 0; c < count; ++c) {
        n.links[c] = to_link(level[pos + c]);
        if (c > 0) n.keys[c - 1] = mins[pos + c];
        TreeNode child = view.load<TreeNode>(level[pos + c]);
        child.parent = to_link(off);
        view.store(level[pos + c], child);
      }
      n.num_keys = count - 1;
      view.store(off, n);
      internals.push_back(off);
      next_level.push_back(off);
      next_mins.push_back(mins[pos]);
      pos += count;
    }
    level = std::move(next_level);
    mins = std::move(next_mins);
  }
  tree.root_ = level.front();
  TreeNode root = view.load<TreeNode>(tree.root_);
  root.parent = 0;
  view.store(tree.root_, root);

  if (mode == Mode::kFullyPersistent) {
    for (Offset off : internals) view.flush(off, kTreeNodeSize);
    for (Offset leaf : tree.leaf_offsets()) view.flush(leaf, kLineSize);
    view.store(kLeftmostField, tree.leftmost_);
    view.store(kRootField, tree.root_);
    view.flush(kTreeRoot, 16);
    region.fence();
    tree.durable_root_ = tree.root_;
    tree.durable_leftmost_ = tree.leftmost_;
  }
  return tree;
}

// ---------------------------------------------------------------------------
// Inspection

std::vector<Offset> RecoverableTree::leaf_offsets() const {
  std::vector<Offset> out;
  for (Offset cur = leftmost_; cur != kNil; cur = from_link(get(cur).next)) {
    if (out.size() > node_slots_) throw Error(Errc::kCorruption, "cycle in leaf chain");
    out.push_back(cur);
  }
  return out;
}

std::vector<std::pair<std::int64_t, Payload64>> RecoverableTree::items() const {
  std::vector<std::pair<std::int64_t, Payload64>> out;
  for (Offset leaf_off : leaf_offsets()) {
    const TreeNode leaf = get(leaf_off);
    for (std::uint32_t i = 0; i < leaf.num_keys; ++i) {
      out.emplace_back(leaf.keys[i], view_.load<Payload64>(from_link(leaf.links[i])));
    }
  }
  return out;
}

TreeStats RecoverableTree::stats() const {
  TreeStats s;
  if (root_ == kNil) return s;
  std::uint64_t children = 0;
  std::vector<Offset> level{root_};
  while (!level.empty()) {
    ++s.height;
    std::vector<Offset> next;
    for (Offset off : level) {
      const TreeNode n = get(off);
      if (n.is_leaf) {
        ++s.leaves;
        s.keys += n.num_keys;
        continue;
      }
      ++s.internal_nodes;
      children += n.num_keys + 1;
      for (std::uint32_t c = 0; c <= n.num_keys; ++c) next.push_back(from_link(n.links[c]));
    }
    level = std::move(next);
  }
  if (s.internal_nodes > 0) {
    s.avg_internal_fanout = static_cast<double>(children) / static_cast<double>(s.internal_nodes);
  }
  return s;
}

void RecoverableTree::check_invariants() const {
  if (root_ == kNil) {
    if (leftmost_ != kNil) throw Error(Errc::kCorruption, "empty tree with a leftmost leaf");
    return;
  }
  std::vector<Offset> in_order;
  std::optional<std::uint64_t> leaf_level;
  const std::function<void(Offset, Offset, std::uint64_t, std::optional<std::int64_t>,
                           std::optional<std::int64_t>)>
      visit = [&](Offset off, Offset parent, std::uint64_t depth,
                  std::optional<std::int64_t> lo, std::optional<std::int64_t> hi) {
        const TreeNode n = get(off);
        const std::string where = " at node " + std::to_string(off);
        if (n.parent != to_link(parent)) throw Error(Errc::kCorruption, "bad parent link" + where);
        if (n.num_keys > kTreeMaxKeys) throw Error(Errc::kCorruption, "overfull node" + where);
        if (off == root_) {
          if (n.num_keys < 1) throw Error(Errc::kCorruption, "empty root" + where);
        } else if (n.num_keys < (n.is_leaf ? kLeafMinKeys : kInternalMinKeys)) {
          throw Error(Errc::kCorruption, "occupancy below minimum" + where);
        }
        for (std::uint32_t i = 0; i < n.num_keys; ++i) {
          if (i > 0 && n.keys[i - 1] >= n.keys[i]) {
            throw Error(Errc::kCorruption, "keys not strictly ascending" + where);
          }
          if ((lo && n.keys[i] < *lo) || (hi && n.keys[i] >= *hi)) {
            throw Error(Errc::kCorruption, "key separation violated" + where);
          }
        }
        if (n.is_leaf) {
          if (!leaf_level) leaf_level = depth;
          if (*leaf_level != depth) throw Error(Errc::kCorruption, "uneven leaf depth" + where);
          in_order.push_back(off);
          return;
        }
        for (std::uint32_t c = 0; c <= n.num_keys; ++c) {
          visit(from_link(n.links[c]), off, depth + 1, c == 0 ? lo : n.keys[c - 1],
                c == n.num_keys ? hi : n.keys[c]);
        }
      };
  visit(root_, kNil, 0, std::nullopt, std::nullopt);

  const auto chain = leaf_offsets();
  if (chain != in_order) throw Error(Errc::kCorruption, "leaf chain disagrees with tree order");
  std::optional<std::int64_t> last;
  for (Offset off : chain) {
    const TreeNode n = get(off);
    if (last && n.keys[0] <= *last) throw Error(Errc::kCorruption, "leaf chain not sorted");
    last = n.keys[n.num_keys - 1];
  }
}

void RecoverableTree::inject_volatile_bug(VolatileBug bug, std::uint64_t seed) {
  if (mode() != Mode::kPartlyCheckpoint) {
    throw Error(Errc::kUnsupported, "direct modes write through; bugs would reach the region");
  }
  const auto leaves = leaf_offsets();
  switch (bug) {
    case VolatileBug::kSelfLoopNext: {
      if (leaves.empty()) return;
      const Offset victim = leaves[mix64(seed) % leaves.size()];
      TreeNode n = get(victim);
      n.next = to_link(victim);
      view_.store(victim, n);
      break;
    }
    case VolatileBug::kScrambledPrev:
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if ((mix64(seed + i) & 1) == 0) continue;
        TreeNode n = get(leaves[i]);
        n.parent = static_cast<std::uint32_t>(mix64(seed ^ leaves[i]));
        view_.store(leaves[i], n);
      }
      break;
    case VolatileBug::kDanglingTail:
      root_ = node_base_ + (mix64(seed) % (node_slots_ + 1)) * kTreeNodeSize + kLineSize;
      break;
    case VolatileBug::kWrongHashCache:
      throw Error(Errc::kUnsupported, "tree nodes carry no hash cache");
  }
}

}  // namespace persistkit
