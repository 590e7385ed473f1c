// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "persistkit/persist_view.hpp"
#include "persistkit/region.hpp"
#include "persistkit/types.hpp"

namespace persistkit {

inline constexpr std::uint32_t kTreeOrder = 19;
inline constexpr std::uint32_t kTreeMaxKeys = kTreeOrder - 1;
/// Non-root minimum: 9 keys in a leaf, 10 children (9 keys) in an internal node.
inline constexpr std::uint32_t kLeafMinKeys = 9;
inline constexpr std::uint32_t kInternalMinKeys = 9;
inline constexpr std::uint32_t kMinBucketSize = kTreeOrder / 2 + 1;
inline constexpr std::uint64_t kTreeNodeSize = 256;
inline constexpr std::uint64_t kTreeRecordSize = 64;

/// On-media node: 256B, four cache lines. Links are region line indices
/// (offset / 64, 0 = NIL) so nineteen of them fit beside eighteen 64-bit keys.
///   line 0: num_keys, is_leaf, next, parent, keys[0..5]
///   line 1: keys[6..13]
///   line 2: keys[14..17], links[0..7]
///   line 3: links[8..18]
/// Only leaves (and the records they point at) are persistent in the partly
/// persistent modes; parent is never persistent there.
struct TreeNode {
  std::uint32_t num_keys;
  std::uint8_t is_leaf;
  std::uint8_t pad[3];
  std::uint32_t next;
  std::uint32_t parent;
  std::int64_t keys[kTreeMaxKeys];
  std::uint32_t links[kTreeOrder];
  std::uint8_t reserved[20];
};
static_assert(sizeof(TreeNode) == kTreeNodeSize);
static_assert(offsetof(TreeNode, parent) == 12);
static_assert(offsetof(TreeNode, keys) == 16);
static_assert(offsetof(TreeNode, links) == 160);

inline constexpr std::uint32_t to_link(Offset off) noexcept {
  return static_cast<std::uint32_t>(off / kLineSize);
}
inline constexpr Offset from_link(std::uint32_t link) noexcept {
  return static_cast<Offset>(link) * kLineSize;
}

struct TreeStats {
  std::uint64_t leaves = 0;          // n
  std::uint64_t internal_nodes = 0;
  std::uint64_t height = 0;          // levels including the leaf level; 0 when empty
  double avg_internal_fanout = 0.0;  // t: mean children per internal node
  std::uint64_t keys = 0;

  /// Total nodes over persistent (leaf) nodes, measured.
  double measured_reduction() const noexcept;
  /// (1 - 1/n) * t / (t - 1).
  double formula_reduction() const noexcept;
};

/// Child counts per internal node when packing `children` nodes into
/// buckets of `bucket_size` during reconstruction.
std::vector<std::uint32_t> pack_buckets(std::uint64_t children, std::uint32_t bucket_size);

/// B+Tree of order 19 with persistent leaves and volatile internal levels.
class RecoverableTree {
 public:
  static RecoverableTree init(Region& region, Mode mode, FencePolicy fence = {});
  static RecoverableTree reconstruct(Region& region, std::uint32_t bucket_size = kTreeOrder,
                                     FencePolicy fence = {});

  void insert(std::int64_t key, const Payload64& value);
  void erase(std::int64_t key);
  std::optional<Payload64> find(std::int64_t key) const;

  TreeStats stats() const;
  /// Throws Errc::kCorruption describing the first violated structural
  /// invariant: depth, ordering, separation, occupancy, parent links, chain.
  void check_invariants() const;

  std::vector<std::pair<std::int64_t, Payload64>> items() const;
  std::vector<Offset> leaf_offsets() const;
  Offset root() const noexcept { return root_; }
  Offset leftmost() const noexcept { return leftmost_; }
  TreeNode node(Offset off) const { return view_.load<TreeNode>(off); }
  Mode mode() const noexcept { return view_.mode(); }
  bool empty() const noexcept { return root_ == kNil; }

  void inject_volatile_bug(VolatileBug bug, std::uint64_t seed);
  void finish() { view_.drain(); }
  PersistView& view() noexcept { return view_; }

 private:
  struct Touched {
    Offset off;
    TreeNode before;
    bool fresh;
  };

  RecoverableTree(Region& region, Mode mode, FencePolicy fence);

  TreeNode get(Offset off) const { return view_.load<TreeNode>(off); }
  void put(Offset off, const TreeNode& n);
  Offset new_node(bool leaf);
  void drop_node(Offset off);
  void ensure_room_for_insert() const;
  void commit();

  Offset find_leaf(std::int64_t key) const;
  void set_parent(Offset child, Offset parent);
  void insert_into_leaf_after_splitting(Offset leaf, std::int64_t key, std::uint32_t record);
  void insert_into_parent(Offset left, std::int64_t key, Offset right);
  void insert_into_node_after_splitting(Offset old_off, std::uint32_t left_index,
                                        std::int64_t key, Offset right);
  void delete_entry(Offset n_off, std::uint32_t key_index, std::uint32_t link_index);
  void adjust_root();
  void coalesce(Offset n_off, Offset neighbor_off, int neighbor_index,
                std::uint32_t k_prime_index, std::int64_t k_prime);
  void redistribute(Offset n_off, Offset neighbor_off, int neighbor_index,
                    std::uint32_t k_prime_index, std::int64_t k_prime);
  std::uint64_t leaf_depth() const;

  PersistView view_;
  Offset node_base_ = 0;
  std::uint64_t node_slots_ = 0;
  Offset record_base_ = 0;
  std::uint64_t record_slots_ = 0;
  Offset root_ = kNil;
  Offset leftmost_ = kNil;
  Offset durable_root_ = kNil;
  Offset durable_leftmost_ = kNil;
  std::vector<Touched> touched_;
  std::vector<Offset> dropped_;
};

}  // namespace persistkit
