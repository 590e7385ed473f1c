// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "persistkit/handle.hpp"

#include <algorithm>
#include <chrono>
#include <string>
#include <unordered_map>

#include "persistkit/bptree.hpp"
#include "persistkit/hashmap.hpp"
#include "persistkit/list.hpp"

namespace persistkit {

namespace {

template <class P>
ContentItem item_of(std::int64_t key, const P& payload) {
  ContentItem item;
  item.key = key;
  std::copy(payload.words.begin(), payload.words.end(), item.words.begin());
  return item;
}

class ListHandle final : public StructureHandle {
 public:
  explicit ListHandle(RecoverableList list) : list_(std::move(list)) {
    for (NodeRef n = list_.head(); n; n = list_.next(n)) {
      if (nodes_.size() > list_.length()) throw Error(Errc::kCorruption, "forward cycle in list");
      nodes_.emplace(list_.value(n).words[0], n);
    }
  }
  void insert(std::int64_t key) override { nodes_[key] = list_.append(make_payload56(key)); }
  void erase(std::int64_t key) override {
    const auto it = nodes_.find(key);
    if (it == nodes_.end()) throw Error(Errc::kNotFound, "key " + std::to_string(key) + " not in list");
    list_.remove(it->second);
    nodes_.erase(it);
  }
  void finish() override { list_.finish(); }
  void check() const override {
    auto forward = list_.values_forward();
    const auto backward = list_.values_backward();
    if (forward.size() != list_.length()) throw Error(Errc::kCorruption, "list length disagrees with chain");
    std::reverse(forward.begin(), forward.end());
    if (forward != backward) throw Error(Errc::kCorruption, "prev links disagree with next links");
  }
  Content content() const override {
    Content out;
    for (const auto& v : list_.values_forward()) out.push_back(item_of(v.words[0], v));
    return out;
  }
  void inject(VolatileBug bug, std::uint64_t seed) override { list_.inject_volatile_bug(bug, seed); }

 private:
  RecoverableList list_;
  std::unordered_map<std::int64_t, NodeRef> nodes_;
};

class TreeHandle final : public StructureHandle {
 public:
  explicit TreeHandle(RecoverableTree tree) : tree_(std::move(tree)) {}
  void insert(std::int64_t key) override { tree_.insert(key, make_payload64(key)); }
  void erase(std::int64_t key) override { tree_.erase(key); }
  void finish() override { tree_.finish(); }
  void check() const override { tree_.check_invariants(); }
  Content content() const override {
    Content out;
    for (const auto& [k, v] : tree_.items()) out.push_back(item_of(k, v));
    return out;
  }
  void inject(VolatileBug bug, std::uint64_t seed) override { tree_.inject_volatile_bug(bug, seed); }

 private:
  RecoverableTree tree_;
};

class MapHandle final : public StructureHandle {
 public:
  explicit MapHandle(RecoverableMap map) : map_(std::move(map)) {}
  void insert(std::int64_t key) override { map_.put(key, make_payload56(key)); }
  void erase(std::int64_t key) override { map_.remove(key); }
  void finish() override { map_.finish(); }
  void check() const override { map_.check_invariants(); }
  Content content() const override {
    Content out;
    for (const auto& [k, v] : map_.items()) out.push_back(item_of(k, v));
    return out;
  }
  void inject(VolatileBug bug, std::uint64_t seed) override { map_.inject_volatile_bug(bug, seed); }

 private:
  RecoverableMap map_;
};

}  // namespace

std::unique_ptr<StructureHandle> init_structure(Region& region, const WorkloadSpec& spec) {
  switch (spec.structure) {
    case Structure::kList:
      return std::make_unique<ListHandle>(RecoverableList::init(region, spec.mode, spec.fence));
    case Structure::kTree:
      return std::make_unique<TreeHandle>(RecoverableTree::init(region, spec.mode, spec.fence));
    case Structure::kMap:
      return std::make_unique<MapHandle>(RecoverableMap::init(region, spec.init_count, spec.mode,
                                                              spec.load_factor, spec.fence));
  }
  return nullptr;
}

std::unique_ptr<StructureHandle> reconstruct_structure(Region& region, const WorkloadSpec& spec,
                                                       double* seconds) {
  const auto start = std::chrono::steady_clock::now();
  auto timed = [&](auto&& structure) {
    if (seconds) *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::move(structure);
  };
  switch (spec.structure) {
    case Structure::kList:
      return std::make_unique<ListHandle>(timed(RecoverableList::reconstruct(region, spec.fence)));
    case Structure::kTree:
      return std::make_unique<TreeHandle>(
          timed(RecoverableTree::reconstruct(region, spec.bucket_size, spec.fence)));
    case Structure::kMap:
      return std::make_unique<MapHandle>(
          timed(RecoverableMap::reconstruct(region, spec.load_factor, spec.fence)));
  }
  return nullptr;
}

}  // namespace persistkit
