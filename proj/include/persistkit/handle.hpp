// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "persistkit/region.hpp"
#include "persistkit/types.hpp"
#include "persistkit/workload.hpp"

namespace persistkit {

/// One observable element of a structure: its key and payload words
/// (56B payloads leave the last word zero).
struct ContentItem {
  std::int64_t key = 0;
  std::array<std::int64_t, 8> words{};
  friend bool operator==(const ContentItem&, const ContentItem&) = default;
};
using Content = std::vector<ContentItem>;

/// Uniform key-driven view of the three structures for workloads.
/// List: insert appends make_payload56(key), erase removes that node.
/// Tree: insert stores make_payload64(key). Map: put of make_payload56(key).
class StructureHandle {
 public:
  virtual ~StructureHandle() = default;
  virtual void insert(std::int64_t key) = 0;
  virtual void erase(std::int64_t key) = 0;
  virtual void finish() = 0;
  /// Structural invariants; throws Errc::kCorruption.
  virtual void check() const = 0;
  /// List: append order. Tree and map: ascending key order.
  virtual Content content() const = 0;
  virtual void inject(VolatileBug bug, std::uint64_t seed) = 0;
};

std::unique_ptr<StructureHandle> init_structure(Region& region, const WorkloadSpec& spec);
/// When `seconds` is given it receives the time spent in the structure's
/// own reconstruct call, excluding the handle's key index.
std::unique_ptr<StructureHandle> reconstruct_structure(Region& region, const WorkloadSpec& spec,
                                                       double* seconds = nullptr);

}  // namespace persistkit
