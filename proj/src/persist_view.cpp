// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "persistkit/persist_view.hpp"

#include <string>

namespace persistkit {

PersistView::PersistView(Region& region, Mode mode, FencePolicy fence)
    : region_(&region), mode_(mode), fence_(fence) {
  if (mode_ == Mode::kPartlyCheckpoint) {
    const auto image = region.bytes();
    mirror_.assign(image.begin(), image.end());
  }
}

void PersistView::check(Offset offset, std::uint64_t length) const {
  if (offset + length < offset || offset + length > mirror_.size()) {
    throw Error(Errc::kFault, "staged access out of bounds at offset " + std::to_string(offset));
  }
}

void PersistView::flush(Offset offset, std::uint64_t length) {
  if (!mirror_.empty() && length > 0) {
    check(offset, length);
    const Offset first = offset / kLineSize * kLineSize;
    const Offset end = (offset + length + kLineSize - 1) / kLineSize * kLineSize;
    region_->write(first, std::span<const std::byte>(mirror_.data() + first, end - first));
  }
  region_->flush(offset, length);
}

void PersistView::end_op() {
  if (++ops_since_fence_ >= fence_.ops_per_fence) {
    region_->fence();
    ops_since_fence_ = 0;
  }
}

void PersistView::drain() {
  if (ops_since_fence_ > 0) {
    region_->fence();
    ops_since_fence_ = 0;
  }
}

std::span<std::byte> PersistView::staged(Offset offset, std::uint64_t length) {
  if (mirror_.empty()) {
    throw Error(Errc::kUnsupported, "staged state exists only in PartlyCheckpoint mode");
  }
  check(offset, length);
  return {mirror_.data() + offset, length};
}

}  // namespace persistkit
