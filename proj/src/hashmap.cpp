// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "persistkit/hashmap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "persistkit/hash.hpp"

namespace persistkit {

namespace {

constexpr Offset kSizeField = kMapRoot;
constexpr Offset kModeField = kMapRoot + 8;
constexpr Offset kBucketCountField = kMapRoot + 16;

Mode read_mode(std::uint32_t raw) {
  if (raw < 1 || raw > 3) throw Error(Errc::kCorruption, "map root block has no valid mode");
  return static_cast<Mode>(raw);
}

void check_load_factor(double lf) {
  if (!(lf > 0.0) || !std::isfinite(lf)) {
    throw Error(Errc::kInvalidArgument, "load factor must be positive");
  }
}

}  // namespace

std::uint64_t bucket_count_for(std::uint64_t size, double load_factor) {
  std::uint64_t bc = 1;
  while (static_cast<double>(size) > load_factor * static_cast<double>(bc)) bc <<= 1;
  return bc;
}

RecoverableMap::RecoverableMap(Region& region, Mode mode, double load_factor, FencePolicy fence)
    : view_(region, mode, fence),
      load_factor_(load_factor),
      base_(region.arena(ArenaId::kMapEntries).base),
      slots_(region.arena_slot_capacity(ArenaId::kMapEntries, kMapSlot)) {
  if (mode == Mode::kFullyPersistent) {
    if (!region.has_arena(ArenaId::kMapBuckets)) {
      throw Error(Errc::kOutOfSpace, "fully persistent map needs a bucket arena");
    }
    bucket_base_ = region.arena(ArenaId::kMapBuckets).base;
    bucket_room_ = region.arena(ArenaId::kMapBuckets).length / sizeof(Offset);
  }
}

RecoverableMap RecoverableMap::init(Region& region, std::uint64_t initial_capacity, Mode mode,
                                    double load_factor, FencePolicy fence) {
  check_load_factor(load_factor);
  if (region.init_flag(ArenaId::kMapEntries)) {
    throw Error(Errc::kAlreadyInitialized, "map already initialized in this region");
  }
  RecoverableMap map(region, mode, load_factor, fence);
  const std::uint64_t bc = bucket_count_for(initial_capacity, load_factor);
  map.check_bucket_room(bc);
  map.buckets_.assign(bc, kNil);
  map.view_.store(kSizeField, std::uint64_t{0});
  map.view_.store(kModeField, static_cast<std::uint32_t>(mode));
  map.view_.store(kBucketCountField, bc);
  if (mode == Mode::kFullyPersistent) {
    for (std::uint64_t b = 0; b < bc; ++b) map.view_.store(map.bucket_base_ + b * 8, kNil);
    map.view_.flush(map.bucket_base_, bc * sizeof(Offset));
  }
  map.view_.flush(kMapRoot, 24);
  region.fence();
  region.set_init_flag(ArenaId::kMapEntries, true);
  region.rebuild_arena(ArenaId::kMapEntries, kMapSlot, {});
  return map;
}

void RecoverableMap::check_bucket_room(std::uint64_t count) const {
  if (mode() == Mode::kFullyPersistent && count > bucket_room_) {
    throw Error(Errc::kOutOfSpace, "bucket arena holds " + std::to_string(bucket_room_) +
                                       " heads, " + std::to_string(count) + " needed");
  }
}

void RecoverableMap::set_head(std::uint64_t bucket, Offset head) {
  buckets_[bucket] = head;
  if (mode() == Mode::kFullyPersistent) view_.store(bucket_base_ + bucket * 8, head);
}

void RecoverableMap::store_size() {
  view_.store(kSizeField, size_);
  view_.flush(kSizeField, sizeof(std::uint64_t));
}

void RecoverableMap::rehash(std::uint64_t count) {
  std::vector<Offset> entries;
  entries.reserve(size_);
  for (Offset head : buckets_) {
    for (Offset e = head; e != kNil; e = next_of(e)) entries.push_back(e);
  }
  buckets_.assign(count, kNil);
  std::vector<Offset> tails(count, kNil);
  for (Offset e : entries) {
    const std::uint64_t b = bucket_of(view_.load<std::uint32_t>(e + kMapHashField));
    if (tails[b] == kNil) {
      buckets_[b] = e;
    } else {
      set_next(tails[b], e);
    }
    set_next(e, kNil);
    tails[b] = e;
  }
  if (mode() == Mode::kFullyPersistent) {
    for (std::uint64_t b = 0; b < count; ++b) view_.store(bucket_base_ + b * 8, buckets_[b]);
    view_.store(kBucketCountField, count);
    flush_volatile_state();
  }
}

// Fully persistent only: every bucket head, every line 1 and the root line.
void RecoverableMap::flush_volatile_state() {
  view_.flush(bucket_base_, buckets_.size() * sizeof(Offset));
  for (Offset head : buckets_) {
    for (Offset e = head; e != kNil; e = next_of(e)) view_.flush(e + kMapHashField, 16);
  }
  view_.flush(kMapRoot, 24);
}

void RecoverableMap::put(std::int64_t key, const Payload56& value) {
  if (key == kSentinelKey) throw Error(Errc::kInvalidKey, "key 0 is reserved");
  const std::uint32_t hash = hash_key(key);
  const std::uint64_t b = bucket_of(hash);
  Offset last = kNil;
  for (Offset e = buckets_[b]; e != kNil; e = next_of(e)) {
    if (view_.load<std::uint32_t>(e + kMapHashField) == hash &&
        view_.load<std::int64_t>(e) == key) {
      view_.store(e, MapEntryLine{key, value});
      view_.flush(e, kLineSize);
      view_.end_op();
      return;
    }
    last = e;
  }
  const std::uint64_t grown = bucket_count_for(size_ + 1, load_factor_);
  check_bucket_room(std::max<std::uint64_t>(grown, buckets_.size()));

  const Offset entry = view_.region().alloc(ArenaId::kMapEntries, kMapSlot, kMapSlot);
  view_.store(entry, MapEntryLine{key, value});
  view_.store(entry + kMapHashField, hash);
  set_next(entry, kNil);
  view_.flush(entry, kLineSize);
  const bool fully = mode() == Mode::kFullyPersistent;
  if (fully) view_.flush(entry + kMapHashField, 16);
  if (last == kNil) {
    set_head(b, entry);
    if (fully) view_.flush(bucket_base_ + b * 8, sizeof(Offset));
  } else {
    set_next(last, entry);
    if (fully) view_.flush(last + kMapNextField, sizeof(Offset));
  }
  ++size_;
  store_size();
  if (grown > buckets_.size()) rehash(grown);
  view_.end_op();
}

void RecoverableMap::remove(std::int64_t key) {
  if (key != kSentinelKey) {
    const std::uint32_t hash = hash_key(key);
    const std::uint64_t b = bucket_of(hash);
    Offset pred = kNil;
    for (Offset e = buckets_[b]; e != kNil; pred = e, e = next_of(e)) {
      if (view_.load<std::uint32_t>(e + kMapHashField) != hash ||
          view_.load<std::int64_t>(e) != key) {
        continue;
      }
      // Invalidate before the size drops: a crash in between leaves size
      // above the live count, which reconstruction reports as corruption.
      view_.store(e, kSentinelKey);
      view_.flush(e, sizeof(std::int64_t));
      --size_;
      store_size();
      const Offset succ = next_of(e);
      const bool fully = mode() == Mode::kFullyPersistent;
      if (pred == kNil) {
        set_head(b, succ);
        if (fully) view_.flush(bucket_base_ + b * 8, sizeof(Offset));
      } else {
        set_next(pred, succ);
        if (fully) view_.flush(pred + kMapNextField, sizeof(Offset));
      }
      view_.region().free(ArenaId::kMapEntries, e, kMapSlot);
      view_.end_op();
      return;
    }
  }
  throw Error(Errc::kNotFound, "key " + std::to_string(key) + " not present");
}

std::optional<Payload56> RecoverableMap::get(std::int64_t key) const {
  if (key == kSentinelKey) return std::nullopt;
  const std::uint32_t hash = hash_key(key);
  for (Offset e = buckets_[bucket_of(hash)]; e != kNil; e = next_of(e)) {
    if (view_.load<std::uint32_t>(e + kMapHashField) == hash) {
      const auto line = view_.load<MapEntryLine>(e);
      if (line.key == key) return line.value;
    }
  }
  return std::nullopt;
}

RecoverableMap RecoverableMap::reconstruct(Region& region, double load_factor,
                                           FencePolicy fence) {
  check_load_factor(load_factor);
  if (!region.init_flag(ArenaId::kMapEntries)) {
    throw Error(Errc::kNotInitialized, "map init flag is clear");
  }
  const Mode mode = read_mode(region.load<std::uint32_t>(kModeField));
  RecoverableMap map(region, mode, load_factor, fence);
  PersistView& view = map.view_;
  map.size_ = view.load<std::uint64_t>(kSizeField);
  if (map.size_ > map.slots_) {
    throw Error(Errc::kCorruption, "map size " + std::to_string(map.size_) +
                                       " exceeds the entry arena");
  }
  const std::uint64_t bc = bucket_count_for(map.size_, load_factor);
  map.check_bucket_room(bc);
  map.buckets_.assign(bc, kNil);
  std::vector<Offset> tails(bc, kNil);
  std::vector<bool> live(map.slots_, false);

  // The whole arena is scanned so the free list covers every dead slot and
  // stray live entries beyond `size` are caught.
  std::uint64_t found = 0;
  for (std::uint64_t s = 0; s < map.slots_; ++s) {
    const Offset e = map.base_ + s * kMapSlot;
    const auto key = view.load<std::int64_t>(e);
    if (key == kSentinelKey) continue;
    live[s] = true;
    ++found;
    const std::uint32_t hash = hash_key(key);
    view.store(e + kMapHashField, hash);
    map.set_next(e, kNil);
    const std::uint64_t b = map.bucket_of(hash);
    if (tails[b] == kNil) {
      map.buckets_[b] = e;
    } else {
      map.set_next(tails[b], e);
    }
    tails[b] = e;
  }
  if (found != map.size_) {
    throw Error(Errc::kCorruption, "found " + std::to_string(found) +
                                       " live entries, size says " + std::to_string(map.size_));
  }
  region.rebuild_arena(ArenaId::kMapEntries, kMapSlot, live);
  if (mode == Mode::kFullyPersistent) {
    for (std::uint64_t b = 0; b < bc; ++b) view.store(map.bucket_base_ + b * 8, map.buckets_[b]);
    view.store(kBucketCountField, bc);
    map.flush_volatile_state();
    region.fence();
  }
  return map;
}

void RecoverableMap::check_invariants() const {
  if (!std::has_single_bit(buckets_.size())) {
    throw Error(Errc::kCorruption, "bucket count is not a power of two");
  }
  std::uint64_t seen = 0;
  for (std::uint64_t b = 0; b < buckets_.size(); ++b) {
    for (Offset e = buckets_[b]; e != kNil; e = next_of(e)) {
      if (e < base_ || (e - base_) % kMapSlot != 0 || (e - base_) / kMapSlot >= slots_) {
        throw Error(Errc::kCorruption, "chain link " + std::to_string(e) + " is not an entry");
      }
      if (++seen > size_) throw Error(Errc::kCorruption, "chains hold more than size entries");
      const auto key = view_.load<std::int64_t>(e);
      if (key == kSentinelKey) throw Error(Errc::kCorruption, "sentinel entry on a chain");
      const std::uint32_t hash = hash_key(key);
      if (view_.load<std::uint32_t>(e + kMapHashField) != hash) {
        throw Error(Errc::kCorruption, "stale hash cache for key " + std::to_string(key));
      }
      if (bucket_of(hash) != b) {
        throw Error(Errc::kCorruption, "key " + std::to_string(key) + " in the wrong bucket");
      }
    }
  }
  if (seen != size_) throw Error(Errc::kCorruption, "chains hold fewer than size entries");
  std::uint64_t live = 0;
  const std::uint64_t used = (view_.region().arena_cursor(ArenaId::kMapEntries) - base_) / kMapSlot;
  for (std::uint64_t s = 0; s < used; ++s) {
    if (view_.load<std::int64_t>(base_ + s * kMapSlot) != kSentinelKey) ++live;
  }
  if (live != size_) throw Error(Errc::kCorruption, "live slot count disagrees with size");
}

std::vector<std::pair<std::int64_t, Payload56>> RecoverableMap::items() const {
  std::vector<std::pair<std::int64_t, Payload56>> out;
  out.reserve(size_);
  for (Offset head : buckets_) {
    for (Offset e = head; e != kNil; e = next_of(e)) {
      if (out.size() > size_) throw Error(Errc::kCorruption, "cycle in bucket chain");
      const auto line = view_.load<MapEntryLine>(e);
      out.emplace_back(line.key, line.value);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void RecoverableMap::inject_volatile_bug(VolatileBug bug, std::uint64_t seed) {
  if (mode() != Mode::kPartlyCheckpoint) {
    throw Error(Errc::kUnsupported, "direct modes write through; bugs would reach the region");
  }
  std::vector<Offset> entries;
  for (Offset head : buckets_) {
    for (Offset e = head; e != kNil; e = next_of(e)) entries.push_back(e);
  }
  if (entries.empty()) return;
  const Offset victim = entries[mix64(seed) % entries.size()];
  switch (bug) {
    case VolatileBug::kSelfLoopNext:
      set_next(victim, victim);
      break;
    case VolatileBug::kWrongHashCache:
      view_.store(victim + kMapHashField,
                  view_.load<std::uint32_t>(victim + kMapHashField) ^
                      static_cast<std::uint32_t>(mix64(seed) | 1));
      break;
    case VolatileBug::kDanglingTail: {
      // Chain terminal link of the victim's bucket.
      Offset e = victim;
      while (next_of(e) != kNil) e = next_of(e);
      set_next(e, base_ + (mix64(seed ^ e) % (slots_ + 1)) * kMapSlot + 24);
      break;
    }
    case VolatileBug::kScrambledPrev:
      throw Error(Errc::kUnsupported, "map entries carry no back link");
  }
}

}  // namespace persistkit
