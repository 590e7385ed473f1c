// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "persistkit/region.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cerrno>
#include <random>
#include <utility>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

#ifndef MAP_SHARED_VALIDATE
#define MAP_SHARED_VALIDATE 0x03
#endif
#ifndef MAP_SYNC
#define MAP_SYNC 0x80000
#endif

namespace persistkit {

namespace {

constexpr std::uint64_t kPageSize = 4096;

std::uint64_t round_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }
std::uint64_t round_down(std::uint64_t v, std::uint64_t a) { return v / a * a; }

inline void write_back_line(const std::byte* addr) {
#if defined(__x86_64__) || defined(__i386__)
  _mm_clflush(addr);
#else
  (void)addr;  // no portable cache-line write-back; accounting still applies
#endif
}

inline void store_fence() {
#if defined(__x86_64__) || defined(__i386__)
  _mm_sfence();
#else
  std::atomic_thread_fence(std::memory_order_seq_cst);
#endif
}

struct RawArenaEntry {
  std::uint32_t id;
  std::uint32_t init;
  std::uint64_t base;
  std::uint64_t length;
};
static_assert(sizeof(RawArenaEntry) == kArenaEntrySize);

}  // namespace

std::string_view arena_name(ArenaId id) noexcept {
  switch (id) {
    case ArenaId::kHeader: return "header";
    case ArenaId::kList: return "list";
    case ArenaId::kTreeNodes: return "tree-nodes";
    case ArenaId::kTreeRecords: return "tree-records";
    case ArenaId::kMapEntries: return "map-entries";
    case ArenaId::kMapBuckets: return "map-buckets";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// RegionLayout

RegionLayout RegionLayout::for_capacity(std::uint64_t capacity) {
  RegionLayout layout;
  if (capacity <= kHeaderArenaSize) return layout;
  const std::uint64_t body = capacity - kHeaderArenaSize;
  // Percent shares of the body: list, tree nodes, tree records, map entries, buckets.
  constexpr std::array<std::pair<ArenaId, std::uint64_t>, 5> kShares = {{
      {ArenaId::kList, 20},
      {ArenaId::kTreeNodes, 20},
      {ArenaId::kTreeRecords, 20},
      {ArenaId::kMapEntries, 30},
      {ArenaId::kMapBuckets, 10},
  }};
  for (auto [id, pct] : kShares) {
    layout.arenas.push_back({id, round_down(body / 100 * pct, kDeviceBlock)});
  }
  return layout;
}

RegionLayout RegionLayout::for_slots(std::uint64_t list_nodes, std::uint64_t tree_keys,
                                     std::uint64_t map_entries) {
  RegionLayout layout;
  const auto blocks = [](std::uint64_t bytes) {
    return round_up(std::max<std::uint64_t>(bytes, kDeviceBlock), kDeviceBlock);
  };
  layout.arenas.push_back({ArenaId::kList, blocks(list_nodes * 128 + kDeviceBlock)});
  // Worst case: every leaf at minimum occupancy (9 keys), plus internal levels.
  const std::uint64_t leaves = tree_keys / 9 + 2;
  const std::uint64_t nodes = leaves + leaves / 4 + 16;
  layout.arenas.push_back({ArenaId::kTreeNodes, blocks(nodes * 256)});
  layout.arenas.push_back({ArenaId::kTreeRecords, blocks(tree_keys * 64 + kDeviceBlock)});
  layout.arenas.push_back({ArenaId::kMapEntries, blocks(map_entries * 128 + kDeviceBlock)});
  const std::uint64_t buckets = std::bit_ceil(map_entries * 2 + 16);
  layout.arenas.push_back({ArenaId::kMapBuckets, blocks(buckets * 8)});
  return layout;
}

std::uint64_t RegionLayout::required_capacity() const noexcept {
  std::uint64_t total = kHeaderArenaSize;
  for (const auto& a : arenas) total += a.length;
  return total;
}

// ---------------------------------------------------------------------------
// Region

struct Region::Durability {
  struct Pending {
    std::uint64_t line;
    std::array<std::byte, kLineSize> bytes;
  };
  std::vector<std::byte> durable;
  std::vector<std::uint64_t> dirty;
  std::size_t dirty_count = 0;
  std::vector<Pending> pending;

  void mark_dirty(std::uint64_t line) {
    auto& word = dirty[line / 64];
    const std::uint64_t bit = std::uint64_t{1} << (line % 64);
    if (!(word & bit)) {
      word |= bit;
      ++dirty_count;
    }
  }
  void clear_dirty(std::uint64_t line) {
    auto& word = dirty[line / 64];
    const std::uint64_t bit = std::uint64_t{1} << (line % 64);
    if (word & bit) {
      word &= ~bit;
      --dirty_count;
    }
  }
};

Region::Region(Region&& other) noexcept { *this = std::move(other); }

Region& Region::operator=(Region&& other) noexcept {
  if (this != &other) {
    release();
    backend_ = other.backend_;
    path_ = std::move(other.path_);
    capacity_ = std::exchange(other.capacity_, 0);
    options_ = other.options_;
    data_ = std::exchange(other.data_, nullptr);
    fd_ = std::exchange(other.fd_, -1);
    heap_ = std::move(other.heap_);
    if (backend_ == Backend::kSimulatedCrash) data_ = heap_.data();
    durability_ = std::move(other.durability_);
    arenas_ = std::move(other.arenas_);
    stats_ = other.stats_;
    flushed_bitmap_ = std::move(other.flushed_bitmap_);
    flush_calls_ = other.flush_calls_;
    fence_calls_ = other.fence_calls_;
    trigger_ = other.trigger_;
    trigger_armed_ = other.trigger_armed_;
    tracing_ = other.tracing_;
    trace_ = std::move(other.trace_);
    sync_lo_ = other.sync_lo_;
    sync_hi_ = other.sync_hi_;
  }
  return *this;
}

Region::~Region() { release(); }

void Region::release() noexcept {
  if (fd_ >= 0) {
    if (data_ != nullptr) {
      ::msync(data_, capacity_, MS_SYNC);
      ::munmap(data_, capacity_);
    }
    ::close(fd_);
  }
  fd_ = -1;
  data_ = nullptr;
}

Region Region::create(const std::filesystem::path& path, std::uint64_t capacity,
                      Backend backend, const RegionLayout& layout, RegionOptions options) {
  if (capacity % kDeviceBlock != 0) {
    throw Error(Errc::kCreation, "capacity must be a multiple of 256 bytes");
  }
  if (capacity <= kHeaderArenaSize) {
    throw Error(Errc::kCreation, "capacity " + std::to_string(capacity) +
                                     " is below the minimum header size");
  }
  if (capacity / kLineSize > (std::uint64_t{1} << 32)) {
    throw Error(Errc::kCreation, "capacity exceeds 32-bit line addressing");
  }
  const RegionLayout effective = layout.arenas.empty() ? RegionLayout::for_capacity(capacity)
                                                       : layout;
  if (effective.required_capacity() > capacity) {
    throw Error(Errc::kCreation, "layout needs " + std::to_string(effective.required_capacity()) +
                                     " bytes, capacity is " + std::to_string(capacity));
  }

  Region region;
  region.backend_ = backend;
  region.capacity_ = capacity;
  region.options_ = options;

  if (backend == Backend::kFileBacked) {
    region.path_ = path;
    region.fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0644);
    if (region.fd_ < 0) {
      throw Error(Errc::kCreation, "cannot open " + path.string() + " for writing");
    }
    if (::ftruncate(region.fd_, static_cast<off_t>(capacity)) != 0) {
      throw Error(Errc::kCreation, "cannot size " + path.string());
    }
    void* addr = ::mmap(nullptr, capacity, PROT_READ | PROT_WRITE,
                        MAP_SHARED_VALIDATE | MAP_SYNC, region.fd_, 0);
    if (addr == MAP_FAILED) {
      // Not a DAX filesystem: fall back to an ordinary shared mapping.
      addr = ::mmap(nullptr, capacity, PROT_READ | PROT_WRITE, MAP_SHARED, region.fd_, 0);
    }
    if (addr == MAP_FAILED) throw Error(Errc::kCreation, "mmap failed for " + path.string());
    region.data_ = static_cast<std::byte*>(addr);
  } else {
    region.heap_.assign(capacity, std::byte{0});
    region.data_ = region.heap_.data();
    region.durability_ = std::make_unique<Durability>();
    region.durability_->durable.assign(capacity, std::byte{0});
    region.durability_->dirty.assign(capacity / kLineSize / 64 + 1, 0);
  }
  region.flushed_bitmap_.assign(capacity / kLineSize / 64 + 1, 0);
  region.lay_out(effective);
  region.write_header_and_persist();
  region.reset_stats();
  region.flush_calls_ = 0;
  region.fence_calls_ = 0;
  region.trace_.clear();
  return region;
}

Region Region::create_simulated(std::uint64_t capacity, const RegionLayout& layout,
                                RegionOptions options) {
  return create({}, capacity, Backend::kSimulatedCrash, layout, options);
}

Region Region::open(const std::filesystem::path& path, RegionOptions options) {
  Region region;
  region.backend_ = Backend::kFileBacked;
  region.path_ = path;
  region.options_ = options;
  region.fd_ = ::open(path.c_str(), O_RDWR);
  if (region.fd_ < 0) throw Error(Errc::kOpen, "cannot open " + path.string());
  struct stat st {};
  if (::fstat(region.fd_, &st) != 0) throw Error(Errc::kOpen, "cannot stat " + path.string());
  const auto size = static_cast<std::uint64_t>(st.st_size);
  if (size < kHeaderArenaSize) throw Error(Errc::kOpen, "truncated region file");

  std::array<char, 24> head{};
  if (::pread(region.fd_, head.data(), head.size(), 0) != static_cast<ssize_t>(head.size())) {
    throw Error(Errc::kOpen, "cannot read region header");
  }
  if (!std::equal(head.begin(), head.begin() + 8, kMagic)) {
    throw Error(Errc::kOpen, "format version tag mismatch");
  }
  std::uint64_t capacity = 0;
  std::memcpy(&capacity, head.data() + 16, sizeof(capacity));
  if (capacity > size) throw Error(Errc::kOpen, "truncated region file");
  if (capacity % kDeviceBlock != 0 || capacity <= kHeaderArenaSize) {
    throw Error(Errc::kOpen, "corrupt capacity field");
  }
  region.capacity_ = capacity;
  void* addr = ::mmap(nullptr, capacity, PROT_READ | PROT_WRITE,
                      MAP_SHARED_VALIDATE | MAP_SYNC, region.fd_, 0);
  if (addr == MAP_FAILED) {
    addr = ::mmap(nullptr, capacity, PROT_READ | PROT_WRITE, MAP_SHARED, region.fd_, 0);
  }
  if (addr == MAP_FAILED) throw Error(Errc::kOpen, "mmap failed for " + path.string());
  region.data_ = static_cast<std::byte*>(addr);
  region.flushed_bitmap_.assign(capacity / kLineSize / 64 + 1, 0);
  region.load_header();
  return region;
}

void Region::lay_out(const RegionLayout& layout) {
  if (layout.arenas.size() + 1 > kMaxArenas) {
    throw Error(Errc::kCreation, "too many arenas");
  }
  arenas_.clear();
  Arena header;
  header.info = {ArenaId::kHeader, 0, kHeaderArenaSize, true};
  header.cursor = kHeaderArenaSize;  // reserved, never allocated from
  arenas_.push_back(std::move(header));
  Offset base = kHeaderArenaSize;
  for (const auto& spec : layout.arenas) {
    if (spec.length % kDeviceBlock != 0) {
      throw Error(Errc::kCreation, "arena length must be a multiple of 256 bytes");
    }
    if (has_arena(spec.id)) throw Error(Errc::kCreation, "duplicate arena id");
    Arena a;
    a.info = {spec.id, base, spec.length, false};
    a.cursor = base;
    arenas_.push_back(std::move(a));
    base += spec.length;
  }
}

void Region::write_header_and_persist() {
  std::array<std::byte, kDeviceBlock> block{};
  std::memcpy(block.data(), kMagic, sizeof(kMagic));
  const auto count = static_cast<std::uint32_t>(arenas_.size());
  std::memcpy(block.data() + 8, &count, sizeof(count));
  std::memcpy(block.data() + 16, &capacity_, sizeof(capacity_));
  for (std::size_t i = 0; i < arenas_.size(); ++i) {
    const auto& info = arenas_[i].info;
    RawArenaEntry raw{static_cast<std::uint32_t>(info.id), info.initialized ? 1u : 0u,
                      info.base, info.length};
    std::memcpy(block.data() + kArenaTableOffset + i * kArenaEntrySize, &raw, sizeof(raw));
  }
  write(0, block);
  flush(0, kDeviceBlock);
  fence();
}

void Region::load_header() {
  if (!std::equal(data_, data_ + 8, reinterpret_cast<const std::byte*>(kMagic))) {
    throw Error(Errc::kOpen, "format version tag mismatch");
  }
  std::uint32_t count = 0;
  std::memcpy(&count, data_ + 8, sizeof(count));
  if (count == 0 || count > kMaxArenas) throw Error(Errc::kOpen, "corrupt arena table");
  arenas_.clear();
  for (std::uint32_t i = 0; i < count; ++i) {
    RawArenaEntry raw{};
    std::memcpy(&raw, data_ + kArenaTableOffset + i * kArenaEntrySize, sizeof(raw));
    if (raw.id > static_cast<std::uint32_t>(ArenaId::kMapBuckets) ||
        raw.base + raw.length > capacity_ || raw.base + raw.length < raw.base) {
      throw Error(Errc::kOpen, "corrupt arena table entry " + std::to_string(i));
    }
    Arena a;
    a.info = {static_cast<ArenaId>(raw.id), raw.base, raw.length, raw.init != 0};
    a.cursor = a.info.id == ArenaId::kHeader ? raw.base + raw.length : raw.base;
    arenas_.push_back(std::move(a));
  }
  if (arenas_.front().info.id != ArenaId::kHeader) {
    throw Error(Errc::kOpen, "arena table does not start with the header arena");
  }
}

void Region::check_range(Offset offset, std::uint64_t length, const char* what) const {
  if (offset + length < offset || offset + length > capacity_) {
    throw Error(Errc::kFault, std::string(what) + " out of bounds at offset " +
                                  std::to_string(offset) + " length " + std::to_string(length));
  }
}

void Region::maybe_fire_lazy_trigger() {
  if (trigger_armed_) {
    trigger_armed_ = false;
    trigger_ = {};
    throw CrashSignal{fence_calls_, flush_calls_};
  }
}

void Region::write(Offset offset, std::span<const std::byte> payload) {
  check_range(offset, payload.size(), "write");
  bool inside = false;
  for (const auto& a : arenas_) {
    if (offset >= a.info.base && offset + payload.size() <= a.info.base + a.info.length) {
      inside = true;
      break;
    }
  }
  if (!inside) {
    throw Error(Errc::kFault, "write at offset " + std::to_string(offset) +
                                  " is not contained in a single arena");
  }
  maybe_fire_lazy_trigger();
  if (payload.empty()) return;
  std::memcpy(data_ + offset, payload.data(), payload.size());
  if (durability_) {
    const std::uint64_t last = (offset + payload.size() - 1) / kLineSize;
    for (std::uint64_t line = offset / kLineSize; line <= last; ++line) {
      durability_->mark_dirty(line);
    }
  }
  if (tracing_) trace_.push_back({TraceEvent::Kind::kWrite, offset, payload.size()});
}

void Region::read(Offset offset, std::span<std::byte> out) const {
  check_range(offset, out.size(), "read");
  std::memcpy(out.data(), data_ + offset, out.size());
}

void Region::mark_distinct(std::uint64_t first_line, std::uint64_t last_line) {
  for (std::uint64_t line = first_line; line <= last_line; ++line) {
    auto& word = flushed_bitmap_[line / 64];
    const std::uint64_t bit = std::uint64_t{1} << (line % 64);
    if (!(word & bit)) {
      word |= bit;
      ++stats_.distinct_lines_flushed;
    }
  }
}

void Region::flush(Offset offset, std::uint64_t length) {
  check_range(offset, length, "flush");
  if (trigger_.kind == CrashTrigger::Kind::kAfterFlush && trigger_.index == 0 &&
      flush_calls_ == 0) {
    trigger_ = {};
    throw CrashSignal{fence_calls_, flush_calls_};
  }
  maybe_fire_lazy_trigger();

  const auto start = options_.time_flushes ? std::chrono::steady_clock::now()
                                           : std::chrono::steady_clock::time_point{};
  if (length > 0) {
    const std::uint64_t first = offset / kLineSize;
    const std::uint64_t last = (offset + length - 1) / kLineSize;
    for (std::uint64_t line = first; line <= last; ++line) {
      if (durability_) {
        Durability::Pending p{line, {}};
        std::memcpy(p.bytes.data(), data_ + line * kLineSize, kLineSize);
        durability_->pending.push_back(p);
        durability_->clear_dirty(line);
      } else {
        write_back_line(data_ + line * kLineSize);
      }
    }
    stats_.line_flushes += last - first + 1;
    mark_distinct(first, last);
    if (options_.sync_on_fence) {
      sync_lo_ = std::min(sync_lo_, first * kLineSize);
      sync_hi_ = std::max(sync_hi_, (last + 1) * kLineSize);
    }
  }
  ++flush_calls_;
  if (tracing_) trace_.push_back({TraceEvent::Kind::kFlush, offset, length});
  if (options_.time_flushes) {
    stats_.flush_time +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  if (trigger_.kind == CrashTrigger::Kind::kAfterFlush && trigger_.index == flush_calls_) {
    trigger_ = {};
    throw CrashSignal{fence_calls_, flush_calls_};
  }
}

void Region::fence() {
  if (trigger_.kind == CrashTrigger::Kind::kAfterFence && trigger_.index == 0 &&
      fence_calls_ == 0) {
    trigger_ = {};
    throw CrashSignal{fence_calls_, flush_calls_};
  }
  maybe_fire_lazy_trigger();
  if (durability_) {
    for (const auto& p : durability_->pending) {
      std::memcpy(durability_->durable.data() + p.line * kLineSize, p.bytes.data(), kLineSize);
    }
    durability_->pending.clear();
  } else {
    store_fence();
    if (options_.sync_on_fence && sync_lo_ < sync_hi_) {
      const std::uint64_t lo = round_down(sync_lo_, kPageSize);
      const std::uint64_t hi = std::min(round_up(sync_hi_, kPageSize), capacity_);
      ::msync(data_ + lo, hi - lo, MS_SYNC);
      sync_lo_ = UINT64_MAX;
      sync_hi_ = 0;
    }
  }
  ++stats_.fences;
  ++fence_calls_;
  if (tracing_) trace_.push_back({TraceEvent::Kind::kFence, 0, 0});
  if (trigger_.kind == CrashTrigger::Kind::kAfterFence && trigger_.index == fence_calls_) {
    trigger_ = {};
    trigger_armed_ = true;
  }
}

Region Region::simulate_crash(PendingPolicy policy) const {
  if (!durability_) {
    throw Error(Errc::kUnsupported, "simulate_crash requires the SimulatedCrash backend");
  }
  Region crashed;
  crashed.backend_ = Backend::kSimulatedCrash;
  crashed.capacity_ = capacity_;
  crashed.options_ = options_;
  crashed.heap_ = durability_->durable;
  crashed.data_ = crashed.heap_.data();

  std::mt19937_64 rng(policy.seed);
  for (const auto& p : durability_->pending) {
    bool keep = false;
    switch (policy.kind) {
      case PendingPolicy::Kind::kKeepAll: keep = true; break;
      case PendingPolicy::Kind::kDropAll: keep = false; break;
      case PendingPolicy::Kind::kRandomSubset: keep = (rng() & 1) != 0; break;
    }
    if (keep) {
      std::memcpy(crashed.heap_.data() + p.line * kLineSize, p.bytes.data(), kLineSize);
    }
  }
  crashed.durability_ = std::make_unique<Durability>();
  crashed.durability_->durable = crashed.heap_;
  crashed.durability_->dirty.assign(capacity_ / kLineSize / 64 + 1, 0);
  crashed.flushed_bitmap_.assign(capacity_ / kLineSize / 64 + 1, 0);
  crashed.load_header();
  return crashed;
}

// ---------------------------------------------------------------------------
// Allocation

bool Region::has_arena(ArenaId id) const noexcept {
  return std::any_of(arenas_.begin(), arenas_.end(),
                     [id](const Arena& a) { return a.info.id == id; });
}

const ArenaInfo& Region::arena(ArenaId id) const {
  for (const auto& a : arenas_) {
    if (a.info.id == id) return a.info;
  }
  throw Error(Errc::kInvalidArgument, "region has no " + std::string(arena_name(id)) + " arena");
}

Region::Arena& Region::arena_mut(ArenaId id) {
  for (auto& a : arenas_) {
    if (a.info.id == id) return a;
  }
  throw Error(Errc::kInvalidArgument, "region has no " + std::string(arena_name(id)) + " arena");
}

Offset Region::alloc(ArenaId id, std::uint64_t size, std::uint64_t align) {
  if (align == 0 || !std::has_single_bit(align)) {
    throw Error(Errc::kInvalidArgument, "alignment must be a power of two");
  }
  if (size == 0) throw Error(Errc::kInvalidArgument, "zero-sized allocation");
  Arena& a = arena_mut(id);
  for (auto it = a.free_list.rbegin(); it != a.free_list.rend(); ++it) {
    if (it->second == size && it->first % align == 0) {
      const Offset off = it->first;
      a.free_list.erase(std::next(it).base());
      return off;
    }
  }
  const Offset start = round_up(a.cursor, align);
  if (start + size > a.info.base + a.info.length) {
    throw Error(Errc::kOutOfSpace, std::string(arena_name(id)) + " arena exhausted");
  }
  a.cursor = start + size;
  return start;
}

void Region::free(ArenaId id, Offset offset, std::uint64_t size) {
  Arena& a = arena_mut(id);
  if (offset < a.info.base || offset + size > a.cursor) {
    throw Error(Errc::kFault, "free of a range never allocated from the " +
                                  std::string(arena_name(id)) + " arena");
  }
  a.free_list.emplace_back(offset, size);
}

void Region::rebuild_arena(ArenaId id, std::uint64_t slot_size,
                           const std::vector<bool>& live_slots) {
  Arena& a = arena_mut(id);
  a.free_list.clear();
  std::size_t highest = live_slots.size();
  for (std::size_t i = live_slots.size(); i-- > 0;) {
    if (live_slots[i]) {
      highest = i;
      break;
    }
  }
  if (highest == live_slots.size()) {
    a.cursor = a.info.base;
    return;
  }
  a.cursor = a.info.base + (highest + 1) * slot_size;
  // Descending so that the lowest free slot is handed out first.
  for (std::size_t i = highest; i-- > 0;) {
    if (!live_slots[i]) a.free_list.emplace_back(a.info.base + i * slot_size, slot_size);
  }
}

std::uint64_t Region::arena_slot_capacity(ArenaId id, std::uint64_t slot_size) const {
  return arena(id).length / slot_size;
}

std::uint64_t Region::arena_cursor(ArenaId id) const {
  for (const auto& a : arenas_) {
    if (a.info.id == id) return a.cursor;
  }
  return 0;
}

std::size_t Region::arena_free_count(ArenaId id) const {
  for (const auto& a : arenas_) {
    if (a.info.id == id) return a.free_list.size();
  }
  return 0;
}

void Region::set_init_flag(ArenaId id, bool value) {
  for (std::size_t i = 0; i < arenas_.size(); ++i) {
    if (arenas_[i].info.id != id) continue;
    const Offset field = kArenaTableOffset + i * kArenaEntrySize + 4;
    const std::uint32_t raw = value ? 1u : 0u;
    store(field, raw);
    flush(field, sizeof(raw));
    fence();
    arenas_[i].info.initialized = value;
    return;
  }
  throw Error(Errc::kInvalidArgument, "region has no " + std::string(arena_name(id)) + " arena");
}

// ---------------------------------------------------------------------------
// Introspection

void Region::reset_stats() {
  stats_ = {};
  std::fill(flushed_bitmap_.begin(), flushed_bitmap_.end(), 0);
}

bool Region::is_dirty(std::uint64_t line) const {
  if (!durability_ || line >= line_count()) return false;
  return (durability_->dirty[line / 64] >> (line % 64)) & 1;
}

std::size_t Region::dirty_line_count() const {
  return durability_ ? durability_->dirty_count : 0;
}

std::size_t Region::pending_flush_count() const {
  return durability_ ? durability_->pending.size() : 0;
}

std::span<const std::byte> Region::durable_bytes() const {
  if (!durability_) {
    throw Error(Errc::kUnsupported, "durable image is only tracked by SimulatedCrash regions");
  }
  return durability_->durable;
}

void Region::set_crash_trigger(CrashTrigger trigger) noexcept {
  trigger_ = trigger;
  trigger_armed_ = false;
}

void Region::set_trace_recording(bool on) { tracing_ = on; }

void Region::pretouch() const {
  volatile std::byte sink{};
  for (std::uint64_t off = 0; off < capacity_; off += kPageSize) sink = data_[off];
  (void)sink;
}

void Region::sync() {
  if (fd_ >= 0 && data_ != nullptr) ::msync(data_, capacity_, MS_SYNC);
}

}  // namespace persistkit
