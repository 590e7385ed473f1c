// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "persistkit/error.hpp"
#include "persistkit/types.hpp"

namespace persistkit {

enum class ArenaId : std::uint32_t {
  kHeader = 0,
  kList = 1,
  kTreeNodes = 2,
  kTreeRecords = 3,
  kMapEntries = 4,
  kMapBuckets = 5,
};

std::string_view arena_name(ArenaId id) noexcept;

// Fixed header geometry. Block 0 holds magic and the arena table, blocks 1-3
// are the root blocks of the list, tree and hashmap.
inline constexpr char kMagic[8] = {'P', 'R', 'S', 'T', 'K', 'I', 'T', '1'};
inline constexpr std::uint64_t kHeaderArenaSize = 4 * kDeviceBlock;
inline constexpr Offset kListRoot = 1 * kDeviceBlock;
inline constexpr Offset kTreeRoot = 2 * kDeviceBlock;
inline constexpr Offset kMapRoot = 3 * kDeviceBlock;
inline constexpr std::uint64_t kArenaTableOffset = 24;
inline constexpr std::uint64_t kArenaEntrySize = 24;
inline constexpr std::uint32_t kMaxArenas =
    (kDeviceBlock - kArenaTableOffset) / kArenaEntrySize;

struct ArenaSpec {
  ArenaId id;
  std::uint64_t length;  // bytes, multiple of kDeviceBlock
};

/// Sizes of the structure arenas placed after the header arena.
struct RegionLayout {
  std::vector<ArenaSpec> arenas;

  /// Splits the body of a region of `capacity` bytes between all arenas.
  static RegionLayout for_capacity(std::uint64_t capacity);

  /// Exact-fit layout: room for the given number of slots per structure.
  static RegionLayout for_slots(std::uint64_t list_nodes, std::uint64_t tree_keys,
                                std::uint64_t map_entries);

  std::uint64_t required_capacity() const noexcept;
};

/// Per-run counters. wall_time and ops are filled in by the caller.
struct RunStats {
  std::uint64_t ops = 0;
  std::uint64_t line_flushes = 0;
  std::uint64_t distinct_lines_flushed = 0;
  std::uint64_t fences = 0;
  double wall_time = 0.0;
  double flush_time = 0.0;
};

/// What happens to flushed-but-unfenced lines at a simulated crash.
struct PendingPolicy {
  enum class Kind { kKeepAll, kDropAll, kRandomSubset };
  Kind kind = Kind::kDropAll;
  std::uint64_t seed = 0;

  static PendingPolicy keep_all() noexcept { return {Kind::kKeepAll, 0}; }
  static PendingPolicy drop_all() noexcept { return {Kind::kDropAll, 0}; }
  static PendingPolicy random_subset(std::uint64_t seed) noexcept {
    return {Kind::kRandomSubset, seed};
  }
};

/// Arms a region to throw CrashSignal at a chosen flush/fence index.
///   kAfterFence, k >= 1: fires at the first mutating call after fence k.
///   kAfterFence, k == 0: fires on entry to the first fence.
///   kAfterFlush, k >= 1: fires right after flush call k is issued.
///   kAfterFlush, k == 0: fires on entry to the first flush.
struct CrashTrigger {
  enum class Kind { kNone, kAfterFence, kAfterFlush };
  Kind kind = Kind::kNone;
  std::uint64_t index = 0;
};

/// One recorded region event, for trace-replay oracles.
struct TraceEvent {
  enum class Kind : std::uint8_t { kWrite, kFlush, kFence };
  Kind kind;
  Offset offset;
  std::uint64_t length;
};

struct ArenaInfo {
  ArenaId id;
  Offset base = 0;
  std::uint64_t length = 0;
  bool initialized = false;
};

struct RegionOptions {
  /// FileBacked only: msync the pages touched since the previous fence.
  bool sync_on_fence = false;
  /// Wrap each flush call in a monotonic clock pair.
  bool time_flushes = false;
};

/// A byte-addressable persistent region modelled at cache-line granularity.
///
/// Stores land in the working image immediately. On the SimulatedCrash
/// backend a separate durable image changes only when a flushed line is
/// accepted by a fence; simulate_crash() rebuilds a region from that image.
/// On the FileBacked backend the working image is a shared mapping of the
/// region file and flushes execute real cache-line write-backs.
class Region {
 public:
  static Region create(const std::filesystem::path& path, std::uint64_t capacity,
                       Backend backend, const RegionLayout& layout = {},
                       RegionOptions options = {});
  static Region create_simulated(std::uint64_t capacity, const RegionLayout& layout = {},
                                 RegionOptions options = {});
  static Region open(const std::filesystem::path& path, RegionOptions options = {});

  Region(Region&&) noexcept;
  Region& operator=(Region&&) noexcept;
  Region(const Region&) = delete;
  Region& operator=(const Region&) = delete;
  ~Region();

  Backend backend() const noexcept { return backend_; }
  std::uint64_t capacity() const noexcept { return capacity_; }
  std::uint64_t line_count() const noexcept { return capacity_ / kLineSize; }
  const std::filesystem::path& path() const noexcept { return path_; }

  void write(Offset offset, std::span<const std::byte> payload);
  void read(Offset offset, std::span<std::byte> out) const;

  template <class T>
  void store(Offset offset, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    write(offset, std::as_bytes(std::span<const T, 1>(&value, 1)));
  }

  template <class T>
  T load(Offset offset) const {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    read(offset, std::as_writable_bytes(std::span<T, 1>(&value, 1)));
    return value;
  }

  /// Working image. Mutations must go through write().
  std::span<const std::byte> bytes() const noexcept { return {data_, capacity_}; }

  void flush(Offset offset, std::uint64_t length);
  void fence();

  /// SimulatedCrash only: a fresh region holding the durable image plus the
  /// policy-selected subset of pending flushes. Volatile bookkeeping is reset.
  Region simulate_crash(PendingPolicy policy) const;

  // Allocation. Bump pointer per arena plus a volatile free list.
  Offset alloc(ArenaId arena, std::uint64_t size, std::uint64_t align);
  void free(ArenaId arena, Offset offset, std::uint64_t size);
  /// Resets an arena's allocator from the set of live fixed-size slots found
  /// by a reconstruction pass. Slots below the highest live slot that are not
  /// live go on the free list.
  void rebuild_arena(ArenaId arena, std::uint64_t slot_size,
                     const std::vector<bool>& live_slots);
  std::uint64_t arena_slot_capacity(ArenaId arena, std::uint64_t slot_size) const;
  std::uint64_t arena_cursor(ArenaId arena) const;
  std::size_t arena_free_count(ArenaId arena) const;

  const ArenaInfo& arena(ArenaId id) const;
  bool has_arena(ArenaId id) const noexcept;
  bool init_flag(ArenaId id) const { return arena(id).initialized; }
  /// Writes, flushes and fences the arena's init flag.
  void set_init_flag(ArenaId id, bool value);

  const RunStats& stats() const noexcept { return stats_; }
  void reset_stats();

  // Durability introspection (SimulatedCrash only; FileBacked reports empty).
  bool is_dirty(std::uint64_t line) const;
  std::size_t dirty_line_count() const;
  std::size_t pending_flush_count() const;
  std::span<const std::byte> durable_bytes() const;

  void set_crash_trigger(CrashTrigger trigger) noexcept;
  /// Flush and fence calls issued since creation (not reset by reset_stats).
  std::uint64_t total_flush_calls() const noexcept { return flush_calls_; }
  std::uint64_t total_fences() const noexcept { return fence_calls_; }

  void set_trace_recording(bool on);
  const std::vector<TraceEvent>& trace() const noexcept { return trace_; }
  void clear_trace() { trace_.clear(); }

  /// Reads every page once so timing excludes first-touch faults.
  void pretouch() const;
  /// FileBacked: msync the whole mapping.
  void sync();

 private:
  struct Arena {
    ArenaInfo info;
    std::uint64_t cursor = 0;
    std::vector<std::pair<Offset, std::uint64_t>> free_list;
  };
  struct Durability;

  Region() = default;
  void release() noexcept;
  void lay_out(const RegionLayout& layout);
  void load_header();
  void write_header_and_persist();
  Arena& arena_mut(ArenaId id);
  void check_range(Offset offset, std::uint64_t length, const char* what) const;
  void maybe_fire_lazy_trigger();
  void mark_distinct(std::uint64_t first_line, std::uint64_t last_line);

  Backend backend_ = Backend::kSimulatedCrash;
  std::filesystem::path path_;
  std::uint64_t capacity_ = 0;
  RegionOptions options_;
  std::byte* data_ = nullptr;
  int fd_ = -1;
  std::vector<std::byte> heap_;  // working image for SimulatedCrash
  std::unique_ptr<Durability> durability_;
  std::vector<Arena> arenas_;
  RunStats stats_;
  std::vector<std::uint64_t> flushed_bitmap_;
  std::uint64_t flush_calls_ = 0;
  std::uint64_t fence_calls_ = 0;
  CrashTrigger trigger_;
  bool trigger_armed_ = false;
  bool tracing_ = false;
  std::vector<TraceEvent> trace_;
  std::uint64_t sync_lo_ = UINT64_MAX;
  std::uint64_t sync_hi_ = 0;
};

}  // namespace persistkit
