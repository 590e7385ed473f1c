// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "persistkit/persist_view.hpp"
#include "persistkit/region.hpp"

using namespace persistkit;

namespace {

constexpr std::uint64_t kCap = 64 * 1024;

Offset list_base(const Region& r) { return r.arena(ArenaId::kList).base; }

std::filesystem::path temp_region(const char* tag) {
  return std::filesystem::temp_directory_path() /
         ("persistkit-test-" + std::to_string(::getpid()) + "-" + tag + ".region");
}

}  // namespace

TEST_CASE("region creation validates capacity") {
  CHECK_THROWS_AS(Region::create_simulated(1000), Error);
  CHECK_THROWS_AS(Region::create_simulated(1024), Error);
  try {
    Region::create_simulated(512);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kCreation);
  }
  Region r = Region::create_simulated(kCap);
  CHECK(r.capacity() == kCap);
  CHECK(r.line_count() == kCap / 64);
  CHECK(r.has_arena(ArenaId::kList));
  CHECK(r.arena(ArenaId::kList).base % kDeviceBlock == 0);
}

TEST_CASE("fresh region has zero stats") {
  Region r = Region::create_simulated(kCap);
  CHECK(r.stats().line_flushes == 0);
  CHECK(r.stats().fences == 0);
  CHECK(r.total_flush_calls() == 0);
}

TEST_CASE("write outside any single arena faults") {
  Region r = Region::create_simulated(kCap);
  const std::uint64_t x = 7;
  try {
    r.store(kCap - 4, x);
    FAIL("expected fault");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kFault);
  }
}

TEST_CASE("unflushed and unfenced writes are not durable") {
  Region r = Region::create_simulated(kCap);
  const Offset a = list_base(r);
  const std::uint64_t v = 0xabcdef;
  r.store(a, v);
  CHECK(r.is_dirty(a / 64));
  CHECK(r.simulate_crash(PendingPolicy::keep_all()).load<std::uint64_t>(a) == 0);

  r.flush(a, 8);
  CHECK_FALSE(r.is_dirty(a / 64));
  CHECK(r.pending_flush_count() == 1);
  CHECK(r.simulate_crash(PendingPolicy::drop_all()).load<std::uint64_t>(a) == 0);
  CHECK(r.simulate_crash(PendingPolicy::keep_all()).load<std::uint64_t>(a) == v);

  r.fence();
  CHECK(r.pending_flush_count() == 0);
  CHECK(r.simulate_crash(PendingPolicy::drop_all()).load<std::uint64_t>(a) == v);
}

TEST_CASE("random subset policy is deterministic per seed") {
  Region r = Region::create_simulated(kCap);
  const Offset a = list_base(r);
  for (std::uint64_t i = 0; i < 64; ++i) {
    r.store(a + i * 64, i + 1);
    r.flush(a + i * 64, 8);
  }
  auto survivors = [&](std::uint64_t seed) {
    Region c = r.simulate_crash(PendingPolicy::random_subset(seed));
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < 64; ++i) out.push_back(c.load<std::uint64_t>(a + i * 64));
    return out;
  };
  CHECK(survivors(5) == survivors(5));
  const auto s = survivors(5);
  const auto kept = std::count_if(s.begin(), s.end(), [](std::uint64_t x) { return x != 0; });
  CHECK(kept > 0);
  CHECK(kept < 64);
}

TEST_CASE("line flush counting matches the trace-replay oracle") {
  Region r = Region::create_simulated(kCap);
  r.set_trace_recording(true);
  const Offset a = list_base(r);
  r.flush(a, 64);        // 1 line
  r.flush(a + 60, 8);    // straddles: 2 lines
  r.flush(a + 8, 8);     // 1 line, repeat
  r.flush(a + 128, 256); // 4 lines
  r.fence();
  CHECK(r.stats().line_flushes == 8);
  CHECK(oracle::replayed_line_flushes(r.trace()) == 8);
  CHECK(oracle::replayed_fences(r.trace()) == 1);
  CHECK(r.stats().distinct_lines_flushed == 6);
}

TEST_CASE("crash triggers") {
  SUBCASE("after fence 0 fires on entry to the first fence") {
    Region r = Region::create_simulated(kCap);
    r.set_crash_trigger({CrashTrigger::Kind::kAfterFence, 0});
    r.store(list_base(r), std::uint64_t{1});
    r.flush(list_base(r), 8);
    CHECK_THROWS_AS(r.fence(), CrashSignal);
    CHECK(r.simulate_crash(PendingPolicy::drop_all()).load<std::uint64_t>(list_base(r)) == 0);
  }
  SUBCASE("after fence k fires at the next mutating call") {
    Region r = Region::create_simulated(kCap);
    r.set_crash_trigger({CrashTrigger::Kind::kAfterFence, 2});
    r.fence();
    r.fence();
    CHECK(r.total_fences() == 2);
    CHECK_THROWS_AS(r.store(list_base(r), std::uint64_t{1}), CrashSignal);
  }
  SUBCASE("after flush k fires right after that flush") {
    Region r = Region::create_simulated(kCap);
    r.set_crash_trigger({CrashTrigger::Kind::kAfterFlush, 2});
    r.flush(list_base(r), 8);
    CHECK_THROWS_AS(r.flush(list_base(r), 8), CrashSignal);
    CHECK(r.total_flush_calls() == 2);
  }
  SUBCASE("after flush 0 fires before the first flush") {
    Region r = Region::create_simulated(kCap);
    r.set_crash_trigger({CrashTrigger::Kind::kAfterFlush, 0});
    CHECK_THROWS_AS(r.flush(list_base(r), 8), CrashSignal);
    CHECK(r.total_flush_calls() == 0);
  }
}

TEST_CASE("arena allocation, reuse and exhaustion") {
  RegionLayout layout{{{ArenaId::kList, 1024}}};
  Region r = Region::create_simulated(2048, layout);
  const Offset base = list_base(r);
  const Offset a = r.alloc(ArenaId::kList, 128, 64);
  const Offset b = r.alloc(ArenaId::kList, 128, 64);
  CHECK(a == base);
  CHECK(b == base + 128);
  r.free(ArenaId::kList, a, 128);
  CHECK(r.alloc(ArenaId::kList, 128, 64) == a);
  for (int i = 0; i < 6; ++i) r.alloc(ArenaId::kList, 128, 64);
  try {
    r.alloc(ArenaId::kList, 128, 64);
    FAIL("expected out of space");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kOutOfSpace);
  }
}

TEST_CASE("rebuild_arena restores cursor and free list") {
  RegionLayout layout{{{ArenaId::kList, 1024}}};
  Region r = Region::create_simulated(2048, layout);
  const Offset base = list_base(r);
  r.rebuild_arena(ArenaId::kList, 128, {true, false, true, false});
  CHECK(r.arena_cursor(ArenaId::kList) == base + 3 * 128);
  CHECK(r.arena_free_count(ArenaId::kList) == 1);
  CHECK(r.alloc(ArenaId::kList, 128, 128) == base + 128);
  CHECK(r.alloc(ArenaId::kList, 128, 128) == base + 384);
}

TEST_CASE("init flags are durable and survive a crash") {
  Region r = Region::create_simulated(kCap);
  CHECK_FALSE(r.init_flag(ArenaId::kList));
  r.set_init_flag(ArenaId::kList, true);
  Region c = r.simulate_crash(PendingPolicy::drop_all());
  CHECK(c.init_flag(ArenaId::kList));
  CHECK_FALSE(c.init_flag(ArenaId::kMapEntries));
}

TEST_CASE("file-backed region round trip") {
  const auto path = temp_region("roundtrip");
  std::filesystem::remove(path);
  Offset a = 0;
  {
    Region r = Region::create(path, kCap, Backend::kFileBacked);
    a = list_base(r);
    r.store(a, std::uint64_t{42});
    r.flush(a, 8);
    r.fence();
    r.set_init_flag(ArenaId::kTreeNodes, true);
    CHECK(r.stats().line_flushes >= 1);
    CHECK_THROWS_AS(r.simulate_crash(PendingPolicy::drop_all()), Error);
  }
  {
    Region r = Region::open(path);
    CHECK(r.capacity() == kCap);
    CHECK(r.load<std::uint64_t>(a) == 42);
    CHECK(r.init_flag(ArenaId::kTreeNodes));
  }
  std::filesystem::remove(path);
}

TEST_CASE("open rejects missing, truncated and foreign files") {
  const auto path = temp_region("bad");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Region::open(path), Error);
  { Region r = Region::create(path, kCap, Backend::kFileBacked); }
  std::filesystem::resize_file(path, kCap / 2);
  try {
    Region::open(path);
    FAIL("expected open error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kOpen);
  }
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << std::string(4096, 'x');
  }
  CHECK_THROWS_AS(Region::open(path), Error);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint view stages stores until flush") {
  Region r = Region::create_simulated(kCap);
  const Offset a = list_base(r);
  PersistView v(r, Mode::kPartlyCheckpoint);
  v.store(a, std::uint64_t{9});
  v.store(a + 64, std::uint64_t{10});
  CHECK(r.load<std::uint64_t>(a) == 0);
  CHECK(v.load<std::uint64_t>(a) == 9);
  v.flush(a, 8);
  CHECK(r.load<std::uint64_t>(a) == 9);
  CHECK(r.load<std::uint64_t>(a + 64) == 0);
  v.end_op();
  CHECK(r.stats().fences == 1);
  PersistView direct(r, Mode::kPartlyDirect);
  CHECK_THROWS_AS(direct.staged(a, 8), Error);
}

TEST_CASE("batched fence policy fences every K ops and drains the rest") {
  Region r = Region::create_simulated(kCap);
  PersistView v(r, Mode::kPartlyDirect, FencePolicy::batched(4));
  for (int i = 0; i < 10; ++i) v.end_op();
  CHECK(r.stats().fences == 2);
  v.drain();
  CHECK(r.stats().fences == 3);
  v.drain();
  CHECK(r.stats().fences == 3);
}
