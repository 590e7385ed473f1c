// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "persistkit/list.hpp"

using namespace persistkit;

namespace {

Region small_region() {
  const RegionLayout layout = RegionLayout::for_slots(4096, 0, 0);
  return Region::create_simulated(layout.required_capacity(), layout);
}

std::vector<std::int64_t> firsts(const std::vector<Payload56>& values) {
  std::vector<std::int64_t> out;
  for (const auto& v : values) out.push_back(v.words[0]);
  return out;
}

const Mode kModes[] = {Mode::kFullyPersistent, Mode::kPartlyDirect, Mode::kPartlyCheckpoint};

}  // namespace

TEST_CASE("list init, double init and reconstruct of an empty list") {
  Region r = small_region();
  auto list = RecoverableList::init(r, Mode::kPartlyDirect);
  CHECK(list.length() == 0);
  CHECK_FALSE(list.head());
  try {
    RecoverableList::init(r, Mode::kPartlyDirect);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kAlreadyInitialized);
  }
  Region c = r.simulate_crash(PendingPolicy::drop_all());
  auto back = RecoverableList::reconstruct(c);
  CHECK(back.length() == 0);
  CHECK(back.mode() == Mode::kPartlyDirect);
}

TEST_CASE("reconstruct without init is an error") {
  Region r = small_region();
  try {
    RecoverableList::reconstruct(r);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNotInitialized);
  }
}

TEST_CASE("append flush counts per mode") {
  for (Mode mode : kModes) {
    CAPTURE(mode_name(mode));
    Region r = small_region();
    auto list = RecoverableList::init(r, mode);
    r.reset_stats();
    list.append(make_payload56(1));
    // value+next line, head pointer; fully also the prev line.
    CHECK(r.stats().line_flushes == (is_partly(mode) ? 2u : 3u));
    list.append(make_payload56(2));
    CHECK(r.stats().line_flushes == (is_partly(mode) ? 4u : 6u));
    CHECK(r.stats().fences == 2);
  }
}

TEST_CASE("remove flush counts per mode") {
  for (Mode mode : kModes) {
    CAPTURE(mode_name(mode));
    Region r = small_region();
    auto list = RecoverableList::init(r, mode);
    const NodeRef a = list.append(make_payload56(1));
    const NodeRef b = list.append(make_payload56(2));
    list.append(make_payload56(3));
    r.reset_stats();
    list.remove(b);  // middle: predecessor next, successor prev (fully)
    CHECK(r.stats().line_flushes == (is_partly(mode) ? 1u : 2u));
    r.reset_stats();
    list.remove(list.tail());  // tail: predecessor next only
    CHECK(r.stats().line_flushes == 1);
    r.reset_stats();
    list.remove(a);  // sole node: head pointer only
    CHECK(r.stats().line_flushes == 1);
    CHECK(list.length() == 0);
  }
}

TEST_CASE("remove of a non-member is not-found with zero flushes") {
  Region r = small_region();
  auto list = RecoverableList::init(r, Mode::kPartlyDirect);
  const NodeRef a = list.append(make_payload56(1));
  list.remove(a);
  r.reset_stats();
  try {
    list.remove(a);
    FAIL("expected not found");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNotFound);
  }
  CHECK_THROWS_AS(list.remove(NodeRef{12345}), Error);
  CHECK(r.stats().line_flushes == 0);
}

TEST_CASE("three appends, crash, reconstruct") {
  for (Mode mode : kModes) {
    CAPTURE(mode_name(mode));
    Region r = small_region();
    auto list = RecoverableList::init(r, mode);
    for (int i = 1; i <= 3; ++i) list.append(make_payload56(i));
    Region c = r.simulate_crash(PendingPolicy::drop_all());
    auto back = RecoverableList::reconstruct(c);
    CHECK(firsts(back.values_forward()) == std::vector<std::int64_t>{1, 2, 3});
    CHECK(firsts(back.values_backward()) == std::vector<std::int64_t>{3, 2, 1});
    CHECK(back.length() == 3);
    CHECK(back.value(back.tail()) == make_payload56(3));
    CHECK(back.prev(back.head()).offset == kNil);
  }
}

TEST_CASE("random append/remove trace matches a vector model across a crash") {
  for (Mode mode : kModes) {
    CAPTURE(mode_name(mode));
    Region r = small_region();
    auto list = RecoverableList::init(r, mode);
    std::vector<std::pair<std::int64_t, NodeRef>> model;
    std::mt19937_64 rng(7);
    std::int64_t next = 1;
    for (int i = 0; i < 3000; ++i) {
      if (model.empty() || rng() % 3 != 0) {
        model.emplace_back(next, list.append(make_payload56(next)));
        ++next;
      } else {
        const std::size_t k = rng() % model.size();
        list.remove(model[k].second);
        model.erase(model.begin() + static_cast<std::ptrdiff_t>(k));
      }
    }
    std::vector<std::int64_t> want;
    for (const auto& [k, unused] : model) want.push_back(k);
    CHECK(firsts(list.values_forward()) == want);
    Region c = r.simulate_crash(PendingPolicy::drop_all());
    auto back = RecoverableList::reconstruct(c);
    CHECK(firsts(back.values_forward()) == want);
    auto rev = firsts(back.values_backward());
    std::reverse(rev.begin(), rev.end());
    CHECK(rev == want);
    // Reused slots after reconstruction keep the chain intact.
    back.append(make_payload56(-1));
    want.push_back(-1);
    CHECK(firsts(back.values_forward()) == want);
  }
}

TEST_CASE("partly mode never flushes prev links") {
  Region r = small_region();
  r.set_trace_recording(true);
  auto list = RecoverableList::init(r, Mode::kPartlyDirect);
  const Offset base = r.arena(ArenaId::kList).base;
  for (int i = 1; i <= 50; ++i) list.append(make_payload56(i));
  for (const auto& e : r.trace()) {
    if (e.kind != TraceEvent::Kind::kFlush || e.offset < base) continue;
    CHECK((e.offset - base) % kListSlot < 64);
  }
}

TEST_CASE("forward cycle in persistent links is detected") {
  Region r = small_region();
  auto list = RecoverableList::init(r, Mode::kPartlyDirect);
  const NodeRef a = list.append(make_payload56(1));
  list.append(make_payload56(2));
  const Offset tail = list.tail().offset;
  r.store(tail + kListNextField, a.offset);
  r.flush(tail + kListNextField, 8);
  r.fence();
  Region c = r.simulate_crash(PendingPolicy::drop_all());
  try {
    RecoverableList::reconstruct(c);
    FAIL("expected corruption");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kCorruption);
  }
}

TEST_CASE("self-loop in staged state does not reach the region") {
  Region r = small_region();
  auto list = RecoverableList::init(r, Mode::kPartlyCheckpoint);
  for (int i = 1; i <= 10; ++i) list.append(make_payload56(i));
  list.inject_volatile_bug(VolatileBug::kSelfLoopNext, 3);
  CHECK_THROWS_AS(list.values_forward(), Error);
  Region c = r.simulate_crash(PendingPolicy::drop_all());
  auto back = RecoverableList::reconstruct(c);
  CHECK(back.length() == 10);
}

TEST_CASE("bug injection outside checkpoint mode is unsupported") {
  Region r = small_region();
  auto list = RecoverableList::init(r, Mode::kPartlyDirect);
  list.append(make_payload56(1));
  try {
    list.inject_volatile_bug(VolatileBug::kSelfLoopNext, 1);
    FAIL("expected unsupported");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kUnsupported);
  }
}
