// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "persistkit/handle.hpp"
#include "persistkit/region.hpp"
#include "persistkit/workload.hpp"

namespace persistkit {

struct CrashPlan {
  CrashTrigger trigger;
  PendingPolicy policy = PendingPolicy::drop_all();
};

enum class VerdictKind { kPass, kDetectedCorruption, kSilentDivergence };
std::string_view verdict_name(VerdictKind kind) noexcept;

struct Verdict {
  std::uint64_t crash_index = 0;
  Structure structure = Structure::kList;
  VerdictKind kind = VerdictKind::kPass;
  bool passed = false;
  /// Crash landed between operations rather than inside one.
  bool op_boundary = true;
  /// False when the trigger never fired and the crash was taken at the end.
  bool fired = false;
  /// Data operations (initial inserts included) completed before the crash.
  std::uint64_t completed_ops = 0;
  std::optional<std::int64_t> divergence_key;
  std::string detail;
};

/// Replays the spec's trace on a SimulatedCrash region with the plan's
/// trigger armed, crashes, reconstructs and compares against a plain
/// volatile reference replayed to the last completed operation. Mid-op
/// crashes also accept the state after the interrupted operation, and a
/// detected corruption passes only there.
Verdict replay_and_crash(const WorkloadSpec& spec, const CrashPlan& plan);

/// Reference content after the first `data_ops` operations of the trace
/// (initial inserts first). Shares nothing with the recoverable structures.
Content reference_content(Structure structure, const Trace& trace, std::uint64_t data_ops);

struct SweepReport {
  WorkloadSpec spec;
  std::uint64_t fences = 0;
  std::vector<Verdict> verdicts;

  std::uint64_t passed() const;
  std::uint64_t failed() const { return verdicts.size() - passed(); }
  std::uint64_t silent_divergences() const;
  std::uint64_t detected_corruptions() const;
  double pass_rate() const;

  void write_csv(std::ostream& out, bool header = true) const;
  void write_text(std::ostream& out) const;
};

/// Crashes after every fence index 0..F of the trace, F being the fence
/// count of an uncrashed run.
SweepReport sweep_crash_points(const WorkloadSpec& spec,
                               PendingPolicy policy = PendingPolicy::drop_all());

/// Bugs that have a target in the given structure.
std::vector<VolatileBug> applicable_bugs(Structure structure);

/// Runs the trace in PartlyCheckpoint mode, injects `bug`, crashes and
/// checks recovery reproduces the pre-bug content.
Verdict run_bug_injection(const WorkloadSpec& spec, VolatileBug bug, std::uint64_t bug_seed);

struct IsolationReport {
  Structure structure = Structure::kList;
  std::uint64_t trials = 0;
  std::uint64_t recovered = 0;
  std::vector<std::string> failures;
};

/// `trials` randomized workloads, each followed by one random applicable bug.
IsolationReport check_isolation(Structure structure, std::uint64_t trials, std::uint64_t seed);

}  // namespace persistkit
