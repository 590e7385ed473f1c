// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "persistkit/crash_harness.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "persistkit/error.hpp"
#include "persistkit/hash.hpp"

namespace persistkit {

namespace {

template <class P>
ContentItem reference_item(std::int64_t key, const P& payload) {
  ContentItem item;
  item.key = key;
  for (std::size_t i = 0; i < payload.words.size(); ++i) item.words[i] = payload.words[i];
  return item;
}

const Op& data_op(const Trace& trace, std::uint64_t i, Op& scratch) {
  if (i < trace.init_keys.size()) {
    scratch = {Op::Kind::kInsert, trace.init_keys[i]};
    return scratch;
  }
  return trace.ops[i - trace.init_keys.size()];
}

Region fresh_region(const WorkloadSpec& spec, const Trace& trace) {
  const RegionLayout layout = layout_for(spec, trace);
  return Region::create_simulated(layout.required_capacity(), layout);
}

struct Comparison {
  bool equal = true;
  std::optional<std::int64_t> key;
};

Comparison compare(const Content& got, const Content& want) {
  const std::size_t n = std::min(got.size(), want.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(got[i] == want[i])) return {false, std::min(got[i].key, want[i].key)};
  }
  if (got.size() == want.size()) return {};
  return {false, got.size() > n ? got[n].key : want[n].key};
}

}  // namespace

std::string_view verdict_name(VerdictKind kind) noexcept {
  switch (kind) {
    case VerdictKind::kPass: return "pass";
    case VerdictKind::kDetectedCorruption: return "detected-corruption";
    case VerdictKind::kSilentDivergence: return "silent-divergence";
  }
  return "?";
}

Content reference_content(Structure structure, const Trace& trace, std::uint64_t data_ops) {
  Op scratch{};
  Content out;
  if (structure == Structure::kList) {
    std::vector<std::int64_t> order;
    for (std::uint64_t i = 0; i < data_ops; ++i) {
      const Op& op = data_op(trace, i, scratch);
      if (op.kind == Op::Kind::kInsert) {
        order.push_back(op.key);
      } else {
        order.erase(std::find(order.begin(), order.end(), op.key));
      }
    }
    for (std::int64_t k : order) out.push_back(reference_item(k, make_payload56(k)));
    return out;
  }
  std::map<std::int64_t, bool> keys;
  for (std::uint64_t i = 0; i < data_ops; ++i) {
    const Op& op = data_op(trace, i, scratch);
    if (op.kind == Op::Kind::kInsert) {
      keys[op.key] = true;
    } else {
      keys.erase(op.key);
    }
  }
  for (const auto& [k, unused] : keys) {
    out.push_back(structure == Structure::kTree ? reference_item(k, make_payload64(k))
                                                : reference_item(k, make_payload56(k)));
  }
  return out;
}

Verdict replay_and_crash(const WorkloadSpec& spec, const CrashPlan& plan) {
  const Trace trace = generate_trace(spec);
  const std::uint64_t total = trace.init_keys.size() + trace.ops.size();
  Region region = fresh_region(spec, trace);
  region.set_crash_trigger(plan.trigger);

  Verdict v;
  v.structure = spec.structure;
  v.crash_index = plan.trigger.index;
  // Step 0 is init; step s > 0 is data op s - 1.
  std::uint64_t completed_steps = 0;
  std::uint64_t step_mark = 0;
  auto mark = [&] { return region.total_flush_calls() + region.total_fences(); };
  try {
    step_mark = mark();
    auto handle = init_structure(region, spec);
    completed_steps = 1;
    Op scratch{};
    for (std::uint64_t i = 0; i < total; ++i) {
      step_mark = mark();
      const Op& op = data_op(trace, i, scratch);
      if (op.kind == Op::Kind::kInsert) {
        handle->insert(op.key);
      } else {
        handle->erase(op.key);
      }
      ++completed_steps;
    }
    step_mark = mark();
    handle->finish();
  } catch (const CrashSignal&) {
    v.fired = true;
    v.op_boundary = mark() == step_mark;
  }
  const std::uint64_t completed_ops = completed_steps == 0 ? 0 : completed_steps - 1;
  v.completed_ops = completed_ops;

  Region crashed = region.simulate_crash(plan.policy);
  Content recovered;
  try {
    if (crashed.init_flag(root_arena(spec.structure))) {
      auto handle = reconstruct_structure(crashed, spec);
      handle->check();
      recovered = handle->content();
    }
  } catch (const Error& e) {
    v.kind = VerdictKind::kDetectedCorruption;
    v.passed = !v.op_boundary;
    v.detail = e.what();
    return v;
  }

  const Content before = reference_content(spec.structure, trace, completed_ops);
  Comparison cmp = compare(recovered, before);
  if (!cmp.equal && !v.op_boundary && completed_steps <= total) {
    // Mid-op: the interrupted operation may already be durable.
    const std::uint64_t next = completed_steps == 0 ? 0 : completed_ops + 1;
    const Comparison after = compare(recovered, reference_content(spec.structure, trace, next));
    if (after.equal) cmp = after;
  }
  if (cmp.equal) {
    v.kind = VerdictKind::kPass;
    v.passed = true;
  } else {
    v.kind = VerdictKind::kSilentDivergence;
    v.passed = false;
    v.divergence_key = cmp.key;
    std::ostringstream detail;
    detail << "recovered " << recovered.size() << " items, reference " << before.size();
    v.detail = detail.str();
  }
  return v;
}

std::uint64_t SweepReport::passed() const {
  return std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

std::uint64_t SweepReport::silent_divergences() const {
  return std::count_if(verdicts.begin(), verdicts.end(),
                       [](const Verdict& v) { return v.kind == VerdictKind::kSilentDivergence; });
}

std::uint64_t SweepReport::detected_corruptions() const {
  return std::count_if(verdicts.begin(), verdicts.end(),
                       [](const Verdict& v) { return v.kind == VerdictKind::kDetectedCorruption; });
}

double SweepReport::pass_rate() const {
  if (verdicts.empty()) return 1.0;
  return static_cast<double>(passed()) / static_cast<double>(verdicts.size());
}

void SweepReport::write_csv(std::ostream& out, bool header) const {
  if (header) out << "crash_index,structure,verdict,divergence_key\n";
  for (const Verdict& v : verdicts) {
    out << v.crash_index << ',' << structure_name(v.structure) << ',' << verdict_name(v.kind) << ',';
    if (v.divergence_key) out << *v.divergence_key;
    out << '\n';
  }
}

void SweepReport::write_text(std::ostream& out) const {
  for (const Verdict& v : verdicts) {
    out << "crash after fence " << v.crash_index << ": " << structure_name(v.structure) << ' '
        << verdict_name(v.kind) << (v.passed ? "" : " FAIL")
        << (v.op_boundary ? " [op boundary]" : " [mid-op]") << " completed_ops=" << v.completed_ops;
    if (v.divergence_key) out << " divergence_key=" << *v.divergence_key;
    if (!v.detail.empty()) out << " (" << v.detail << ')';
    out << '\n';
  }
  out << structure_name(spec.structure) << ' ' << mode_name(spec.mode) << ' ' << spec.mix.label()
      << ": " << passed() << '/' << verdicts.size() << " passed, " << silent_divergences()
      << " silent divergences, " << detected_corruptions() << " detected corruptions over "
      << fences << " fences\n";
}

SweepReport sweep_crash_points(const WorkloadSpec& spec, PendingPolicy policy) {
  SweepReport report;
  report.spec = spec;
  {
    const Trace trace = generate_trace(spec);
    Region region = fresh_region(spec, trace);
    auto handle = init_structure(region, spec);
    for (std::int64_t k : trace.init_keys) handle->insert(k);
    for (const Op& op : trace.ops) {
      if (op.kind == Op::Kind::kInsert) {
        handle->insert(op.key);
      } else {
        handle->erase(op.key);
      }
    }
    handle->finish();
    report.fences = region.total_fences();
  }
  if (report.fences > 100000) {
    throw Error(Errc::kInvalidArgument, "trace too long to sweep: " +
                                            std::to_string(report.fences) + " fences");
  }
  report.verdicts.reserve(report.fences + 1);
  for (std::uint64_t k = 0; k <= report.fences; ++k) {
    CrashPlan plan{{CrashTrigger::Kind::kAfterFence, k}, policy};
    report.verdicts.push_back(replay_and_crash(spec, plan));
  }
  return report;
}

std::vector<VolatileBug> applicable_bugs(Structure structure) {
  switch (structure) {
    case Structure::kList:
    case Structure::kTree:
      return {VolatileBug::kSelfLoopNext, VolatileBug::kScrambledPrev, VolatileBug::kDanglingTail};
    case Structure::kMap:
      return {VolatileBug::kSelfLoopNext, VolatileBug::kWrongHashCache, VolatileBug::kDanglingTail};
  }
  return {};
}

Verdict run_bug_injection(const WorkloadSpec& input, VolatileBug bug, std::uint64_t bug_seed) {
  WorkloadSpec spec = input;
  spec.mode = Mode::kPartlyCheckpoint;
  const Trace trace = generate_trace(spec);
  Region region = fresh_region(spec, trace);
  auto handle = init_structure(region, spec);
  for (std::int64_t k : trace.init_keys) handle->insert(k);
  for (const Op& op : trace.ops) {
    if (op.kind == Op::Kind::kInsert) {
      handle->insert(op.key);
    } else {
      handle->erase(op.key);
    }
  }
  handle->finish();
  const Content before = handle->content();

  Verdict v;
  v.structure = spec.structure;
  v.crash_index = region.total_fences();
  v.completed_ops = trace.init_keys.size() + trace.ops.size();
  handle->inject(bug, bug_seed);

  Region crashed = region.simulate_crash(PendingPolicy::drop_all());
  try {
    auto recovered = reconstruct_structure(crashed, spec);
    recovered->check();
    const Comparison cmp = compare(recovered->content(), before);
    v.passed = cmp.equal;
    v.kind = cmp.equal ? VerdictKind::kPass : VerdictKind::kSilentDivergence;
    v.divergence_key = cmp.key;
  } catch (const Error& e) {
    v.kind = VerdictKind::kDetectedCorruption;
    v.passed = false;
    v.detail = e.what();
  }
  return v;
}

IsolationReport check_isolation(Structure structure, std::uint64_t trials, std::uint64_t seed) {
  IsolationReport report;
  report.structure = structure;
  const auto bugs = applicable_bugs(structure);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::uint64_t r = mix64(seed + t);
    WorkloadSpec spec;
    spec.structure = structure;
    spec.mode = Mode::kPartlyCheckpoint;
    spec.mix = OpMix{1 + static_cast<std::uint32_t>(r % 4), 1};
    spec.init_count = 32 + (r >> 8) % 400;
    spec.op_count = 50 + (r >> 20) % 150;
    spec.seed = r;
    const VolatileBug bug = bugs[(r >> 40) % bugs.size()];
    const Verdict v = run_bug_injection(spec, bug, mix64(r));
    ++report.trials;
    if (v.passed) {
      ++report.recovered;
    } else {
      std::ostringstream msg;
      msg << "trial " << t << ' ' << bug_name(bug) << ": " << verdict_name(v.kind) << ' ' << v.detail;
      report.failures.push_back(msg.str());
    }
  }
  return report;
}

}  // namespace persistkit
