// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

// persistkit command-line driver: benchmarks and crash sweeps, CSV output.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "persistkit/bench.hpp"
#include "persistkit/crash_harness.hpp"
#include "persistkit/error.hpp"

using namespace persistkit;

namespace {

struct WorkloadFlags {
  std::string structure = "list";
  std::string mode = "partly";
  std::string mix = "1:1";
  std::string fence = "per-op";
  std::uint64_t ops = 1000000;
  std::uint64_t init = 2000000;
  std::uint64_t seed = 1;
  double load_factor = 0.75;
  std::uint32_t bucket_size = 19;

  void attach(CLI::App* cmd) {
    cmd->add_option("--structure", structure, "list | tree | map")
        ->check(CLI::IsMember({"list", "tree", "map"}));
    cmd->add_option("--mode", mode, "full | partly | partly-ckpt")
        ->check(CLI::IsMember({"full", "partly", "partly-ckpt"}));
    cmd->add_option("--mix", mix, "inserts:deletes, insert-only or delete-only");
    cmd->add_option("--fence", fence, "per-op or batch=K");
    cmd->add_option("--ops", ops, "timed operations");
    cmd->add_option("--init", init, "initial entries");
    cmd->add_option("--seed", seed, "trace seed");
    cmd->add_option("--load-factor", load_factor, "hashmap load factor");
    cmd->add_option("--bucket-size", bucket_size, "tree reconstruction fanout (10..19)");
  }

  WorkloadSpec spec() const {
    WorkloadSpec s;
    s.structure = parse_structure(structure);
    s.mode = parse_mode(mode);
    s.mix = OpMix::parse(mix);
    s.fence = parse_fence(fence);
    s.op_count = ops;
    s.init_count = init;
    s.seed = seed;
    s.load_factor = load_factor;
    s.bucket_size = bucket_size;
    return s;
  }
};

// Writes to --csv PATH when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw Error(Errc::kInvalidArgument, "cannot write " + path);
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"persistkit: partly persistent data structures"};
  app.require_subcommand(1);

  std::string csv;
  std::string backend = "sim";
  std::uint32_t repeats = 1;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--csv", csv, "CSV output path (default stdout)");
    cmd->add_option("--backend", backend, "file | sim")->check(CLI::IsMember({"file", "sim"}));
    cmd->add_option("--repeats", repeats, "timed repetitions")->check(CLI::PositiveNumber);
  };

  auto* bench = app.add_subcommand("bench", "timing and flush-count benchmarks");
  bench->require_subcommand(1);

  WorkloadFlags wl;
  auto* workload = bench->add_subcommand("workload", "insert/delete workload on one structure");
  wl.attach(workload);
  add_common(workload);

  std::uint64_t scaling_ops = 1000000;
  std::vector<double> fractions{0.125, 0.25, 0.5, 1.0};
  auto* scaling = bench->add_subcommand("flush-scaling", "time vs number of flushed nodes");
  scaling->add_option("--ops", scaling_ops, "appended nodes per run");
  scaling->add_option("--fractions", fractions, "flushed fractions in (0,1]")->delimiter(',');
  add_common(scaling);

  std::uint64_t gran_ops = 1000000;
  std::vector<std::uint32_t> sizes{8, 16, 32, 64};
  auto* gran = bench->add_subcommand("granularity", "sub-line flush penalty");
  gran->add_option("--ops", gran_ops, "payloads per run");
  gran->add_option("--sizes", sizes, "flush chunk sizes")->delimiter(',');
  add_common(gran);

  WorkloadFlags rc;
  std::uint64_t size_mib = 64;
  auto* recon = bench->add_subcommand("reconstruct", "time reconstruction of a populated structure");
  recon->add_option("--structure", rc.structure, "list | tree | map")
      ->check(CLI::IsMember({"list", "tree", "map"}));
  recon->add_option("--size-mib", size_mib, "persistent footprint in MiB");
  recon->add_option("--seed", rc.seed, "key seed");
  recon->add_option("--load-factor", rc.load_factor, "hashmap load factor");
  recon->add_option("--bucket-size", rc.bucket_size, "tree reconstruction fanout (10..19)");
  add_common(recon);

  auto* crash = app.add_subcommand("crashtest", "crash injection");
  crash->require_subcommand(1);
  WorkloadFlags sw;
  sw.ops = 1000;
  sw.init = 0;
  std::string policy = "drop-all";
  std::uint64_t policy_seed = 0;
  std::string report_path;
  auto* sweep = crash->add_subcommand("sweep", "crash after every fence and verify recovery");
  sw.attach(sweep);
  sweep->add_option("--csv", csv, "CSV output path (default stdout)");
  sweep->add_option("--policy", policy, "pending flushes at crash: drop-all | keep-all | random")
      ->check(CLI::IsMember({"drop-all", "keep-all", "random"}));
  sweep->add_option("--policy-seed", policy_seed, "seed for the random policy");
  sweep->add_option("--report", report_path, "line-oriented text report path");

  std::string bug_structure = "list";
  std::uint64_t trials = 100;
  std::uint64_t bug_seed = 1;
  auto* bugs = crash->add_subcommand("bugs", "volatile bug injection in checkpoint mode");
  bugs->add_option("--structure", bug_structure, "list | tree | map")
      ->check(CLI::IsMember({"list", "tree", "map"}));
  bugs->add_option("--trials", trials, "randomized injections");
  bugs->add_option("--seed", bug_seed, "trial seed");

  CLI11_PARSE(app, argc, argv);

  try {
    const Backend be = parse_backend(backend);
    if (workload->parsed()) {
      BenchConfig config{wl.spec(), be, repeats};
      const auto rows = run_workload(config);
      Output out(csv);
      write_csv(out.stream(), rows);
    } else if (scaling->parsed()) {
      const auto rows = run_flush_scaling(scaling_ops, fractions, be, repeats);
      Output out(csv);
      write_csv(out.stream(), rows);
    } else if (gran->parsed()) {
      const auto rows = run_granularity_bench(sizes, gran_ops, be, repeats);
      Output out(csv);
      write_csv(out.stream(), rows);
    } else if (recon->parsed()) {
      const auto result = run_reconstruction_bench(parse_structure(rc.structure), size_mib << 20, be,
                                                   rc.seed, rc.load_factor, rc.bucket_size);
      Output out(csv);
      write_csv(out.stream(), {result.row});
      std::cerr << rc.structure << ": " << result.entries << " entries reconstructed in "
                << result.seconds << " s, verified\n";
    } else if (sweep->parsed()) {
      PendingPolicy pp = PendingPolicy::drop_all();
      if (policy == "keep-all") pp = PendingPolicy::keep_all();
      if (policy == "random") pp = PendingPolicy::random_subset(policy_seed);
      const auto report = sweep_crash_points(sw.spec(), pp);
      Output out(csv);
      report.write_csv(out.stream());
      if (!report_path.empty()) {
        std::ofstream text(report_path);
        report.write_text(text);
      }
      std::cerr << report.passed() << '/' << report.verdicts.size() << " crash points passed, "
                << report.silent_divergences() << " silent divergences\n";
      return report.failed() == 0 ? 0 : 1;
    } else if (bugs->parsed()) {
      const auto report = check_isolation(parse_structure(bug_structure), trials, bug_seed);
      for (const auto& f : report.failures) std::cout << f << '\n';
      std::cout << bug_structure << ": " << report.recovered << '/' << report.trials
                << " recovered to the pre-bug state\n";
      return report.recovered == report.trials ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "persistkit: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
