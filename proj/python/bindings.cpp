// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "persistkit/bench.hpp"
#include "persistkit/bptree.hpp"
#include "persistkit/crash_harness.hpp"
#include "persistkit/hashmap.hpp"
#include "persistkit/list.hpp"

namespace py = pybind11;
using namespace persistkit;

namespace {

template <class P>
P to_payload(const std::vector<std::int64_t>& words) {
  P p;
  if (words.size() != p.words.size()) {
    throw Error(Errc::kInvalidArgument, "payload needs " + std::to_string(p.words.size()) + " words");
  }
  std::copy(words.begin(), words.end(), p.words.begin());
  return p;
}

template <class P>
std::vector<std::int64_t> from_payload(const P& p) {
  return {p.words.begin(), p.words.end()};
}

template <class P>
std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>> convert_items(
    const std::vector<std::pair<std::int64_t, P>>& items) {
  std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>> out;
  out.reserve(items.size());
  for (const auto& [k, v] : items) out.emplace_back(k, from_payload(v));
  return out;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  write_csv(out, rows);
  return out.str();
}

WorkloadSpec make_spec(const std::string& structure, const std::string& mode, const std::string& mix,
                       std::uint64_t ops, std::uint64_t init, std::uint64_t seed, const std::string& fence,
                       double load_factor, std::uint32_t bucket_size) {
  WorkloadSpec spec;
  spec.structure = parse_structure(structure);
  spec.mode = parse_mode(mode);
  spec.mix = OpMix::parse(mix);
  spec.op_count = ops;
  spec.init_count = init;
  spec.seed = seed;
  spec.fence = parse_fence(fence);
  spec.load_factor = load_factor;
  spec.bucket_size = bucket_size;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Recoverable persistent-memory data structures";

  static py::exception<Error> error(m, "PersistkitError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::enum_<Mode>(m, "Mode")
      .value("FULLY_PERSISTENT", Mode::kFullyPersistent)
      .value("PARTLY_DIRECT", Mode::kPartlyDirect)
      .value("PARTLY_CHECKPOINT", Mode::kPartlyCheckpoint);
  py::enum_<Structure>(m, "Structure")
      .value("LIST", Structure::kList)
      .value("TREE", Structure::kTree)
      .value("MAP", Structure::kMap);
  py::enum_<Backend>(m, "Backend")
      .value("FILE_BACKED", Backend::kFileBacked)
      .value("SIMULATED_CRASH", Backend::kSimulatedCrash);
  py::enum_<VolatileBug>(m, "VolatileBug")
      .value("SELF_LOOP_NEXT", VolatileBug::kSelfLoopNext)
      .value("SCRAMBLED_PREV", VolatileBug::kScrambledPrev)
      .value("WRONG_HASH_CACHE", VolatileBug::kWrongHashCache)
      .value("DANGLING_TAIL", VolatileBug::kDanglingTail);

  py::class_<PendingPolicy>(m, "PendingPolicy")
      .def_static("keep_all", &PendingPolicy::keep_all)
      .def_static("drop_all", &PendingPolicy::drop_all)
      .def_static("random_subset", &PendingPolicy::random_subset, py::arg("seed"));

  py::class_<FencePolicy>(m, "FencePolicy")
      .def_static("per_op", &FencePolicy::per_op)
      .def_static("batched", &FencePolicy::batched, py::arg("k"))
      .def_readonly("ops_per_fence", &FencePolicy::ops_per_fence);

  py::class_<RunStats>(m, "RunStats")
      .def_readonly("line_flushes", &RunStats::line_flushes)
      .def_readonly("distinct_lines_flushed", &RunStats::distinct_lines_flushed)
      .def_readonly("fences", &RunStats::fences)
      .def_readonly("flush_time", &RunStats::flush_time);

  py::class_<RegionLayout>(m, "RegionLayout")
      .def_static("for_capacity", &RegionLayout::for_capacity, py::arg("capacity"))
      .def_static("for_slots", &RegionLayout::for_slots, py::arg("list_nodes"), py::arg("tree_keys"),
                  py::arg("map_entries"))
      .def_property_readonly("required_capacity", &RegionLayout::required_capacity);

  py::class_<Region>(m, "Region")
      .def_static("create_simulated",
                  [](std::uint64_t capacity, const std::optional<RegionLayout>& layout) {
                    return Region::create_simulated(capacity, layout.value_or(RegionLayout{}));
                  },
                  py::arg("capacity"), py::arg("layout") = std::nullopt)
      .def_static("create",
                  [](const std::string& path, std::uint64_t capacity, Backend backend,
                     const std::optional<RegionLayout>& layout) {
                    return Region::create(path, capacity, backend, layout.value_or(RegionLayout{}));
                  },
                  py::arg("path"), py::arg("capacity"), py::arg("backend") = Backend::kFileBacked,
                  py::arg("layout") = std::nullopt)
      .def_static("open", [](const std::string& path) { return Region::open(path); }, py::arg("path"))
      .def_property_readonly("capacity", &Region::capacity)
      .def_property_readonly("backend", &Region::backend)
      .def_property_readonly("stats", &Region::stats)
      .def("reset_stats", &Region::reset_stats)
      .def("simulate_crash", &Region::simulate_crash, py::arg("policy") = PendingPolicy::drop_all());

  py::class_<NodeRef>(m, "NodeRef")
      .def_readonly("offset", &NodeRef::offset)
      .def("__bool__", [](NodeRef r) { return static_cast<bool>(r); });

  py::class_<RecoverableList>(m, "RecoverableList")
      .def_static("init", &RecoverableList::init, py::arg("region"), py::arg("mode"),
                  py::arg("fence") = FencePolicy{}, py::keep_alive<0, 1>())
      .def_static("reconstruct", &RecoverableList::reconstruct, py::arg("region"),
                  py::arg("fence") = FencePolicy{}, py::keep_alive<0, 1>())
      .def("append",
           [](RecoverableList& l, const std::vector<std::int64_t>& v) {
             return l.append(to_payload<Payload56>(v));
           })
      .def("remove", &RecoverableList::remove)
      .def("values_backward", [](const RecoverableList& l) {
        std::vector<std::vector<std::int64_t>> out;
        for (const auto& p : l.values_backward()) out.push_back(from_payload(p));
        return out;
      })
      .def("values", [](const RecoverableList& l) {
        std::vector<std::vector<std::int64_t>> out;
        for (const auto& p : l.values_forward()) out.push_back(from_payload(p));
        return out;
      })
      .def("__len__", &RecoverableList::length)
      .def_property_readonly("mode", &RecoverableList::mode)
      .def("inject_volatile_bug", &RecoverableList::inject_volatile_bug, py::arg("bug"), py::arg("seed") = 1)
      .def("finish", &RecoverableList::finish);

  py::class_<TreeStats>(m, "TreeStats")
      .def_readonly("leaves", &TreeStats::leaves)
      .def_readonly("internal_nodes", &TreeStats::internal_nodes)
      .def_readonly("height", &TreeStats::height)
      .def_readonly("avg_internal_fanout", &TreeStats::avg_internal_fanout)
      .def_readonly("keys", &TreeStats::keys)
      .def("measured_reduction", &TreeStats::measured_reduction)
      .def("formula_reduction", &TreeStats::formula_reduction);

  py::class_<RecoverableTree>(m, "RecoverableTree")
      .def_static("init", &RecoverableTree::init, py::arg("region"), py::arg("mode"),
                  py::arg("fence") = FencePolicy{}, py::keep_alive<0, 1>())
      .def_static("reconstruct", &RecoverableTree::reconstruct, py::arg("region"),
                  py::arg("bucket_size") = kTreeOrder, py::arg("fence") = FencePolicy{}, py::keep_alive<0, 1>())
      .def("insert",
           [](RecoverableTree& t, std::int64_t key, const std::vector<std::int64_t>& v) {
             t.insert(key, to_payload<Payload64>(v));
           })
      .def("erase", &RecoverableTree::erase)
      .def("find",
           [](const RecoverableTree& t, std::int64_t key) -> std::optional<std::vector<std::int64_t>> {
             if (auto p = t.find(key)) return from_payload(*p);
             return std::nullopt;
           })
      .def("items", [](const RecoverableTree& t) { return convert_items(t.items()); })
      .def("stats", &RecoverableTree::stats)
      .def_property_readonly("mode", &RecoverableTree::mode)
      .def("check_invariants", &RecoverableTree::check_invariants)
      .def("inject_volatile_bug", &RecoverableTree::inject_volatile_bug, py::arg("bug"), py::arg("seed") = 1)
      .def("finish", &RecoverableTree::finish);

  py::class_<RecoverableMap>(m, "RecoverableMap")
      .def_static("init", &RecoverableMap::init, py::arg("region"), py::arg("initial_capacity"),
                  py::arg("mode"), py::arg("load_factor") = kDefaultLoadFactor,
                  py::arg("fence") = FencePolicy{}, py::keep_alive<0, 1>())
      .def_static("reconstruct", &RecoverableMap::reconstruct, py::arg("region"),
                  py::arg("load_factor") = kDefaultLoadFactor, py::arg("fence") = FencePolicy{},
                  py::keep_alive<0, 1>())
      .def("put",
           [](RecoverableMap& mp, std::int64_t key, const std::vector<std::int64_t>& v) {
             mp.put(key, to_payload<Payload56>(v));
           })
      .def("remove", &RecoverableMap::remove)
      .def("get",
           [](const RecoverableMap& mp, std::int64_t key) -> std::optional<std::vector<std::int64_t>> {
             if (auto p = mp.get(key)) return from_payload(*p);
             return std::nullopt;
           })
      .def("items", [](const RecoverableMap& mp) { return convert_items(mp.items()); })
      .def("__len__", &RecoverableMap::size)
      .def_property_readonly("bucket_count", &RecoverableMap::bucket_count)
      .def_property_readonly("mode", &RecoverableMap::mode)
      .def("check_invariants", &RecoverableMap::check_invariants)
      .def("inject_volatile_bug", &RecoverableMap::inject_volatile_bug, py::arg("bug"), py::arg("seed") = 1)
      .def("finish", &RecoverableMap::finish);

  m.def("payload56", [](std::int64_t seed) { return from_payload(make_payload56(seed)); }, py::arg("seed"));
  m.def("payload64", [](std::int64_t seed) { return from_payload(make_payload64(seed)); }, py::arg("seed"));

  py::class_<WorkloadSpec>(m, "WorkloadSpec")
      .def(py::init(&make_spec), py::arg("structure") = "list", py::arg("mode") = "partly",
           py::arg("mix") = "1:0", py::arg("ops") = 1000, py::arg("init") = 0, py::arg("seed") = 1,
           py::arg("fence") = "per-op", py::arg("load_factor") = kDefaultLoadFactor,
           py::arg("bucket_size") = kTreeOrder)
      .def_readwrite("op_count", &WorkloadSpec::op_count)
      .def_readwrite("init_count", &WorkloadSpec::init_count)
      .def_readwrite("seed", &WorkloadSpec::seed)
      .def_readonly("structure", &WorkloadSpec::structure)
      .def_readonly("mode", &WorkloadSpec::mode);

  py::class_<BenchRow>(m, "BenchRow")
      .def_readonly("structure", &BenchRow::structure)
      .def_readonly("mode", &BenchRow::mode)
      .def_readonly("workload", &BenchRow::workload)
      .def_readonly("ops", &BenchRow::ops)
      .def_readonly("line_flushes", &BenchRow::line_flushes)
      .def_readonly("fences", &BenchRow::fences)
      .def_readonly("wall_s", &BenchRow::wall_s)
      .def_readonly("flush_s", &BenchRow::flush_s)
      .def_readonly("flush_fraction", &BenchRow::flush_fraction)
      .def_readonly("repeat", &BenchRow::repeat);

  m.def("run_workload",
        [](const WorkloadSpec& spec, Backend backend, std::uint32_t repeats) {
          return run_workload(BenchConfig{spec, backend, repeats});
        },
        py::arg("spec"), py::arg("backend") = Backend::kSimulatedCrash, py::arg("repeats") = 1);
  m.def("run_flush_scaling", &run_flush_scaling, py::arg("base_ops"), py::arg("fractions"),
        py::arg("backend") = Backend::kSimulatedCrash, py::arg("repeats") = 1);
  m.def("run_granularity_bench", &run_granularity_bench, py::arg("sizes"), py::arg("op_count"),
        py::arg("backend") = Backend::kSimulatedCrash, py::arg("repeats") = 1);
  m.def(
      "run_reconstruction_bench",
      [](Structure s, std::uint64_t size_bytes, Backend backend, std::uint64_t seed) {
        const auto r = run_reconstruction_bench(s, size_bytes, backend, seed);
        return py::dict(py::arg("row") = r.row, py::arg("entries") = r.entries,
                        py::arg("seconds") = r.seconds, py::arg("verified") = r.verified);
      },
      py::arg("structure"), py::arg("size_bytes"), py::arg("backend") = Backend::kSimulatedCrash,
      py::arg("seed") = 1);
  m.def("bench_csv", &bench_csv, py::arg("rows"));

  py::class_<Verdict>(m, "Verdict")
      .def_readonly("crash_index", &Verdict::crash_index)
      .def_readonly("passed", &Verdict::passed)
      .def_readonly("op_boundary", &Verdict::op_boundary)
      .def_readonly("completed_ops", &Verdict::completed_ops)
      .def_readonly("divergence_key", &Verdict::divergence_key)
      .def_readonly("detail", &Verdict::detail)
      .def_property_readonly("kind", [](const Verdict& v) { return std::string(verdict_name(v.kind)); });

  py::class_<SweepReport>(m, "SweepReport")
      .def_readonly("verdicts", &SweepReport::verdicts)
      .def_readonly("fences", &SweepReport::fences)
      .def_property_readonly("passed", &SweepReport::passed)
      .def_property_readonly("failed", &SweepReport::failed)
      .def_property_readonly("silent_divergences", &SweepReport::silent_divergences)
      .def_property_readonly("detected_corruptions", &SweepReport::detected_corruptions)
      .def_property_readonly("pass_rate", &SweepReport::pass_rate)
      .def("csv", [](const SweepReport& r) {
        std::ostringstream out;
        r.write_csv(out);
        return out.str();
      })
      .def("text", [](const SweepReport& r) {
        std::ostringstream out;
        r.write_text(out);
        return out.str();
      });

  m.def("sweep_crash_points", &sweep_crash_points, py::arg("spec"),
        py::arg("policy") = PendingPolicy::drop_all());

  py::class_<IsolationReport>(m, "IsolationReport")
      .def_readonly("trials", &IsolationReport::trials)
      .def_readonly("recovered", &IsolationReport::recovered)
      .def_readonly("failures", &IsolationReport::failures);
  m.def("check_isolation", &check_isolation, py::arg("structure"), py::arg("trials"), py::arg("seed") = 1);
}
