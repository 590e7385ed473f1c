// Copyright 2026 The persistkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "persistkit/region.hpp"
#include "persistkit/workload.hpp"

namespace persistkit {

struct BenchConfig {
  WorkloadSpec workload;
  Backend backend = Backend::kSimulatedCrash;
  std::uint32_t repeats = 1;
  /// Region size in bytes; 0 sizes the region to fit the trace exactly.
  std::uint64_t capacity = 0;
};

/// One CSV row. Column order is fixed; `repeat` is an index or "median".
struct BenchRow {
  std::string structure;
  std::string mode;
  std::string workload;
  std::uint64_t ops = 0;
  std::uint64_t line_flushes = 0;
  std::uint64_t fences = 0;
  double wall_s = 0.0;
  double flush_s = 0.0;
  double flush_fraction = 0.0;
  std::string repeat;
};

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const BenchRow& row);
void write_csv(std::ostream& out, const std::vector<BenchRow>& rows, bool header = true);

/// Directory for FileBacked region files: $PERSISTKIT_REGION_DIR or the
/// system temporary directory.
std::filesystem::path region_dir();

/// Populates init_count keys untimed, then times op_count operations.
/// Returns one row per repeat followed by a median row.
std::vector<BenchRow> run_workload(const BenchConfig& config);

/// Append-only simple list of 64B nodes where node i is flushed (and
/// fenced) iff floor((i+1)f) > floor(i f). One row per fraction, each the
/// median of `repeats` runs.
std::vector<BenchRow> run_flush_scaling(std::uint64_t base_ops, const std::vector<double>& fractions,
                                        Backend backend, std::uint32_t repeats = 1);

/// 64B payload inserts flushed in chunks of each size (8, 16, 32 or 64),
/// one fence per payload. One row per size, median of `repeats` runs.
std::vector<BenchRow> run_granularity_bench(const std::vector<std::uint32_t>& sizes,
                                            std::uint64_t op_count, Backend backend,
                                            std::uint32_t repeats = 1);

struct ReconstructionResult {
  BenchRow row;
  std::uint64_t entries = 0;
  double seconds = 0.0;
  bool verified = false;
};

/// Populates `size_bytes` of persistent entries, crashes (sim) or closes
/// and reopens (file), times reconstruct and verifies against a reference.
/// Throws Errc::kVerification on divergence.
ReconstructionResult run_reconstruction_bench(Structure structure, std::uint64_t size_bytes,
                                              Backend backend, std::uint64_t seed = 1,
                                              double load_factor = 0.75,
                                              std::uint32_t bucket_size = 19);

/// Entries of `structure` whose persistent footprint is about size_bytes.
std::uint64_t entries_for_bytes(Structure structure, std::uint64_t size_bytes);

}  // namespace persistkit
