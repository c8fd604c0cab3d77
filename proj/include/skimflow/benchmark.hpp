/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SKIMFLOW_BENCHMARK_HPP_
#define SKIMFLOW_BENCHMARK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "skimflow/analysis_config.hpp"
#include "skimflow/phase.hpp"

namespace skimflow {

struct BenchCell {
  bool cached = false;
  bool compressed = false;
  std::size_t workers = 1;
};

struct BenchConfig {
  std::vector<bool> cached = {false, true};
  std::vector<bool> compressed = {false, true};
  std::vector<std::size_t> workers = {1};
  std::size_t repetitions = 3;
  /// Scratch space for the re-encoded inputs and skim outputs.
  std::string work_dir;
  /// Dataset to measure; empty picks the first mc dataset, else the first.
  std::string dataset_label;
};

/**
 * Timings for one matrix cell. Per-phase figures are medians over the
 * measured repetitions of the skim pass; the first (cache-warming) pass is
 * kept separately as `warm`.
 */
struct CellReport {
  BenchCell cell;
  std::string dataset_label;
  std::string selection;
  std::uint64_t input_events = 0;
  std::uint64_t output_rows = 0;
  std::uint64_t input_file_bytes = 0;

  std::vector<PhaseTimes> reps;
  std::vector<double> rep_wall;
  PhaseTimes median;
  double median_wall = 0.0;
  double read_compute = 0.0;  // median of read + decode + compute
  double read_decode = 0.0;   // median of read + decode

  std::vector<PhaseTimes> warm_reps;
  PhaseTimes warm_median;
  double warm_wall = 0.0;

  std::uint64_t storage_bytes = 0;  // largest over measured reps
  std::uint64_t cache_hits = 0;     // smallest over measured reps
  std::string output_digest;        // crc32 of the output ntuple
};

struct TimingReport {
  std::vector<CellReport> cells;

  /// Errors: ConfigError when the cell was not measured.
  const CellReport &find(bool cached, bool compressed, std::size_t workers) const;

  std::string to_json() const;
  /// One row per cell per phase.
  std::string to_csv() const;
};

/// Errors: ConfigError for fewer than 3 repetitions or an empty matrix,
/// plus anything the workflow raises.
TimingReport run_benchmark(const AnalysisPlan &plan, const BenchConfig &config);

/// Ratios a / b per phase; 0 / 0 counts as 1.
struct Speedup {
  PhaseTimes phases;
  double read_compute = 1.0;
  double read_decode = 1.0;
  double wall = 1.0;
};

/// Errors: IncomparableConfigs unless both cells ran the same selection on
/// the same dataset.
Speedup compare_reports(const CellReport &a, const CellReport &b);

std::string speedup_to_json(const Speedup &s);

}  // namespace skimflow

#endif  // SKIMFLOW_BENCHMARK_HPP_
