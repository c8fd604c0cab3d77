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

#ifndef SKIMFLOW_WORKFLOW_HPP_
#define SKIMFLOW_WORKFLOW_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skimflow/analysis_config.hpp"
#include "skimflow/dataset.hpp"
#include "skimflow/engine.hpp"
#include "skimflow/histogram.hpp"

namespace skimflow {

/// Pass 1: Σ genInfo.weight over an mc dataset. Errors: KindMismatch.
double sum_of_weights(PartitionedDataset &dataset, const EngineConfig &engine, TraversalStats *stats = nullptr);

/// w × σ × L / Σw. Errors: ZeroSumOfWeights.
double normalize_weight(double gen_weight, double cross_section_pb, double luminosity_invpb, double sum_of_weights);

/// Opens a dataset with the plan's partitioning and cache budget.
PartitionedDataset open_dataset(const AnalysisPlan &plan, const DatasetDescriptor &descriptor);

/// Engine settings from the config, with an optional worker override.
EngineConfig engine_config(const AnalysisPlan &plan, std::optional<std::size_t> workers = std::nullopt);

struct SkimResult {
  std::string output_path;
  std::uint64_t input_events = 0;
  std::uint64_t output_rows = 0;
  std::optional<double> sum_of_weights;  // mc only
  TraversalStats pass1;
  TraversalStats pass2;
  std::vector<Warning> warnings;

  /// output_rows / input_events, 0 for an empty input.
  double reduction() const;
};

/**
 * Pass 2: selection and projection into an ntuple whose trailing `weight`
 * column holds the normalized weight (mc) or 1.0 (data). `sumw` is required
 * for mc and ignored for data.
 */
SkimResult run_skim(const AnalysisPlan &plan, PartitionedDataset &dataset, const EngineConfig &engine,
                    std::optional<double> sumw, const std::string &out_path);

/**
 * Both passes over one dataset. Persists between them when the config asks
 * for it; data datasets get a counting first pass so the cache is warm for
 * the skim either way.
 */
SkimResult run_two_pass(const AnalysisPlan &plan, PartitionedDataset &dataset, const EngineConfig &engine,
                        const std::string &out_path);

/// `<dir>/<label>.ntu`
std::string ntuple_path(const std::string &dir, const std::string &label);

/// Fills every spec from an ntuple's columns in row order.
std::vector<Histogram> histograms_from_ntuple(const std::string &path, const std::vector<HistogramSpec> &specs,
                                              const std::string &weight_column = kWeightColumn);

/// Canonical JSON for a list of histograms (the `hist` subcommand output).
std::string histograms_to_json(const std::string &label, const std::vector<Histogram> &histograms);

}  // namespace skimflow

#endif  // SKIMFLOW_WORKFLOW_HPP_
