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

#ifndef SKIMFLOW_ANALYSIS_CONFIG_HPP_
#define SKIMFLOW_ANALYSIS_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skimflow/dataset.hpp"
#include "skimflow/evt_file.hpp"
#include "skimflow/expr.hpp"
#include "skimflow/histogram.hpp"
#include "skimflow/ntu_file.hpp"
#include "skimflow/partition.hpp"

namespace skimflow {

struct ProjectionSpec {
  std::string name;
  std::string expr;
};

/**
 * Everything one analysis run needs. Loaded from a JSON document:
 *
 *   datasets[] {glob, kind: "data"|"mc", xsec_pb (mc only), label, partition}
 *   luminosity_invpb, selection, projection[] {name, expr},
 *   histograms[] {variable, nbins, lo, hi}
 *
 * plus optional engine keys: workers, cache_budget_bytes, persist,
 * partition {mode: "auto"|"custom", target_bytes, custom}, block_events,
 * group_rows. A dataset's own partition entry overrides the top-level one.
 */
struct AnalysisConfig {
  std::vector<DatasetDescriptor> datasets;
  double luminosity_invpb = 1.0;
  std::string selection;
  std::vector<ProjectionSpec> projection;
  std::vector<HistogramSpec> histograms;

  std::optional<std::size_t> workers;
  std::uint64_t cache_budget_bytes = PartitionedDataset::kUnlimitedCache;
  bool persist = true;
  PartitionConfig partition;
  std::map<std::string, PartitionConfig> dataset_partitions;  // by label
  std::size_t block_events = kDefaultBlockEvents;
  std::size_t group_rows = kDefaultGroupRows;

  /// Errors: ConfigError with a field path or line/column diagnostic.
  static AnalysisConfig from_json(std::string_view text);
  static AnalysisConfig load(const std::string &path);
  std::string to_json() const;

  const DatasetDescriptor &dataset(const std::string &label) const;
  const PartitionConfig &partition_for(const std::string &label) const;
};

/// Large missing energy, a lepton veto and at least two jets.
std::string default_selection();
std::vector<ProjectionSpec> default_projection();
std::vector<HistogramSpec> default_histograms();

inline constexpr const char *kWeightColumn = "weight";

/**
 * A config whose expressions are type-checked against the event schema.
 * The projection carries a trailing hidden column holding genInfo.weight,
 * which the skim replaces with the normalized weight and exposes as
 * `weight`.
 */
class AnalysisPlan {
 public:
  /// Validates everything that can be checked without touching data.
  explicit AnalysisPlan(AnalysisConfig config);

  const AnalysisConfig &config() const { return config_; }
  const TypedExpr &selection() const { return selection_; }
  const TypedProjection &projection() const { return projection_; }
  /// Output ntuple columns: projection columns then `weight`.
  const FlatSchema &output_columns() const { return output_columns_; }

 private:
  AnalysisConfig config_;
  TypedExpr selection_;
  TypedProjection projection_;
  FlatSchema output_columns_;
};

}  // namespace skimflow

#endif  // SKIMFLOW_ANALYSIS_CONFIG_HPP_
