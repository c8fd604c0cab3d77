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

#ifndef SKIMFLOW_PLOT_BUNDLE_HPP_
#define SKIMFLOW_PLOT_BUNDLE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "skimflow/analysis_config.hpp"
#include "skimflow/dataset.hpp"
#include "skimflow/histogram.hpp"

namespace skimflow {

struct PlotComponent {
  std::string label;
  std::vector<double> contents;
  std::vector<double> uncertainty;  // sqrt(sumw2) per bin
  double underflow = 0.0;
  double overflow = 0.0;
};

struct PlotHistogram {
  HistogramSpec spec;
  std::vector<PlotComponent> mc;  // config order
  std::vector<double> stack;
  std::vector<double> stack_uncertainty;
  std::optional<PlotComponent> data;  // all data datasets summed
};

/// Plot data for a stacked mc + data comparison. No rendering.
struct PlotBundle {
  double luminosity_invpb = 0.0;
  std::vector<PlotHistogram> histograms;

  std::string to_json() const;
  /// One row per bin per component, stack and data included.
  std::string to_csv() const;
};

struct DatasetHistograms {
  std::string label;
  std::vector<Histogram> histograms;  // same order as the config's specs
};

/// Errors: SpecMismatch when a dataset's binning differs from the config,
/// ConfigError when a configured dataset has no histograms.
PlotBundle build_plot_bundle(const AnalysisConfig &config, const std::vector<DatasetHistograms> &inputs);

}  // namespace skimflow

#endif  // SKIMFLOW_PLOT_BUNDLE_HPP_
