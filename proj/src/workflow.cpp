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

#include "skimflow/workflow.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "skimflow/error.hpp"
#include "skimflow/ntu_file.hpp"

namespace skimflow {

double sum_of_weights(PartitionedDataset &dataset, const EngineConfig &engine, TraversalStats *stats) {
  if (dataset.descriptor().kind != DatasetKind::Mc) {
    throw Error(Errc::KindMismatch, "sum of weights needs an mc dataset, '" + dataset.descriptor().label +
                                        "' is data");
  }
  return map_reduce(
      dataset, engine, [](const Event &e) { return e.gen_weight; }, Reducer::sum(), stats);
}

double normalize_weight(double gen_weight, double cross_section_pb, double luminosity_invpb, double sum_of_weights) {
  if (sum_of_weights == 0.0) throw Error(Errc::ZeroSumOfWeights, "sum of generator weights is zero");
  return gen_weight * cross_section_pb * luminosity_invpb / sum_of_weights;
}

PartitionedDataset open_dataset(const AnalysisPlan &plan, const DatasetDescriptor &descriptor) {
  const AnalysisConfig &cfg = plan.config();
  return PartitionedDataset::open(descriptor, cfg.partition_for(descriptor.label), cfg.cache_budget_bytes);
}

EngineConfig engine_config(const AnalysisPlan &plan, std::optional<std::size_t> workers) {
  EngineConfig cfg;
  if (workers) {
    cfg.workers = *workers;
  } else if (plan.config().workers) {
    cfg.workers = *plan.config().workers;
  }
  if (cfg.workers == 0) throw Error(Errc::ConfigError, "workers must be at least 1");
  return cfg;
}

double SkimResult::reduction() const {
  return input_events == 0 ? 0.0 : static_cast<double>(output_rows) / static_cast<double>(input_events);
}

SkimResult run_skim(const AnalysisPlan &plan, PartitionedDataset &dataset, const EngineConfig &engine,
                    std::optional<double> sumw, const std::string &out_path) {
  const auto &desc = dataset.descriptor();
  RowFinalizer finalize;
  if (desc.kind == DatasetKind::Mc) {
    if (!sumw) throw Error(Errc::ConfigError, "skim of mc dataset '" + desc.label + "' needs its sum of weights");
    if (*sumw == 0.0) throw Error(Errc::ZeroSumOfWeights, "sum of generator weights is zero for '" + desc.label + "'");
    const double xsec = desc.cross_section_pb.value();
    const double lumi = plan.config().luminosity_invpb;
    const double denom = *sumw;
    finalize = [xsec, lumi, denom](NtupleRow &row) {
      row.back() = Scalar::f64(normalize_weight(row.back().as_double(), xsec, lumi, denom));
    };
  } else {
    finalize = [](NtupleRow &row) { row.back() = Scalar::f64(1.0); };
  }

  SkimResult result;
  result.output_path = out_path;
  result.sum_of_weights = desc.kind == DatasetKind::Mc ? sumw : std::nullopt;
  NtuWriter sink(out_path, plan.output_columns(), plan.config().group_rows);
  result.output_rows =
      filter_map_write(dataset, engine, plan.selection(), plan.projection(), finalize, sink, &result.pass2);
  result.input_events = result.pass2.events;
  result.warnings = dataset.warnings();
  return result;
}

SkimResult run_two_pass(const AnalysisPlan &plan, PartitionedDataset &dataset, const EngineConfig &engine,
                        const std::string &out_path) {
  if (plan.config().persist) dataset.persist();
  TraversalStats pass1;
  std::optional<double> sumw;
  if (dataset.descriptor().kind == DatasetKind::Mc) {
    sumw = sum_of_weights(dataset, engine, &pass1);
  } else {
    map_reduce(
        dataset, engine, [](const Event &) { return 1.0; }, Reducer::sum(), &pass1);
  }
  SkimResult result = run_skim(plan, dataset, engine, sumw, out_path);
  result.pass1 = pass1;
  return result;
}

std::string ntuple_path(const std::string &dir, const std::string &label) {
  return (std::filesystem::path(dir) / (label + ".ntu")).string();
}

std::vector<Histogram> histograms_from_ntuple(const std::string &path, const std::vector<HistogramSpec> &specs,
                                              const std::string &weight_column) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (const auto &s : specs) {
    if (seen.insert(s.variable).second) names.push_back(s.variable);
  }
  if (seen.insert(weight_column).second) names.push_back(weight_column);
  const ColumnBatch batch = read_ntu(path, names);
  std::vector<Histogram> out;
  out.reserve(specs.size());
  for (const auto &s : specs) out.push_back(fill_histogram(batch, s, weight_column));
  return out;
}

std::string histograms_to_json(const std::string &label, const std::vector<Histogram> &histograms) {
  using json = nlohmann::ordered_json;
  json root;
  root["label"] = label;
  auto list = json::array();
  for (const auto &h : histograms) {
    json j;
    j["variable"] = h.spec().variable;
    j["nbins"] = h.spec().nbins;
    j["lo"] = h.spec().lo;
    j["hi"] = h.spec().hi;
    j["contents"] = h.contents();
    j["sumw2"] = h.sumw2();
    j["underflow"] = h.underflow();
    j["overflow"] = h.overflow();
    j["underflow_sumw2"] = h.underflow_sumw2();
    j["overflow_sumw2"] = h.overflow_sumw2();
    j["entries"] = h.entries();
    list.push_back(std::move(j));
  }
  root["histograms"] = std::move(list);
  return root.dump(2) + "\n";
}

}  // namespace skimflow
