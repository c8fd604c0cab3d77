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

#include "skimflow/analysis_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "skimflow/error.hpp"
#include "skimflow/schema.hpp"

namespace skimflow {

using json = nlohmann::ordered_json;

std::string default_selection() {
  return "met.pt > 200.0 and size(muons) == 0 and size(electrons) == 0 and count(jets, it.pt > 30.0) >= 2";
}

std::vector<ProjectionSpec> default_projection() {
  return {
      {"event", "event"},
      {"met_pt", "met.pt"},
      {"met_phi", "met.phi"},
      {"njets", "count(jets, it.pt > 30.0)"},
      {"ht", "sum(jets, it.pt)"},
      {"leading_jet_pt", "max(jets, it.pt)"},
      {"nphotons", "size(photons)"},
      {"ntaus", "size(taus)"},
  };
}

std::vector<HistogramSpec> default_histograms() {
  return {
      {"met_pt", 50, 0.0, 1000.0},
      {"njets", 10, 0.0, 10.0},
      {"ht", 60, 0.0, 1500.0},
      {"leading_jet_pt", 50, 0.0, 1000.0},
  };
}

namespace {

[[noreturn]] void config_error(const std::string &where, const std::string &what) {
  throw Error(Errc::ConfigError, where + ": " + what);
}

const json &require(const json &obj, const char *key, const std::string &where) {
  if (!obj.contains(key)) config_error(where, std::string("missing key '") + key + "'");
  return obj[key];
}

std::string get_string(const json &v, const std::string &where) {
  if (!v.is_string()) config_error(where, "expected a string");
  return v.get<std::string>();
}

double get_number(const json &v, const std::string &where) {
  if (!v.is_number()) config_error(where, "expected a number");
  return v.get<double>();
}

std::uint64_t get_count(const json &v, const std::string &where) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    config_error(where, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

void reject_unknown_keys(const json &obj, std::initializer_list<std::string_view> allowed, const std::string &where) {
  for (const auto &[key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) config_error(where.empty() ? key : where + "." + key, "unknown key");
  }
}

std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

PartitionConfig parse_partition(const json &j, const std::string &where) {
  if (!j.is_object()) config_error(where, "expected an object");
  reject_unknown_keys(j, {"mode", "target_bytes", "custom"}, where);
  PartitionConfig pc;
  const std::string mode = j.contains("mode") ? get_string(j["mode"], where + ".mode") : "auto";
  if (mode == "auto") {
    pc.mode = PartitionConfig::Mode::Auto;
    if (j.contains("target_bytes")) {
      pc.target_bytes = get_count(j["target_bytes"], where + ".target_bytes");
      if (pc.target_bytes == 0) config_error(where + ".target_bytes", "must be positive");
    }
  } else if (mode == "custom") {
    pc.mode = PartitionConfig::Mode::Custom;
    const json &c = require(j, "custom", where);
    if (c.is_object()) {
      reject_unknown_keys(c, {"per_file"}, where + ".custom");
      pc.per_file = get_count(require(c, "per_file", where + ".custom"), where + ".custom.per_file");
      if (*pc.per_file == 0) config_error(where + ".custom.per_file", "must be at least 1");
    } else if (c.is_array()) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        const std::string at = where + ".custom[" + std::to_string(i) + "]";
        if (!c[i].is_object()) config_error(at, "expected an object");
        reject_unknown_keys(c[i], {"file", "begin", "end"}, at);
        pc.custom.push_back({get_string(require(c[i], "file", at), at + ".file"),
                             get_count(require(c[i], "begin", at), at + ".begin"),
                             get_count(require(c[i], "end", at), at + ".end")});
      }
    } else {
      config_error(where + ".custom", "expected a list of ranges or {\"per_file\": N}");
    }
  } else {
    config_error(where + ".mode", "must be \"auto\" or \"custom\"");
  }
  return pc;
}

json partition_to_json(const PartitionConfig &partition) {
  json part;
  if (partition.mode == PartitionConfig::Mode::Auto) {
    part["mode"] = "auto";
    part["target_bytes"] = partition.target_bytes;
  } else {
    part["mode"] = "custom";
    if (partition.per_file) {
      part["custom"] = json{{"per_file", *partition.per_file}};
    } else {
      auto ranges = json::array();
      for (const auto &r : partition.custom) {
        ranges.push_back(json{{"file", r.file}, {"begin", r.begin}, {"end", r.end}});
      }
      part["custom"] = std::move(ranges);
    }
  }
  return part;
}

}  // namespace

AnalysisConfig AnalysisConfig::from_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw Error(Errc::ConfigError, "config is not valid JSON at " + line_column(text, e.byte));
  }
  if (!root.is_object()) config_error("config", "top level must be an object");
  reject_unknown_keys(root,
                      {"datasets", "luminosity_invpb", "selection", "projection", "histograms", "workers",
                       "cache_budget_bytes", "persist", "partition", "block_events", "group_rows"},
                      "");
  AnalysisConfig cfg;

  const json &datasets = require(root, "datasets", "config");
  if (!datasets.is_array() || datasets.empty()) config_error("datasets", "expected a non-empty list");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const std::string at = "datasets[" + std::to_string(i) + "]";
    const json &d = datasets[i];
    if (!d.is_object()) config_error(at, "expected an object");
    reject_unknown_keys(d, {"glob", "kind", "xsec_pb", "label", "partition"}, at);
    DatasetDescriptor desc;
    desc.glob = get_string(require(d, "glob", at), at + ".glob");
    const std::string kind = get_string(require(d, "kind", at), at + ".kind");
    if (kind == "mc") {
      desc.kind = DatasetKind::Mc;
    } else if (kind == "data") {
      desc.kind = DatasetKind::Data;
    } else {
      config_error(at + ".kind", "must be \"data\" or \"mc\"");
    }
    if (d.contains("xsec_pb")) desc.cross_section_pb = get_number(d["xsec_pb"], at + ".xsec_pb");
    desc.label = get_string(require(d, "label", at), at + ".label");
    if (desc.label.empty()) config_error(at + ".label", "must not be empty");
    if (!labels.insert(desc.label).second) config_error(at + ".label", "duplicate label '" + desc.label + "'");
    if (d.contains("partition")) {
      cfg.dataset_partitions[desc.label] = parse_partition(d["partition"], at + ".partition");
    }
    try {
      desc.validate();
    } catch (const Error &e) {
      config_error(at, e.message());
    }
    cfg.datasets.push_back(std::move(desc));
  }

  cfg.luminosity_invpb = get_number(require(root, "luminosity_invpb", "config"), "luminosity_invpb");
  if (!(cfg.luminosity_invpb > 0.0) || !std::isfinite(cfg.luminosity_invpb)) {
    config_error("luminosity_invpb", "must be positive and finite");
  }

  cfg.selection = root.contains("selection") ? get_string(root["selection"], "selection") : default_selection();

  if (root.contains("projection")) {
    const json &p = root["projection"];
    if (!p.is_array() || p.empty()) config_error("projection", "expected a non-empty list");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string at = "projection[" + std::to_string(i) + "]";
      if (!p[i].is_object()) config_error(at, "expected an object");
      reject_unknown_keys(p[i], {"name", "expr"}, at);
      cfg.projection.push_back({get_string(require(p[i], "name", at), at + ".name"),
                                get_string(require(p[i], "expr", at), at + ".expr")});
    }
  } else {
    cfg.projection = default_projection();
  }

  if (root.contains("histograms")) {
    const json &h = root["histograms"];
    if (!h.is_array()) config_error("histograms", "expected a list");
    for (std::size_t i = 0; i < h.size(); ++i) {
      const std::string at = "histograms[" + std::to_string(i) + "]";
      if (!h[i].is_object()) config_error(at, "expected an object");
      reject_unknown_keys(h[i], {"variable", "nbins", "lo", "hi"}, at);
      HistogramSpec spec;
      spec.variable = get_string(require(h[i], "variable", at), at + ".variable");
      const auto nbins = get_count(require(h[i], "nbins", at), at + ".nbins");
      if (nbins < 1 || nbins > 100'000'000) config_error(at + ".nbins", "must be in [1, 1e8]");
      spec.nbins = static_cast<std::uint32_t>(nbins);
      spec.lo = get_number(require(h[i], "lo", at), at + ".lo");
      spec.hi = get_number(require(h[i], "hi", at), at + ".hi");
      try {
        spec.validate();
      } catch (const Error &e) {
        config_error(at, e.message());
      }
      cfg.histograms.push_back(std::move(spec));
    }
  } else {
    cfg.histograms = default_histograms();
  }

  if (root.contains("workers")) {
    const auto w = get_count(root["workers"], "workers");
    if (w == 0) config_error("workers", "must be at least 1");
    cfg.workers = static_cast<std::size_t>(w);
  }
  if (root.contains("cache_budget_bytes")) {
    cfg.cache_budget_bytes = get_count(root["cache_budget_bytes"], "cache_budget_bytes");
  }
  if (root.contains("persist")) {
    if (!root["persist"].is_boolean()) config_error("persist", "expected true or false");
    cfg.persist = root["persist"].get<bool>();
  }
  if (root.contains("partition")) cfg.partition = parse_partition(root["partition"], "partition");
  if (root.contains("block_events")) {
    cfg.block_events = get_count(root["block_events"], "block_events");
    if (cfg.block_events == 0) config_error("block_events", "must be at least 1");
  }
  if (root.contains("group_rows")) {
    cfg.group_rows = get_count(root["group_rows"], "group_rows");
    if (cfg.group_rows == 0) config_error("group_rows", "must be at least 1");
  }
  return cfg;
}

AnalysisConfig AnalysisConfig::load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string AnalysisConfig::to_json() const {
  json root;
  auto ds = json::array();
  for (const auto &d : datasets) {
    json j;
    j["glob"] = d.glob;
    j["kind"] = std::string(dataset_kind_name(d.kind));
    if (d.cross_section_pb) j["xsec_pb"] = *d.cross_section_pb;
    j["label"] = d.label;
    if (const auto it = dataset_partitions.find(d.label); it != dataset_partitions.end()) {
      j["partition"] = partition_to_json(it->second);
    }
    ds.push_back(std::move(j));
  }
  root["datasets"] = std::move(ds);
  root["luminosity_invpb"] = luminosity_invpb;
  root["selection"] = selection;
  auto proj = json::array();
  for (const auto &p : projection) proj.push_back(json{{"name", p.name}, {"expr", p.expr}});
  root["projection"] = std::move(proj);
  auto hists = json::array();
  for (const auto &h : histograms) {
    hists.push_back(json{{"variable", h.variable}, {"nbins", h.nbins}, {"lo", h.lo}, {"hi", h.hi}});
  }
  root["histograms"] = std::move(hists);
  if (workers) root["workers"] = *workers;
  if (cache_budget_bytes != PartitionedDataset::kUnlimitedCache) root["cache_budget_bytes"] = cache_budget_bytes;
  root["persist"] = persist;
  root["partition"] = partition_to_json(partition);
  root["block_events"] = block_events;
  root["group_rows"] = group_rows;
  return root.dump(2);
}

const PartitionConfig &AnalysisConfig::partition_for(const std::string &label) const {
  const auto it = dataset_partitions.find(label);
  return it == dataset_partitions.end() ? partition : it->second;
}

const DatasetDescriptor &AnalysisConfig::dataset(const std::string &label) const {
  for (const auto &d : datasets) {
    if (d.label == label) return d;
  }
  throw Error(Errc::ConfigError, "no dataset labelled '" + label + "'");
}

namespace {

template <typename F>
auto with_context(const std::string &where, F &&f) {
  try {
    return f();
  } catch (const Error &e) {
    throw Error(e.code(), where + ": " + e.message());
  }
}

}  // namespace

AnalysisPlan::AnalysisPlan(AnalysisConfig config)
    : config_(std::move(config)),
      selection_(with_context("selection", [&] {
        return typecheck_cut(Expr::parse(config_.selection), event_schema());
      })),
      projection_(with_context("projection", [&] {
        Projection proj;
        for (const auto &p : config_.projection) {
          if (p.name == kWeightColumn) {
            throw Error(Errc::NameCollision, "column name 'weight' is reserved for the event weight");
          }
          proj.push_back({p.name, with_context("'" + p.name + "'", [&] { return Expr::parse(p.expr); })});
        }
        proj.push_back({kWeightColumn, Expr::field("genInfo.weight")});
        return typecheck(proj, event_schema());
      })) {
  if (config_.datasets.empty()) throw Error(Errc::ConfigError, "datasets: expected a non-empty list");
  for (const auto &d : config_.datasets) d.validate();
  if (!(config_.luminosity_invpb > 0.0)) throw Error(Errc::ConfigError, "luminosity_invpb: must be positive");
  output_columns_ = projection_.columns();
  for (std::size_t i = 0; i < config_.histograms.size(); ++i) {
    const auto &h = config_.histograms[i];
    h.validate();
    bool known = false;
    for (const auto &c : output_columns_) known = known || c.name == h.variable;
    if (!known) {
      throw Error(Errc::ConfigError, "histograms[" + std::to_string(i) + "].variable: '" + h.variable +
                                         "' is not an output column");
    }
  }
}

}  // namespace skimflow
