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

#include "skimflow/plot_bundle.hpp"

#include <charconv>
#include <cmath>

#include <json.hpp>

#include "skimflow/error.hpp"

namespace skimflow {

namespace {

PlotComponent component_of(const std::string &label, const Histogram &h) {
  PlotComponent c;
  c.label = label;
  c.contents = h.contents();
  c.uncertainty.reserve(h.sumw2().size());
  for (double s : h.sumw2()) c.uncertainty.push_back(std::sqrt(s));
  c.underflow = h.underflow();
  c.overflow = h.overflow();
  return c;
}

const DatasetHistograms &find_input(const std::vector<DatasetHistograms> &inputs, const std::string &label) {
  for (const auto &in : inputs) {
    if (in.label == label) return in;
  }
  throw Error(Errc::ConfigError, "no histograms for dataset '" + label + "'");
}

nlohmann::ordered_json component_json(const PlotComponent &c) {
  nlohmann::ordered_json j;
  j["label"] = c.label;
  j["contents"] = c.contents;
  j["uncertainty"] = c.uncertainty;
  j["underflow"] = c.underflow;
  j["overflow"] = c.overflow;
  return j;
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

}  // namespace

PlotBundle build_plot_bundle(const AnalysisConfig &config, const std::vector<DatasetHistograms> &inputs) {
  PlotBundle bundle;
  bundle.luminosity_invpb = config.luminosity_invpb;
  for (std::size_t i = 0; i < config.histograms.size(); ++i) {
    const HistogramSpec &spec = config.histograms[i];
    PlotHistogram ph;
    ph.spec = spec;
    ph.stack.assign(spec.nbins, 0.0);
    std::vector<double> stack_sumw2(spec.nbins, 0.0);
    std::optional<Histogram> data;
    for (const auto &d : config.datasets) {
      const auto &in = find_input(inputs, d.label);
      if (i >= in.histograms.size() || !(in.histograms[i].spec() == spec)) {
        throw Error(Errc::SpecMismatch, "dataset '" + d.label + "' has no histogram matching '" + spec.variable +
                                            "' as configured");
      }
      const Histogram &h = in.histograms[i];
      if (d.kind == DatasetKind::Mc) {
        for (std::uint32_t b = 0; b < spec.nbins; ++b) {
          ph.stack[b] += h.contents()[b];
          stack_sumw2[b] += h.sumw2()[b];
        }
        ph.mc.push_back(component_of(d.label, h));
      } else if (data) {
        data->merge(h);
      } else {
        data = h;
      }
    }
    ph.stack_uncertainty.reserve(spec.nbins);
    for (double s : stack_sumw2) ph.stack_uncertainty.push_back(std::sqrt(s));
    if (data) ph.data = component_of("data", *data);
    bundle.histograms.push_back(std::move(ph));
  }
  return bundle;
}

std::string PlotBundle::to_json() const {
  nlohmann::ordered_json root;
  root["luminosity_invpb"] = luminosity_invpb;
  auto list = nlohmann::ordered_json::array();
  for (const auto &h : histograms) {
    nlohmann::ordered_json j;
    j["variable"] = h.spec.variable;
    j["nbins"] = h.spec.nbins;
    j["lo"] = h.spec.lo;
    j["hi"] = h.spec.hi;
    auto mc = nlohmann::ordered_json::array();
    for (const auto &c : h.mc) mc.push_back(component_json(c));
    j["mc"] = std::move(mc);
    j["stack"] = h.stack;
    j["stack_uncertainty"] = h.stack_uncertainty;
    j["data"] = h.data ? component_json(*h.data) : nlohmann::ordered_json(nullptr);
    list.push_back(std::move(j));
  }
  root["histograms"] = std::move(list);
  return root.dump(2) + "\n";
}

std::string PlotBundle::to_csv() const {
  std::string out = "variable,component,bin,lo,hi,content,uncertainty\n";
  auto rows = [&out](const PlotHistogram &h, const std::string &label, const std::vector<double> &contents,
                     const std::vector<double> &unc) {
    for (std::uint32_t b = 0; b < h.spec.nbins; ++b) {
      out += h.spec.variable + "," + label + "," + std::to_string(b) + "," + fmt(h.spec.edge(b)) + "," +
             fmt(h.spec.edge(b + 1)) + "," + fmt(contents[b]) + "," + fmt(unc[b]) + "\n";
    }
  };
  for (const auto &h : histograms) {
    for (const auto &c : h.mc) rows(h, c.label, c.contents, c.uncertainty);
    rows(h, "stack", h.stack, h.stack_uncertainty);
    if (h.data) rows(h, "data", h.data->contents, h.data->uncertainty);
  }
  return out;
}

}  // namespace skimflow
