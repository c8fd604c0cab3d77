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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include <json.hpp>

#include "skimflow/analysis_config.hpp"
#include "skimflow/error.hpp"
#include "skimflow/generator.hpp"
#include "skimflow/ntu_file.hpp"
#include "skimflow/plot_bundle.hpp"
#include "skimflow/workflow.hpp"
#include "support.hpp"

using namespace skimflow;
using skimflow::testing::close_rel;
using skimflow::testing::TempDir;

namespace {

Errc code_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::ParseError;
}

AnalysisConfig base_config(const std::string &dir) {
  AnalysisConfig cfg;
  cfg.datasets = {{dir + "/sig_*.evt", DatasetKind::Mc, 2.5, "sig"},
                  {dir + "/bkg.evt", DatasetKind::Mc, 40.0, "bkg"},
                  {dir + "/obs.evt", DatasetKind::Data, std::nullopt, "obs"}};
  cfg.luminosity_invpb = 300.0;
  cfg.selection = default_selection();
  cfg.projection = default_projection();
  cfg.histograms = default_histograms();
  cfg.partition = PartitionConfig::automatic(200000);
  return cfg;
}

struct Sample {
  TempDir dir;
  Sample() {
    GeneratorSpec sig;
    sig.seed = 42;
    sig.events = 10000;
    sig.weight_mode = GeneratorSpec::WeightMode::Signed;
    sig.weight = 0.7;
    sig.met_scale_gev = 140.0;
    generate_corpus(sig, dir.file("sig"), 3, {false, 512});
    GeneratorSpec bkg;
    bkg.seed = 5;
    bkg.events = 6000;
    generate(bkg, dir.file("bkg.evt"), {true, 512});
    GeneratorSpec obs;
    obs.seed = 6;
    obs.events = 4000;
    obs.kind = DatasetKind::Data;
    generate(obs, dir.file("obs.evt"), {false, 512});
  }
  std::string path() const { return dir.path().string(); }
};

const Sample &sample() {
  static Sample s;
  return s;
}

std::vector<std::vector<double>> ntuple_rows(const std::string &path) {
  const auto batch = NtuReader(path).read_all();
  std::vector<std::vector<double>> rows(batch.rows());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto &col : batch.columns) rows[r].push_back(column_value(col, r));
  }
  return rows;
}

}  // namespace

TEST_CASE("normalize_weight") {
  CHECK(normalize_weight(1.0, 1.0, 1.0, 1.0) == 1.0);
  CHECK(normalize_weight(2.0, 50.0, 1000.0, 10000.0) == 10.0);
  CHECK(code_of([] { normalize_weight(1.0, 1.0, 1.0, 0.0); }) == Errc::ZeroSumOfWeights);
}

TEST_CASE("sum_of_weights examples") {
  TempDir dir;
  write_evt(dir.file("empty.evt"), {}, event_schema());
  auto empty = PartitionedDataset::open({dir.file("empty.evt"), DatasetKind::Mc, 1.0, "e"});
  CHECK(sum_of_weights(empty, {2}) == 0.0);

  std::vector<Event> three(3);
  three[0].gen_weight = 1.0;
  three[1].gen_weight = -1.0;
  three[2].gen_weight = 2.5;
  write_evt(dir.file("three.evt"), three, event_schema());
  auto ds = PartitionedDataset::open({dir.file("three.evt"), DatasetKind::Mc, 1.0, "t"});
  CHECK(sum_of_weights(ds, {1}) == 2.5);

  auto data = PartitionedDataset::open({dir.file("three.evt"), DatasetKind::Data, std::nullopt, "d"});
  CHECK(code_of([&] { sum_of_weights(data, {1}); }) == Errc::KindMismatch);

  const auto events = skimflow::testing::oracle_load(skimflow::expand_glob(sample().path() + "/sig_*.evt"));
  auto sig = PartitionedDataset::open({sample().path() + "/sig_*.evt", DatasetKind::Mc, 1.0, "sig"},
                                      PartitionConfig::automatic(50000));
  CHECK(close_rel(sum_of_weights(sig, {4}), skimflow::testing::oracle_sum_of_weights(events)));
}

TEST_CASE("run_skim: trivial cuts") {
  TempDir out;
  AnalysisConfig cfg = base_config(sample().path());
  cfg.selection = "true";
  const AnalysisPlan all(cfg);
  auto obs = open_dataset(all, cfg.dataset("obs"));
  const auto r = run_skim(all, obs, {3}, std::nullopt, out.file("all.ntu"));
  CHECK(r.output_rows == 4000);
  CHECK(r.input_events == 4000);
  const auto w = read_ntu(out.file("all.ntu"), {"weight"});
  bool ones = true;
  for (std::size_t i = 0; i < w.rows(); ++i) ones = ones && scalar_at(w.column("weight"), i) == Scalar::f64(1.0);
  CHECK(ones);

  cfg.selection = "false";
  const AnalysisPlan none(cfg);
  auto sig = open_dataset(none, cfg.dataset("sig"));
  const auto n = run_two_pass(none, sig, {2}, out.file("none.ntu"));
  CHECK(n.output_rows == 0);
  CHECK(n.input_events == 10000);
  CHECK(NtuReader(out.file("none.ntu")).rows() == 0);
  CHECK(code_of([&] { run_skim(none, sig, {2}, std::nullopt, out.file("x.ntu")); }) == Errc::ConfigError);
}

TEST_CASE("run_two_pass matches the serial two-pass oracle") {
  TempDir out;
  const AnalysisConfig cfg = base_config(sample().path());
  const AnalysisPlan plan(cfg);
  CHECK(plan.output_columns().back() == ColumnSpec{"weight", PrimitiveKind::F64});
  CHECK(plan.output_columns().size() == default_projection().size() + 1);
  for (const auto &d : cfg.datasets) {
    auto ds = open_dataset(plan, d);
    const auto r = run_two_pass(plan, ds, {3}, ntuple_path(out.path().string(), d.label));
    CHECK(r.pass2.cache_hits == ds.partitions().size());
    CHECK(r.pass2.io.storage_bytes == 0);
    const auto events = skimflow::testing::oracle_load(expand_glob(d.glob));
    const bool mc = d.kind == DatasetKind::Mc;
    const double sumw = mc ? skimflow::testing::oracle_sum_of_weights(events) : 0.0;
    if (mc) CHECK(close_rel(*r.sum_of_weights, sumw));
    const auto oracle = skimflow::testing::oracle_skim(events, mc, d.cross_section_pb.value_or(0), 300.0, sumw);
    const auto rows = ntuple_rows(r.output_path);
    REQUIRE(rows.size() == oracle.rows.size());
    CHECK(r.output_rows == rows.size());
    CHECK(rows.size() > 0);
    bool same = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      REQUIRE(rows[i].size() == oracle.rows[i].size());
      CHECK(rows[i][0] == oracle.rows[i][0]);
      for (std::size_t c = 1; c < rows[i].size(); ++c) same = same && close_rel(rows[i][c], oracle.rows[i][c]);
    }
    CHECK(same);
  }
}

TEST_CASE("normalization consistency: constant weights cancel") {
  TempDir dir;
  GeneratorSpec spec;
  spec.events = 3000;
  spec.weight = 0.37;
  generate(spec, dir.file("c.evt"), {false, 300});
  AnalysisConfig cfg = base_config(dir.path().string());
  cfg.datasets = {{dir.file("c.evt"), DatasetKind::Mc, 12.0, "c"}};
  cfg.selection = "true";
  const AnalysisPlan plan(cfg);
  auto ds = open_dataset(plan, cfg.datasets[0]);
  run_two_pass(plan, ds, {2}, dir.file("c.ntu"));
  const auto w = read_ntu(dir.file("c.ntu"), {"weight"});
  const double expected = 12.0 * 300.0 / 3000.0;
  bool ok = true;
  for (std::size_t i = 0; i < w.rows(); ++i) ok = ok && close_rel(column_value(w.column("weight"), i), expected);
  CHECK(ok);
}

TEST_CASE("histogram binning") {
  const HistogramSpec two{"x", 2, 0.0, 2.0};
  const std::vector<double> v{0.5, 1.5, 1.5};
  const std::vector<double> w{1, 1, 2};
  const auto h = fill_histogram(v, w, two);
  CHECK(h.contents() == std::vector<double>{1, 3});
  CHECK(h.sumw2() == std::vector<double>{1, 5});

  const auto empty = fill_histogram(std::span<const double>{}, std::span<const double>{}, two);
  CHECK(empty.contents() == std::vector<double>{0, 0});
  CHECK(empty.total() == 0.0);

  Histogram edges(two);
  edges.fill(0.0);
  edges.fill(1.0);
  edges.fill(2.0);
  edges.fill(-1e-300);
  edges.fill(std::nan(""));
  CHECK(edges.contents() == std::vector<double>{1, 1});
  CHECK(edges.underflow() == 1.0);
  CHECK(edges.overflow() == 2.0);
  CHECK(edges.entries() == 5);

  const HistogramSpec odd{"x", 10, 0.1, 0.7};
  for (std::uint32_t i = 0; i <= odd.nbins; ++i) CHECK(odd.locate(odd.edge(i)) == i);
  for (std::uint32_t i = 1; i <= odd.nbins; ++i) {
    CHECK(odd.locate(std::nextafter(odd.edge(i), -1.0)) == static_cast<std::int64_t>(i) - 1);
  }

  CHECK(code_of([] { HistogramSpec{"x", 0, 0, 1}.validate(); }) == Errc::ConfigError);
  CHECK(code_of([] { HistogramSpec{"x", 3, 1, 1}.validate(); }) == Errc::ConfigError);
  CHECK(code_of([&] { fill_histogram(v, std::vector<double>{1.0}, two); }) == Errc::LengthMismatch);
  Histogram other(HistogramSpec{"x", 3, 0.0, 2.0});
  CHECK(code_of([&] { edges.merge(other); }) == Errc::SpecMismatch);
}

TEST_CASE("histogram: 10,000 rows match a brute-force binning loop exactly") {
  skimflow::testing::Rng rng(3);
  std::vector<double> v;
  std::vector<double> w;
  for (int i = 0; i < 10000; ++i) {
    v.push_back(-50.0 + 1200.0 * rng.uniform());
    w.push_back(rng.chance(0.2) ? -0.5 : 1.25 * rng.uniform());
  }
  for (const HistogramSpec &spec : {HistogramSpec{"a", 50, 0.0, 1000.0}, HistogramSpec{"b", 7, 0.3, 999.9},
                                   HistogramSpec{"c", 1, -10.0, 10.0}}) {
    const auto h = fill_histogram(v, w, spec);
    const auto o = skimflow::testing::oracle_histogram(v, w, spec);
    CHECK(h.contents() == o.contents);
    CHECK(h.sumw2() == o.sumw2);
    CHECK(h.underflow() == o.underflow);
    CHECK(h.overflow() == o.overflow);
  }
}

TEST_CASE("histogram conservation and unit-weight sumw2") {
  skimflow::testing::Rng rng(4);
  std::vector<double> v;
  std::vector<double> ones;
  std::vector<double> w;
  for (int i = 0; i < 5000; ++i) {
    v.push_back(100.0 * rng.uniform() - 10.0);
    ones.push_back(1.0);
    w.push_back(rng.uniform() - 0.3);
  }
  const HistogramSpec spec{"x", 13, 0.0, 80.0};
  const auto unit = fill_histogram(v, ones, spec);
  CHECK(unit.sumw2() == unit.contents());
  CHECK(unit.total() == 5000.0);
  const auto weighted = fill_histogram(v, w, spec);
  CHECK(close_rel(weighted.total(), skimflow::testing::oracle_kahan_sum(w)));
  for (double s : weighted.sumw2()) CHECK(s >= 0.0);
}

TEST_CASE("plot bundle: stacking") {
  AnalysisConfig cfg;
  cfg.datasets = {{"a", DatasetKind::Mc, 1.0, "a"}, {"b", DatasetKind::Mc, 1.0, "b"}};
  cfg.histograms = {{"x", 2, 0.0, 2.0}};
  Histogram ha(cfg.histograms[0]);
  ha.fill(0.5, 1.0);
  ha.fill(1.5, 2.0);
  Histogram hb(cfg.histograms[0]);
  hb.fill(0.5, 3.0);
  hb.fill(1.5, 4.0);

  AnalysisConfig one = cfg;
  one.datasets.resize(1);
  const auto single = build_plot_bundle(one, {{"a", {ha}}});
  CHECK(single.histograms[0].stack == single.histograms[0].mc[0].contents);

  const auto both = build_plot_bundle(cfg, {{"b", {hb}}, {"a", {ha}}});
  const auto &h = both.histograms[0];
  CHECK(h.stack == std::vector<double>{4, 6});
  REQUIRE(h.mc.size() == 2);
  CHECK(h.mc[0].label == "a");
  CHECK(h.mc[1].uncertainty == std::vector<double>{3, 4});
  CHECK_FALSE(h.data.has_value());
  CHECK(both.to_json() == both.to_json());
  const auto parsed = nlohmann::json::parse(both.to_json());
  CHECK(parsed["histograms"][0]["stack"][1] == 6.0);
  CHECK(both.to_csv().find("x,stack,1,1,2,6,") != std::string::npos);

  Histogram wrong(HistogramSpec{"x", 3, 0.0, 2.0});
  CHECK(code_of([&] { build_plot_bundle(cfg, {{"a", {ha}}, {"b", {wrong}}}); }) == Errc::SpecMismatch);
  CHECK(code_of([&] { build_plot_bundle(cfg, {{"a", {ha}}}); }) == Errc::ConfigError);
}

TEST_CASE("full analysis: bundle equals oracle-summed histograms; cross-section covariance") {
  TempDir out;
  AnalysisConfig cfg = base_config(sample().path());
  auto run = [&](const AnalysisConfig &c, const std::string &tag) {
    const AnalysisPlan plan(c);
    std::vector<DatasetHistograms> inputs;
    for (const auto &d : c.datasets) {
      auto ds = open_dataset(plan, d);
      const std::string path = out.file(tag + d.label + ".ntu");
      run_two_pass(plan, ds, {4}, path);
      inputs.push_back({d.label, histograms_from_ntuple(path, c.histograms)});
    }
    return build_plot_bundle(c, inputs);
  };
  const PlotBundle bundle = run(cfg, "a");

  std::vector<std::vector<skimflow::testing::OracleHistogram>> oracle;
  for (const auto &d : cfg.datasets) {
    const auto events = skimflow::testing::oracle_load(expand_glob(d.glob));
    const bool mc = d.kind == DatasetKind::Mc;
    const double sumw = mc ? skimflow::testing::oracle_sum_of_weights(events) : 0.0;
    const auto skim = skimflow::testing::oracle_skim(events, mc, d.cross_section_pb.value_or(0), 300.0, sumw);
    std::vector<skimflow::testing::OracleHistogram> hs;
    for (const auto &spec : cfg.histograms) {
      std::vector<double> v;
      std::vector<double> w;
      for (const auto &row : skim.rows) {
        v.push_back(row[skimflow::testing::oracle_column(spec.variable)]);
        w.push_back(row.back());
      }
      hs.push_back(skimflow::testing::oracle_histogram(v, w, spec));
    }
    oracle.push_back(std::move(hs));
  }
  for (std::size_t h = 0; h < cfg.histograms.size(); ++h) {
    const auto &ph = bundle.histograms[h];
    REQUIRE(ph.mc.size() == 2);
    REQUIRE(ph.data.has_value());
    for (std::uint32_t b = 0; b < cfg.histograms[h].nbins; ++b) {
      CHECK(close_rel(ph.mc[0].contents[b], oracle[0][h].contents[b]));
      CHECK(close_rel(ph.mc[1].contents[b], oracle[1][h].contents[b]));
      CHECK(close_rel(ph.stack[b], oracle[0][h].contents[b] + oracle[1][h].contents[b]));
      CHECK(ph.data->contents[b] == oracle[2][h].contents[b]);
      CHECK(close_rel(ph.stack[b], ph.mc[0].contents[b] + ph.mc[1].contents[b]));
    }
  }

  AnalysisConfig doubled = cfg;
  for (auto &d : doubled.datasets) {
    if (d.cross_section_pb) *d.cross_section_pb *= 2.0;
  }
  const PlotBundle twice = run(doubled, "b");
  for (std::size_t h = 0; h < cfg.histograms.size(); ++h) {
    for (std::size_t m = 0; m < 2; ++m) {
      for (std::uint32_t b = 0; b < cfg.histograms[h].nbins; ++b) {
        CHECK(close_rel(twice.histograms[h].mc[m].contents[b], 2.0 * bundle.histograms[h].mc[m].contents[b]));
      }
    }
    CHECK(twice.histograms[h].data->contents == bundle.histograms[h].data->contents);
  }
}

TEST_CASE("config parsing") {
  const std::string good = R"({
    "datasets": [{"glob": "x_*.evt", "kind": "mc", "xsec_pb": 5.0, "label": "x"},
                 {"glob": "y.evt", "kind": "data", "label": "y"}],
    "luminosity_invpb": 10.0,
    "selection": "met.pt > 100",
    "projection": [{"name": "met", "expr": "met.pt"}],
    "histograms": [{"variable": "met", "nbins": 4, "lo": 0, "hi": 400}],
    "workers": 3,
    "partition": {"mode": "custom", "custom": {"per_file": 2}}
  })";
  const auto cfg = AnalysisConfig::from_json(good);
  CHECK(cfg.datasets.size() == 2);
  CHECK(cfg.workers == std::optional<std::size_t>(3));
  CHECK(cfg.partition.per_file == std::optional<std::size_t>(2));
  CHECK(AnalysisConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
  const AnalysisPlan plan(cfg);
  CHECK(plan.output_columns() == FlatSchema{{"met", PrimitiveKind::F64}, {"weight", PrimitiveKind::F64}});

  const auto minimal = AnalysisConfig::from_json(
      R"({"datasets":[{"glob":"a","kind":"mc","xsec_pb":1,"label":"a"}],"luminosity_invpb":1})");
  CHECK(minimal.selection == default_selection());
  CHECK(minimal.histograms.size() == 4);
  CHECK_NOTHROW(AnalysisPlan{minimal});

  auto message = [](const std::string &text) {
    try {
      AnalysisPlan{AnalysisConfig::from_json(text)};
    } catch (const Error &e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("{\n  \"datasets\": [,]\n}").find("line 2, column 16") != std::string::npos);
  CHECK(message(R"({"datasets":[{"glob":"a","kind":"mc","label":"a"}],"luminosity_invpb":1})")
            .find("datasets[0]") != std::string::npos);
  CHECK(message(R"({"datasets":[{"glob":"a","kind":"data","xsec_pb":2,"label":"a"}],"luminosity_invpb":1})")
            .find("ConfigError") != std::string::npos);
  CHECK(message(R"({"datasets":[{"glob":"a","kind":"mc","xsec_pb":1,"label":"a"}],"luminosity_invpb":0})")
            .find("luminosity_invpb") != std::string::npos);
  CHECK(message(R"({"datasets":[{"glob":"a","kind":"mc","xsec_pb":1,"label":"a"}],"luminosity_invpb":1,
                    "histograms":[{"variable":"nope","nbins":2,"lo":0,"hi":1}]})")
            .find("histograms[0].variable") != std::string::npos);
  CHECK(message(R"({"datasets":[{"glob":"a","kind":"mc","xsec_pb":1,"label":"a"}],"luminosity_invpb":1,
                    "selection":"met.pt"})")
            .find("TypeMismatch: selection") != std::string::npos);
  CHECK(message(R"({"datasets":[{"glob":"a","kind":"mc","xsec_pb":1,"label":"a"}],"luminosity_invpb":1,
                    "projection":[{"name":"weight","expr":"met.pt"}]})")
            .find("NameCollision") != std::string::npos);
  CHECK(message(R"({"datasets":[{"glob":"a","kind":"mc","xsec_pb":1,"label":"a"}],"luminosity_invpb":1,
                    "partition":{"mode":"custom","custom":[{"file":"a","begin":0}]}})")
            .find("partition.custom[0]") != std::string::npos);
  CHECK(message(R"({"datasets":[{"glob":"a","kind":"mc","xsec_pb":1,"label":"a"}],"luminosity_invpb":1,
                    "wokers":2})")
            .find("wokers: unknown key") != std::string::npos);
}

TEST_CASE("per-dataset partition overrides the top-level plan") {
  const auto cfg = AnalysisConfig::from_json(R"({
    "datasets": [{"glob": "x_*.evt", "kind": "mc", "xsec_pb": 5.0, "label": "x",
                  "partition": {"mode": "custom", "custom": [{"file": "x_000.evt", "begin": 0, "end": 3}]}},
                 {"glob": "y.evt", "kind": "data", "label": "y"}],
    "luminosity_invpb": 10.0,
    "partition": {"mode": "auto", "target_bytes": 5000}
  })");
  CHECK(cfg.partition_for("x").mode == PartitionConfig::Mode::Custom);
  REQUIRE(cfg.partition_for("x").custom.size() == 1);
  CHECK(cfg.partition_for("x").custom[0].end == 3);
  CHECK(cfg.partition_for("y").mode == PartitionConfig::Mode::Auto);
  CHECK(cfg.partition_for("y").target_bytes == 5000);
  CHECK(AnalysisConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
  CHECK(code_of([] {
          AnalysisConfig::from_json(R"({"datasets":[{"glob":"a","kind":"mc","xsec_pb":1,"label":"a",
                                       "partition":{"mode":"custom"}}],"luminosity_invpb":1})");
        }) == Errc::ConfigError);

  // Each dataset is planned with its own ranges; the shared plan would name foreign files.
  const Sample &s = sample();
  AnalysisConfig run_cfg = base_config(s.path());
  const std::size_t obs_blocks = EvtReader(s.dir.file("obs.evt")).blocks().size();
  const std::vector<CustomRange> obs_ranges = {{"obs.evt", 0, 2}, {"obs.evt", 2, obs_blocks}};
  run_cfg.dataset_partitions["obs"] = PartitionConfig::explicit_ranges(obs_ranges);
  const AnalysisPlan plan(run_cfg);
  auto obs = open_dataset(plan, run_cfg.dataset("obs"));
  CHECK(obs.partitions().size() == 2);
  auto bkg = open_dataset(plan, run_cfg.dataset("bkg"));
  CHECK(bkg.partitions().size() > 2);
  run_cfg.partition = PartitionConfig::explicit_ranges(obs_ranges);
  const AnalysisPlan shared(run_cfg);
  CHECK(code_of([&] { open_dataset(shared, run_cfg.dataset("bkg")); }) == Errc::InvalidCustomPlan);
}
