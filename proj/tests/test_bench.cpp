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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "skimflow/benchmark.hpp"
#include "skimflow/error.hpp"
#include "skimflow/generator.hpp"
#include "skimflow/workflow.hpp"
#include "support.hpp"

using namespace skimflow;
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

AnalysisConfig config_for(const std::string &glob) {
  AnalysisConfig cfg;
  cfg.datasets = {{glob, DatasetKind::Mc, 3.0, "mc"}};
  cfg.luminosity_invpb = 100.0;
  cfg.selection = default_selection();
  cfg.projection = default_projection();
  cfg.histograms = default_histograms();
  return cfg;
}

}  // namespace

TEST_CASE("generator: empty, deterministic, exact unit weights") {
  TempDir dir;
  GeneratorSpec none;
  generate(none, dir.file("none.evt"));
  CHECK(read_evt(dir.file("none.evt")).empty());

  GeneratorSpec spec;
  spec.seed = 42;
  spec.events = 10000;
  generate(spec, dir.file("a.evt"));
  generate(spec, dir.file("b.evt"));
  CHECK(skimflow::testing::read_bytes(dir.file("a.evt")) == skimflow::testing::read_bytes(dir.file("b.evt")));
  spec.seed = 43;
  generate(spec, dir.file("c.evt"));
  CHECK(skimflow::testing::read_bytes(dir.file("a.evt")) != skimflow::testing::read_bytes(dir.file("c.evt")));

  auto ds = PartitionedDataset::open({dir.file("a.evt"), DatasetKind::Mc, 1.0, "a"},
                                     PartitionConfig::split_per_file(3));
  CHECK(sum_of_weights(ds, {2}) == 10000.0);
  CHECK(skimflow::testing::oracle_sum_of_weights(read_evt(dir.file("a.evt"))) == 10000.0);
}

TEST_CASE("generator: distributions and bookkeeping") {
  GeneratorSpec spec;
  spec.seed = 1;
  spec.events = 20000;
  spec.weight_mode = GeneratorSpec::WeightMode::Signed;
  spec.p_plus = 0.75;
  spec.weight = 2.0;
  const auto events = generate_events(spec);
  double met = 0.0;
  double jets = 0.0;
  double positive = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto &e = events[i];
    CHECK_NOTHROW(validate_event(e));
    CHECK(e.event == static_cast<std::int64_t>(i));
    CHECK(std::fabs(e.gen_weight) == 2.0);
    met += e.met_pt;
    jets += static_cast<double>(e[Collection::Jets].size());
    positive += e.gen_weight > 0 ? 1.0 : 0.0;
    for (std::size_t j = 1; j < e[Collection::Jets].size(); ++j) {
      CHECK(e[Collection::Jets][j - 1].pt >= e[Collection::Jets][j].pt);
    }
  }
  CHECK(met / 20000.0 == doctest::Approx(100.0).epsilon(0.03));
  CHECK(jets / 20000.0 == doctest::Approx(3.0).epsilon(0.03));
  CHECK(positive / 20000.0 == doctest::Approx(0.75).epsilon(0.03));

  GeneratorSpec data;
  data.kind = DatasetKind::Data;
  data.events = 100;
  data.weight = 3.0;
  for (const auto &e : generate_events(data)) CHECK(e.gen_weight == 1.0);

  GeneratorSpec bad;
  bad.p_plus = 1.5;
  CHECK(code_of([&] { bad.validate(); }) == Errc::ConfigError);
}

TEST_CASE("generator: a corpus is one stream split across files") {
  TempDir dir;
  GeneratorSpec spec;
  spec.events = 1001;
  const auto paths = generate_corpus(spec, dir.file("part"), 4);
  REQUIRE(paths.size() == 4);
  CHECK(std::filesystem::path(paths[2]).filename() == "part_002.evt");
  const auto joined = skimflow::testing::oracle_load(paths);
  const auto direct = generate_events(spec);
  REQUIRE(joined.size() == direct.size());
  bool same = true;
  for (std::size_t i = 0; i < direct.size(); ++i) same = same && skimflow::testing::same_bits(joined[i], direct[i]);
  CHECK(same);
}

TEST_CASE("benchmark: contract on a small corpus") {
  TempDir dir;
  GeneratorSpec spec;
  spec.events = 20000;
  generate_corpus(spec, dir.file("in"), 2, {false, 1024});
  const AnalysisPlan plan(config_for(dir.file("in_*.evt")));
  BenchConfig bc;
  bc.work_dir = dir.file("work");
  bc.workers = {1, 3};
  const TimingReport report = run_benchmark(plan, bc);
  CHECK(report.cells.size() == 8);

  std::string digest;
  for (const auto &c : report.cells) {
    CHECK(c.reps.size() == 3);
    CHECK(c.input_events == 20000);
    CHECK(c.output_rows > 0);
    if (digest.empty()) digest = c.output_digest;
    CHECK(c.output_digest == digest);
    if (c.cell.cached) {
      CHECK(c.storage_bytes == 0);
      CHECK(c.cache_hits > 0);
      CHECK(c.median.read == 0.0);
      CHECK(c.median.decode == 0.0);
      CHECK(c.warm_median.read + c.warm_median.decode > 0.0);
    } else {
      CHECK(c.storage_bytes > 0);
      CHECK(c.cache_hits == 0);
    }
  }
  const auto &plain = report.find(false, false, 1);
  const auto &packed = report.find(false, true, 1);
  CHECK(packed.input_file_bytes < plain.input_file_bytes);

  const Speedup same = compare_reports(plain, plain);
  CHECK(same.phases.read == 1.0);
  CHECK(same.phases.write == 1.0);
  CHECK(same.wall == 1.0);
  const Speedup cached = compare_reports(report.find(true, false, 1), plain);
  CHECK(cached.phases.read == 0.0);

  CellReport other = plain;
  other.selection = "true";
  CHECK(code_of([&] { compare_reports(plain, other); }) == Errc::IncomparableConfigs);

  const auto json = nlohmann::json::parse(report.to_json());
  CHECK(json["cells"].size() == 8);
  const std::string csv = report.to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 8 * 6);

  BenchConfig too_few = bc;
  too_few.repetitions = 2;
  CHECK(code_of([&] { run_benchmark(plan, too_few); }) == Errc::ConfigError);
}

TEST_CASE("benchmark: phases account for the measured wall time") {
  TempDir dir;
  GeneratorSpec spec;
  spec.events = 150000;
  generate(spec, dir.file("in.evt"));
  const AnalysisPlan plan(config_for(dir.file("in.evt")));
  BenchConfig bc;
  bc.work_dir = dir.file("work");
  bc.compressed = {false};
  const TimingReport report = run_benchmark(plan, bc);
  for (const auto &c : report.cells) {
    for (std::size_t r = 0; r < c.reps.size(); ++r) {
      const double total = c.reps[r].total();
      CHECK(std::fabs(total - c.rep_wall[r]) <= 0.05 * c.rep_wall[r]);
    }
  }
}

TEST_CASE("benchmark: storage bytes grow linearly with event count") {
  TempDir dir;
  std::vector<double> x;
  std::vector<double> y;
  for (std::uint64_t n : {5000, 10000, 20000, 40000}) {
    GeneratorSpec spec;
    spec.seed = n;
    spec.events = n;
    const std::string glob = dir.file("n" + std::to_string(n) + ".evt");
    generate(spec, glob);
    const AnalysisPlan plan(config_for(glob));
    BenchConfig bc;
    bc.work_dir = dir.file("w" + std::to_string(n));
    bc.cached = {false};
    bc.compressed = {false};
    const TimingReport report = run_benchmark(plan, bc);
    x.push_back(static_cast<double>(n));
    y.push_back(static_cast<double>(report.cells[0].storage_bytes));
  }
  const double mx = (x[0] + x[1] + x[2] + x[3]) / 4;
  const double my = (y[0] + y[1] + y[2] + y[3]) / 4;
  double sxy = 0;
  double sxx = 0;
  double syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  CHECK(r2 > 0.99);
}
