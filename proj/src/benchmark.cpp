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

#include "skimflow/benchmark.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "skimflow/error.hpp"
#include "skimflow/evt_file.hpp"
#include "skimflow/workflow.hpp"

namespace skimflow {

namespace fs = std::filesystem;

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

PhaseTimes median_phases(const std::vector<PhaseTimes> &reps) {
  PhaseTimes m;
  for (Phase p : {Phase::Read, Phase::Decode, Phase::Compute, Phase::Write}) {
    std::vector<double> v;
    for (auto r : reps) v.push_back(r[p]);
    m[p] = median_of(std::move(v));
  }
  return m;
}

std::string file_digest(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot read '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", crc32_of(bytes));
  return buf;
}

const DatasetDescriptor &pick_dataset(const AnalysisConfig &cfg, const std::string &label) {
  if (!label.empty()) return cfg.dataset(label);
  for (const auto &d : cfg.datasets) {
    if (d.kind == DatasetKind::Mc) return d;
  }
  return cfg.datasets.front();
}

/// Re-encodes every input file into `dir` with the requested compression.
DatasetDescriptor stage_inputs(const DatasetDescriptor &src, const AnalysisConfig &cfg, const fs::path &dir,
                               bool compressed) {
  fs::create_directories(dir);
  EvtWriteOptions opts;
  opts.compress = compressed;
  opts.block_events = cfg.block_events;
  for (const auto &path : expand_glob(src.glob)) {
    convert_evt(path, (dir / fs::path(path).filename()).string(), opts);
  }
  DatasetDescriptor staged = src;
  staged.glob = (dir / "*.evt").string();
  return staged;
}

struct RunOutcome {
  SkimResult result;
  std::uint64_t file_bytes = 0;
};

RunOutcome run_once(const AnalysisPlan &plan, const DatasetDescriptor &desc, const BenchCell &cell,
                    const std::string &out_path) {
  PartitionedDataset ds = open_dataset(plan, desc);
  EngineConfig engine;
  engine.workers = cell.workers;
  TraversalStats pass1;
  std::optional<double> sumw;
  if (cell.cached) ds.persist();
  if (desc.kind == DatasetKind::Mc) {
    sumw = sum_of_weights(ds, engine, &pass1);
  } else {
    map_reduce(
        ds, engine, [](const Event &) { return 1.0; }, Reducer::sum(), &pass1);
  }
  RunOutcome out{run_skim(plan, ds, engine, sumw, out_path), ds.stored_bytes()};
  out.result.pass1 = pass1;
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

nlohmann::ordered_json phases_json(const PhaseTimes &t) {
  nlohmann::ordered_json j;
  j["read"] = t.read;
  j["decode"] = t.decode;
  j["compute"] = t.compute;
  j["write"] = t.write;
  return j;
}

double ratio(double a, double b) {
  if (a == 0.0 && b == 0.0) return 1.0;
  return a / b;
}

}  // namespace

TimingReport run_benchmark(const AnalysisPlan &plan, const BenchConfig &config) {
  if (config.repetitions < 3) throw Error(Errc::ConfigError, "benchmark needs at least 3 repetitions");
  if (config.cached.empty() || config.compressed.empty() || config.workers.empty()) {
    throw Error(Errc::ConfigError, "benchmark matrix is empty");
  }
  if (config.work_dir.empty()) throw Error(Errc::ConfigError, "benchmark needs a work directory");
  for (auto w : config.workers) {
    if (w == 0) throw Error(Errc::ConfigError, "workers must be at least 1");
  }
  const AnalysisConfig &cfg = plan.config();
  const DatasetDescriptor &source = pick_dataset(cfg, config.dataset_label);
  const fs::path work(config.work_dir);

  TimingReport report;
  for (bool compressed : config.compressed) {
    const DatasetDescriptor staged =
        stage_inputs(source, cfg, work / (compressed ? "deflate" : "plain"), compressed);
    for (bool cached : config.cached) {
      for (std::size_t workers : config.workers) {
        const BenchCell cell{cached, compressed, workers};
        const std::string out_path = (work / ("skim_" + std::string(cached ? "cached" : "cold") + "_" +
                                              (compressed ? "deflate" : "plain") + "_w" + std::to_string(workers) +
                                              ".ntu"))
                                         .string();
        CellReport cr;
        cr.cell = cell;
        cr.dataset_label = source.label;
        cr.selection = cfg.selection;
        cr.cache_hits = std::numeric_limits<std::uint64_t>::max();

        run_once(plan, staged, cell, out_path);  // warm-up, discarded
        std::vector<double> rc;
        std::vector<double> rd;
        std::vector<double> warm_wall;
        for (std::size_t r = 0; r < config.repetitions; ++r) {
          const RunOutcome run = run_once(plan, staged, cell, out_path);
          const auto &p2 = run.result.pass2;
          cr.reps.push_back(p2.phases);
          cr.rep_wall.push_back(p2.wall_seconds);
          rc.push_back(p2.phases.read + p2.phases.decode + p2.phases.compute);
          rd.push_back(p2.phases.read + p2.phases.decode);
          cr.warm_reps.push_back(run.result.pass1.phases);
          warm_wall.push_back(run.result.pass1.wall_seconds);
          cr.storage_bytes = std::max(cr.storage_bytes, p2.io.storage_bytes);
          cr.cache_hits = std::min(cr.cache_hits, p2.cache_hits);
          cr.input_events = run.result.input_events;
          cr.output_rows = run.result.output_rows;
          cr.input_file_bytes = run.file_bytes;
        }
        cr.median = median_phases(cr.reps);
        cr.median_wall = median_of(cr.rep_wall);
        cr.read_compute = median_of(rc);
        cr.read_decode = median_of(rd);
        cr.warm_median = median_phases(cr.warm_reps);
        cr.warm_wall = median_of(warm_wall);
        cr.output_digest = file_digest(out_path);
        report.cells.push_back(std::move(cr));
      }
    }
  }
  return report;
}

const CellReport &TimingReport::find(bool cached, bool compressed, std::size_t workers) const {
  for (const auto &c : cells) {
    if (c.cell.cached == cached && c.cell.compressed == compressed && c.cell.workers == workers) return c;
  }
  throw Error(Errc::ConfigError, "benchmark cell not measured");
}

std::string TimingReport::to_json() const {
  nlohmann::ordered_json root;
  auto list = nlohmann::ordered_json::array();
  for (const auto &c : cells) {
    nlohmann::ordered_json j;
    j["cached"] = c.cell.cached;
    j["compressed"] = c.cell.compressed;
    j["workers"] = c.cell.workers;
    j["dataset"] = c.dataset_label;
    j["selection"] = c.selection;
    j["input_events"] = c.input_events;
    j["output_rows"] = c.output_rows;
    j["input_file_bytes"] = c.input_file_bytes;
    j["median"] = phases_json(c.median);
    j["median_wall"] = c.median_wall;
    j["read_compute"] = c.read_compute;
    j["read_decode"] = c.read_decode;
    auto reps = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < c.reps.size(); ++r) {
      auto rj = phases_json(c.reps[r]);
      rj["wall"] = c.rep_wall[r];
      reps.push_back(std::move(rj));
    }
    j["repetitions"] = std::move(reps);
    nlohmann::ordered_json warm = phases_json(c.warm_median);
    warm["wall"] = c.warm_wall;
    j["warm_pass"] = std::move(warm);
    j["storage_bytes"] = c.storage_bytes;
    j["cache_hits"] = c.cache_hits;
    j["output_digest"] = c.output_digest;
    list.push_back(std::move(j));
  }
  root["cells"] = std::move(list);
  return root.dump(2) + "\n";
}

std::string TimingReport::to_csv() const {
  std::string out = "cached,compressed,workers,phase,median_seconds,repetitions\n";
  for (const auto &c : cells) {
    const std::string key = std::string(c.cell.cached ? "true" : "false") + "," +
                            (c.cell.compressed ? "true" : "false") + "," + std::to_string(c.cell.workers) + ",";
    auto row = [&](const char *phase, double median, auto per_rep) {
      std::string reps;
      for (std::size_t r = 0; r < c.reps.size(); ++r) {
        if (r) reps += ';';
        reps += fmt(per_rep(r));
      }
      out += key + phase + "," + fmt(median) + "," + reps + "\n";
    };
    row("read", c.median.read, [&](std::size_t r) { return c.reps[r].read; });
    row("decode", c.median.decode, [&](std::size_t r) { return c.reps[r].decode; });
    row("compute", c.median.compute, [&](std::size_t r) { return c.reps[r].compute; });
    row("write", c.median.write, [&](std::size_t r) { return c.reps[r].write; });
    row("read_compute", c.read_compute,
        [&](std::size_t r) { return c.reps[r].read + c.reps[r].decode + c.reps[r].compute; });
    row("wall", c.median_wall, [&](std::size_t r) { return c.rep_wall[r]; });
  }
  return out;
}

Speedup compare_reports(const CellReport &a, const CellReport &b) {
  if (a.dataset_label != b.dataset_label || a.selection != b.selection || a.input_events != b.input_events) {
    throw Error(Errc::IncomparableConfigs, "reports measure different datasets or selections");
  }
  Speedup s;
  for (Phase p : {Phase::Read, Phase::Decode, Phase::Compute, Phase::Write}) {
    s.phases[p] = ratio(PhaseTimes(a.median)[p], PhaseTimes(b.median)[p]);
  }
  s.read_compute = ratio(a.read_compute, b.read_compute);
  s.read_decode = ratio(a.read_decode, b.read_decode);
  s.wall = ratio(a.median_wall, b.median_wall);
  return s;
}

std::string speedup_to_json(const Speedup &s) {
  nlohmann::ordered_json j = phases_json(s.phases);
  j["read_compute"] = s.read_compute;
  j["read_decode"] = s.read_decode;
  j["wall"] = s.wall;
  return j.dump(2) + "\n";
}

}  // namespace skimflow
