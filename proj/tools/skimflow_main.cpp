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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skimflow/analysis_config.hpp"
#include "skimflow/benchmark.hpp"
#include "skimflow/error.hpp"
#include "skimflow/evt_file.hpp"
#include "skimflow/generator.hpp"
#include "skimflow/ntu_file.hpp"
#include "skimflow/plot_bundle.hpp"
#include "skimflow/workflow.hpp"

namespace fs = std::filesystem;
using namespace skimflow;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitIo = 3;

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::Usage: return kExitUsage;
    case ErrorClass::Data: return kExitData;
    case ErrorClass::Io: return kExitIo;
  }
  return kExitData;
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw Error(Errc::IoFailure, "write to '" + path + "' failed");
}

void ensure_dir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create directory '" + dir + "': " + ec.message());
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<const DatasetDescriptor *> select_datasets(const AnalysisConfig &cfg, const std::string &label) {
  std::vector<const DatasetDescriptor *> out;
  if (!label.empty()) {
    out.push_back(&cfg.dataset(label));
  } else {
    for (const auto &d : cfg.datasets) out.push_back(&d);
  }
  return out;
}

void report_warnings(const std::vector<Warning> &warnings) {
  for (const auto &w : warnings) std::cerr << "warning: " << errc_name(w.code) << ": " << w.message << "\n";
}

bool has_magic(const std::string &path, const char *magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::UnreadableFile, "cannot open '" + path + "'");
  char buf[4] = {};
  in.read(buf, 4);
  return in.gcount() == 4 && std::string(buf, 4) == magic;
}

void inspect_evt(const std::string &path) {
  EvtReader reader(path);
  std::uint64_t events = 0;
  std::uint64_t blocks = 0;
  std::uint64_t stored = 0;
  std::vector<Event> decoded;
  RawBlock raw;
  while (reader.next_raw(raw)) {
    decoded.clear();
    reader.decode(raw, decoded);
    events += decoded.size();
    stored += raw.payload.size();
    ++blocks;
  }
  std::cout << events << " events, " << blocks << " blocks\n";
  std::cout << "format: EVT, compressed: " << (reader.compressed() ? "yes" : "no") << "\n";
  std::cout << "payload bytes: " << stored << ", file bytes: " << fs::file_size(path) << "\n";
  std::cout << "schema: " << reader.schema().to_json() << "\n";
}

void inspect_ntu(const std::string &path) {
  NtuReader reader(path);
  const ColumnBatch all = reader.read_all();
  if (all.rows() != reader.rows()) throw Error(Errc::FooterMismatch, "row count disagrees with the column data");
  std::cout << reader.rows() << " rows, " << reader.groups() << " groups, " << reader.columns().size()
            << " columns\n";
  std::cout << "format: NTU, file bytes: " << reader.file_bytes() << "\n";
  for (const auto &c : reader.columns()) std::cout << "  " << c.name << ": " << primitive_name(c.kind) << "\n";
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"skimflow: event skimming, histogramming and benchmarking"};
  app.require_subcommand(1);

  // gen
  GeneratorSpec gen_spec;
  std::string gen_kind = "mc";
  std::string gen_out;
  bool gen_compress = false;
  std::size_t gen_block = kDefaultBlockEvents;
  std::size_t gen_files = 1;
  std::optional<double> gen_signed;
  auto *gen = app.add_subcommand("gen", "Generate synthetic events");
  gen->add_option("--seed", gen_spec.seed, "RNG seed")->default_val(42);
  gen->add_option("--events", gen_spec.events, "Number of events")->required()->check(CLI::NonNegativeNumber);
  gen->add_option("--kind", gen_kind, "data or mc")->check(CLI::IsMember({"data", "mc"}));
  gen->add_option("--out", gen_out, "Output file, or file prefix with --files")->required();
  gen->add_flag("--compress", gen_compress, "Deflate each block");
  gen->add_option("--block-events", gen_block, "Events per block")->check(CLI::PositiveNumber);
  gen->add_option("--files", gen_files, "Split the stream over N files")->check(CLI::PositiveNumber);
  gen->add_option("--met-scale", gen_spec.met_scale_gev, "Exponential MET scale in GeV");
  gen->add_option("--mean-jets", gen_spec.mean_jets, "Mean jet multiplicity");
  gen->add_option("--weight", gen_spec.weight, "Generator weight (magnitude when signed)");
  gen->add_option("--signed-weights", gen_signed, "Signed weights, positive with this probability");
  gen->add_option("--first-event", gen_spec.first_event, "Event number of the first event");

  // convert
  std::string conv_in;
  std::string conv_out;
  bool conv_compress = false;
  std::size_t conv_block = kDefaultBlockEvents;
  auto *convert = app.add_subcommand("convert", "Re-encode an EVT file");
  convert->add_option("--in", conv_in, "Input EVT file")->required();
  convert->add_option("--out", conv_out, "Output EVT file")->required();
  convert->add_flag("--compress,!--no-compress", conv_compress, "Deflate each block");
  convert->add_option("--block-events", conv_block, "Events per block")->check(CLI::PositiveNumber);

  // inspect
  std::string inspect_path;
  auto *inspect = app.add_subcommand("inspect", "Summarize an EVT or NTU file");
  inspect->add_option("file", inspect_path, "File to inspect")->required();

  // shared analysis options
  std::string config_path;
  std::optional<std::size_t> workers;
  std::string dataset_label;
  auto add_config = [&](CLI::App *sub) {
    sub->add_option("--config", config_path, "Analysis config (JSON)")->required();
    sub->add_option("--workers", workers, "Worker threads (overrides config)")->check(CLI::PositiveNumber);
  };

  auto *sumw = app.add_subcommand("sum-weights", "Sum generator weights of mc datasets");
  add_config(sumw);
  sumw->add_option("--dataset", dataset_label, "Dataset label (default: every mc dataset)");

  std::string out_dir;
  auto *skim = app.add_subcommand("skim", "Select and project datasets into ntuples");
  add_config(skim);
  skim->add_option("--out-dir", out_dir, "Directory for <label>.ntu outputs")->required();
  skim->add_option("--dataset", dataset_label, "Dataset label (default: all)");

  std::string ntuple_dir;
  auto *hist = app.add_subcommand("hist", "Fill histograms from skimmed ntuples");
  add_config(hist);
  hist->add_option("--ntuple-dir", ntuple_dir, "Directory holding <label>.ntu files")->required();
  hist->add_option("--out-dir", out_dir, "Directory for <label>.hist.json (default: ntuple dir)");
  hist->add_option("--dataset", dataset_label, "Dataset label (default: all)");

  std::string plot_out;
  std::string plot_csv;
  auto *plot = app.add_subcommand("plot-data", "Build stacked plot data from skimmed ntuples");
  add_config(plot);
  plot->add_option("--ntuple-dir", ntuple_dir, "Directory holding <label>.ntu files")->required();
  plot->add_option("--out", plot_out, "Plot bundle JSON")->required();
  plot->add_option("--csv", plot_csv, "Also write the bundle as CSV");

  BenchConfig bench_cfg;
  std::vector<std::size_t> bench_workers;
  std::string bench_out;
  std::string bench_csv;
  bool bench_no_compressed = false;
  auto *bench = app.add_subcommand("bench", "Time the two-pass skim across cache and compression settings");
  bench->add_option("--config", config_path, "Analysis config (JSON)")->required();
  bench->add_option("--work-dir", bench_cfg.work_dir, "Scratch directory")->required();
  bench->add_option("--workers", bench_workers, "Worker counts to measure (default 1)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--reps", bench_cfg.repetitions, "Measured repetitions per cell (>= 3)");
  bench->add_option("--dataset", bench_cfg.dataset_label, "Dataset label (default: first mc)");
  bench->add_flag("--no-compressed", bench_no_compressed, "Skip the compressed-input cells");
  bench->add_option("--out", bench_out, "Timing report JSON (default: stdout)");
  bench->add_option("--csv", bench_csv, "Timing report CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*gen) {
      gen_spec.kind = gen_kind == "data" ? DatasetKind::Data : DatasetKind::Mc;
      if (gen_signed) {
        gen_spec.weight_mode = GeneratorSpec::WeightMode::Signed;
        gen_spec.p_plus = *gen_signed;
      }
      gen_spec.validate();
      EvtWriteOptions opts{gen_compress, gen_block};
      if (gen_files == 1) {
        generate(gen_spec, gen_out, opts);
        std::cout << "wrote " << gen_spec.events << " events to " << gen_out << "\n";
      } else {
        std::string prefix = gen_out;
        if (prefix.size() > 4 && prefix.ends_with(".evt")) prefix.resize(prefix.size() - 4);
        const auto paths = generate_corpus(gen_spec, prefix, gen_files, opts);
        std::cout << "wrote " << gen_spec.events << " events to " << paths.size() << " files " << prefix
                  << "_*.evt\n";
      }
    } else if (*convert) {
      convert_evt(conv_in, conv_out, EvtWriteOptions{conv_compress, conv_block});
      std::cout << "wrote " << conv_out << "\n";
    } else if (*inspect) {
      if (has_magic(inspect_path, "EVT1")) {
        inspect_evt(inspect_path);
      } else if (has_magic(inspect_path, "NTU1")) {
        inspect_ntu(inspect_path);
      } else {
        throw Error(Errc::BadMagic, "'" + inspect_path + "' is neither an EVT nor an NTU file");
      }
    } else if (*bench) {
      const AnalysisPlan plan(AnalysisConfig::load(config_path));
      if (!bench_workers.empty()) bench_cfg.workers = bench_workers;
      if (bench_no_compressed) bench_cfg.compressed = {false};
      ensure_dir(bench_cfg.work_dir);
      const TimingReport report = run_benchmark(plan, bench_cfg);
      if (bench_out.empty()) {
        std::cout << report.to_json();
      } else {
        write_text(bench_out, report.to_json());
      }
      if (!bench_csv.empty()) write_text(bench_csv, report.to_csv());
    } else {
      const AnalysisPlan plan(AnalysisConfig::load(config_path));
      const AnalysisConfig &cfg = plan.config();
      if (*sumw) {
        const EngineConfig engine = engine_config(plan, workers);
        if (!dataset_label.empty()) {
          // Let a data dataset reach sum_of_weights so it reports KindMismatch.
          cfg.dataset(dataset_label);
        }
        for (const auto *d : select_datasets(cfg, dataset_label)) {
          if (dataset_label.empty() && d->kind != DatasetKind::Mc) continue;
          PartitionedDataset ds = open_dataset(plan, *d);
          std::cout << d->label << ": " << num(sum_of_weights(ds, engine)) << "\n";
        }
      } else if (*skim) {
        const EngineConfig engine = engine_config(plan, workers);
        const auto targets = select_datasets(cfg, dataset_label);
        ensure_dir(out_dir);
        for (const auto *d : targets) {
          PartitionedDataset ds = open_dataset(plan, *d);
          const SkimResult r = run_two_pass(plan, ds, engine, ntuple_path(out_dir, d->label));
          report_warnings(r.warnings);
          char factor[64];
          std::snprintf(factor, sizeof factor, "%.6g", r.reduction());
          std::cout << d->label << ": " << r.input_events << " → " << r.output_rows
                    << " rows (reduction factor " << factor << ")\n";
        }
      } else if (*hist) {
        const std::string dir = out_dir.empty() ? ntuple_dir : out_dir;
        ensure_dir(dir);
        for (const auto *d : select_datasets(cfg, dataset_label)) {
          const auto hs = histograms_from_ntuple(ntuple_path(ntuple_dir, d->label), cfg.histograms);
          const std::string path = (fs::path(dir) / (d->label + ".hist.json")).string();
          write_text(path, histograms_to_json(d->label, hs));
          std::cout << "wrote " << path << "\n";
        }
      } else if (*plot) {
        std::vector<DatasetHistograms> inputs;
        for (const auto &d : cfg.datasets) {
          inputs.push_back({d.label, histograms_from_ntuple(ntuple_path(ntuple_dir, d.label), cfg.histograms)});
        }
        const PlotBundle bundle = build_plot_bundle(cfg, inputs);
        write_text(plot_out, bundle.to_json());
        if (!plot_csv.empty()) write_text(plot_csv, bundle.to_csv());
        std::cout << "wrote " << plot_out << "\n";
      }
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(classify(e.code()));
  } catch (const fs::filesystem_error &e) {
    std::cerr << "error: IoFailure: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
