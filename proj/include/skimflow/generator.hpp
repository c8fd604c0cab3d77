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

#ifndef SKIMFLOW_GENERATOR_HPP_
#define SKIMFLOW_GENERATOR_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "skimflow/dataset.hpp"
#include "skimflow/event.hpp"
#include "skimflow/evt_file.hpp"

namespace skimflow {

/// Parameters of the synthetic event source.
struct GeneratorSpec {
  enum class WeightMode { Constant, Signed };

  std::uint64_t seed = 42;
  std::uint64_t events = 0;
  DatasetKind kind = DatasetKind::Mc;
  double met_scale_gev = 100.0;
  double mean_jets = 3.0;
  WeightMode weight_mode = WeightMode::Constant;
  double weight = 1.0;  // constant value, or magnitude for signed weights
  double p_plus = 0.8;  // probability of a positive signed weight
  std::uint64_t first_event = 0;

  /// Errors: ConfigError.
  void validate() const;
};

/**
 * Deterministic event stream. Every draw goes through one mt19937_64 and
 * explicit transforms, so output does not depend on the standard library's
 * distribution implementations.
 */
class EventGenerator {
 public:
  explicit EventGenerator(const GeneratorSpec &spec);

  Event next();
  std::uint64_t produced() const { return index_; }

 private:
  double uniform();
  double exponential(double scale);
  std::uint32_t poisson(double mean);
  double phi();
  Particle particle(double min_pt, double pt_scale, double eta_max, double mass);

  GeneratorSpec spec_;
  std::mt19937_64 rng_;
  std::uint64_t index_ = 0;
};

std::vector<Event> generate_events(const GeneratorSpec &spec);

/// Writes spec.events events to one EVT file. Errors: IoFailure.
void generate(const GeneratorSpec &spec, const std::string &path, const EvtWriteOptions &options = {});

/**
 * Splits one event stream over `files` EVT files named
 * `<prefix>_000.evt`, `<prefix>_001.evt`, ... and returns their paths.
 */
std::vector<std::string> generate_corpus(const GeneratorSpec &spec, const std::string &prefix, std::size_t files,
                                         const EvtWriteOptions &options = {});

}  // namespace skimflow

#endif  // SKIMFLOW_GENERATOR_HPP_
