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

#include "skimflow/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "skimflow/error.hpp"
#include "skimflow/schema.hpp"

namespace skimflow {

void GeneratorSpec::validate() const {
  if (!(met_scale_gev > 0.0) || !std::isfinite(met_scale_gev)) {
    throw Error(Errc::ConfigError, "met scale must be positive");
  }
  if (!(mean_jets >= 0.0) || mean_jets > 50.0) throw Error(Errc::ConfigError, "mean jet count must be in [0, 50]");
  if (!std::isfinite(weight)) throw Error(Errc::ConfigError, "weight must be finite");
  if (!(p_plus >= 0.0 && p_plus <= 1.0)) throw Error(Errc::ConfigError, "p_plus must be in [0, 1]");
}

EventGenerator::EventGenerator(const GeneratorSpec &spec) : spec_(spec), rng_(spec.seed) { spec_.validate(); }

double EventGenerator::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

double EventGenerator::exponential(double scale) { return -scale * std::log1p(-uniform()); }

std::uint32_t EventGenerator::poisson(double mean) {
  const double limit = std::exp(-mean);
  std::uint32_t k = 0;
  double p = uniform();
  while (p > limit) {
    ++k;
    p *= uniform();
  }
  return k;
}

double EventGenerator::phi() {
  const double v = -std::numbers::pi + 2.0 * std::numbers::pi * uniform();
  return v >= std::numbers::pi ? -std::numbers::pi : v;
}

Particle EventGenerator::particle(double min_pt, double pt_scale, double eta_max, double mass) {
  Particle p;
  p.pt = min_pt + exponential(pt_scale);
  p.eta = eta_max * (2.0 * uniform() - 1.0);
  p.phi = phi();
  p.mass = mass;
  p.id = static_cast<std::int32_t>(rng_() & 7u);
  return p;
}

Event EventGenerator::next() {
  Event e;
  const std::uint64_t idx = index_++;
  e.run = 1;
  e.lumi = 1 + static_cast<std::int64_t>(idx / 1000);
  e.event = static_cast<std::int64_t>(spec_.first_event + idx);

  if (spec_.kind == DatasetKind::Data) {
    e.gen_weight = 1.0;
  } else if (spec_.weight_mode == GeneratorSpec::WeightMode::Constant) {
    e.gen_weight = spec_.weight;
  } else {
    e.gen_weight = uniform() < spec_.p_plus ? spec_.weight : -spec_.weight;
  }

  e.met_pt = exponential(spec_.met_scale_gev);
  e.met_phi = phi();

  struct Kind {
    Collection c;
    double mean, min_pt, pt_scale, eta_max, mass;
  };
  const Kind kinds[] = {
      {Collection::Muons, 0.25, 5.0, 20.0, 2.5, 0.1057},
      {Collection::Electrons, 0.25, 5.0, 20.0, 2.5, 0.000511},
      {Collection::Taus, 0.1, 20.0, 30.0, 2.5, 1.777},
      {Collection::Photons, 0.3, 10.0, 30.0, 2.5, 0.0},
      {Collection::Jets, spec_.mean_jets, 20.0, 40.0, 4.7, 0.0},
  };
  for (const auto &k : kinds) {
    const std::uint32_t n = poisson(k.mean);
    auto &out = e[k.c];
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      Particle p = particle(k.min_pt, k.pt_scale, k.eta_max, k.mass);
      if (k.c == Collection::Jets) p.mass = 0.1 * p.pt * uniform();
      out.push_back(p);
    }
  }
  auto &jets = e[Collection::Jets];
  std::stable_sort(jets.begin(), jets.end(), [](const Particle &a, const Particle &b) { return a.pt > b.pt; });
  return e;
}

std::vector<Event> generate_events(const GeneratorSpec &spec) {
  EventGenerator gen(spec);
  std::vector<Event> out;
  out.reserve(spec.events);
  for (std::uint64_t i = 0; i < spec.events; ++i) out.push_back(gen.next());
  return out;
}

void generate(const GeneratorSpec &spec, const std::string &path, const EvtWriteOptions &options) {
  EventGenerator gen(spec);
  EvtWriter writer(path, event_schema(), options);
  for (std::uint64_t i = 0; i < spec.events; ++i) writer.write(gen.next());
  writer.close();
}

std::vector<std::string> generate_corpus(const GeneratorSpec &spec, const std::string &prefix, std::size_t files,
                                         const EvtWriteOptions &options) {
  if (files == 0) throw Error(Errc::ConfigError, "corpus needs at least one file");
  EventGenerator gen(spec);
  std::vector<std::string> paths;
  for (std::size_t f = 0; f < files; ++f) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_%03zu.evt", f);
    paths.push_back(prefix + suffix);
    const std::uint64_t begin = spec.events * f / files;
    const std::uint64_t end = spec.events * (f + 1) / files;
    EvtWriter writer(paths.back(), event_schema(), options);
    for (std::uint64_t i = begin; i < end; ++i) writer.write(gen.next());
    writer.close();
  }
  return paths;
}

}  // namespace skimflow
