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

#include "support.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "skimflow/evt_file.hpp"

namespace skimflow::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "skimflow-test-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

namespace {

double awkward_nonneg(Rng &rng) {
  switch (rng.below(10)) {
    case 0: return 0.0;
    case 1: return std::numeric_limits<double>::denorm_min();
    case 2: return 1e300 * rng.uniform();
    default: return 500.0 * rng.uniform();
  }
}

double awkward_any(Rng &rng) {
  switch (rng.below(10)) {
    case 0: return -0.0;
    case 1: return std::numeric_limits<double>::lowest() * rng.uniform();
    case 2: return -std::numeric_limits<double>::denorm_min();
    default: return 10.0 * (rng.uniform() - 0.5);
  }
}

double random_phi(Rng &rng) {
  if (rng.chance(0.05)) return -std::numbers::pi;
  double v = -std::numbers::pi + 2.0 * std::numbers::pi * rng.uniform();
  return v >= std::numbers::pi ? -std::numbers::pi : v;
}

}  // namespace

Event random_event(Rng &rng) {
  Event e;
  e.run = static_cast<std::int64_t>(rng.next());
  e.lumi = static_cast<std::int64_t>(rng.next() >> rng.below(64));
  e.event = static_cast<std::int64_t>(rng.next());
  e.gen_weight = awkward_any(rng);
  e.met_pt = awkward_nonneg(rng);
  e.met_phi = random_phi(rng);
  for (auto c : kAllCollections) {
    const std::size_t n = rng.chance(0.3) ? 0 : rng.below(7);
    for (std::size_t i = 0; i < n; ++i) {
      Particle p;
      p.pt = awkward_nonneg(rng);
      p.eta = awkward_any(rng);
      p.phi = random_phi(rng);
      p.mass = awkward_nonneg(rng);
      p.id = static_cast<std::int32_t>(static_cast<std::uint32_t>(rng.next()));
      e[c].push_back(p);
    }
  }
  return e;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(const Event &a, const Event &b) {
  if (a.run != b.run || a.lumi != b.lumi || a.event != b.event) return false;
  if (!same_bits(a.gen_weight, b.gen_weight) || !same_bits(a.met_pt, b.met_pt) || !same_bits(a.met_phi, b.met_phi)) {
    return false;
  }
  for (auto c : kAllCollections) {
    if (a[c].size() != b[c].size()) return false;
    for (std::size_t i = 0; i < a[c].size(); ++i) {
      const auto &x = a[c][i];
      const auto &y = b[c][i];
      if (!same_bits(x.pt, y.pt) || !same_bits(x.eta, y.eta) || !same_bits(x.phi, y.phi) ||
          !same_bits(x.mass, y.mass) || x.id != y.id) {
        return false;
      }
    }
  }
  return true;
}

bool close_rel(double a, double b, double rel) {
  if (a == b) return true;
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return std::fabs(a - b) <= rel * scale;
}

std::vector<std::uint8_t> read_bytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string &path, const std::vector<std::uint8_t> &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string sha_like_digest(const std::string &path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : read_bytes(path)) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Event> oracle_load(const std::vector<std::string> &paths) {
  std::vector<Event> all;
  for (const auto &p : paths) {
    auto events = read_evt(p);
    all.insert(all.end(), events.begin(), events.end());
  }
  return all;
}

double oracle_kahan_sum(const std::vector<double> &values) {
  double sum = 0.0;
  double c = 0.0;
  for (double v : values) {
    const double y = v - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum - c;
}

double oracle_sum_of_weights(const std::vector<Event> &events) {
  std::vector<double> w;
  w.reserve(events.size());
  for (const auto &e : events) w.push_back(e.gen_weight);
  return oracle_kahan_sum(w);
}

namespace {

int jets_above(const Event &e, double cut) {
  int n = 0;
  for (const auto &j : e[Collection::Jets]) n += j.pt > cut ? 1 : 0;
  return n;
}

}  // namespace

bool oracle_default_selection(const Event &e) {
  return e.met_pt > 200.0 && e[Collection::Muons].empty() && e[Collection::Electrons].empty() &&
         jets_above(e, 30.0) >= 2;
}

std::vector<double> oracle_default_row(const Event &e, double weight) {
  double ht = 0.0;
  double lead = 0.0;
  bool first = true;
  for (const auto &j : e[Collection::Jets]) {
    ht += j.pt;
    if (first || j.pt > lead) lead = j.pt;
    first = false;
  }
  return {static_cast<double>(e.event),
          e.met_pt,
          e.met_phi,
          static_cast<double>(jets_above(e, 30.0)),
          ht,
          lead,
          static_cast<double>(e[Collection::Photons].size()),
          static_cast<double>(e[Collection::Taus].size()),
          weight};
}

std::size_t oracle_column(const std::string &name) {
  static const char *names[] = {"event", "met_pt", "met_phi", "njets", "ht", "leading_jet_pt",
                                "nphotons", "ntaus", "weight"};
  for (std::size_t i = 0; i < std::size(names); ++i) {
    if (name == names[i]) return i;
  }
  throw std::runtime_error("no oracle column " + name);
}

OracleSkim oracle_skim(const std::vector<Event> &events, bool mc, double xsec, double lumi, double sumw) {
  OracleSkim out;
  out.input_events = events.size();
  for (const auto &e : events) {
    if (!oracle_default_selection(e)) continue;
    const double w = mc ? e.gen_weight * xsec * lumi / sumw : 1.0;
    out.rows.push_back(oracle_default_row(e, w));
  }
  return out;
}

OracleHistogram oracle_histogram(const std::vector<double> &values, const std::vector<double> &weights,
                                 const HistogramSpec &spec) {
  OracleHistogram h;
  h.contents.assign(spec.nbins, 0.0);
  h.sumw2.assign(spec.nbins, 0.0);
  for (std::size_t r = 0; r < values.size(); ++r) {
    const double v = values[r];
    const double w = weights[r];
    if (v < spec.lo) {
      h.underflow += w;
      continue;
    }
    bool placed = false;
    for (std::uint32_t i = 0; i < spec.nbins; ++i) {
      const double lo = spec.lo + (spec.hi - spec.lo) * i / spec.nbins;
      const double hi = i + 1 == spec.nbins ? spec.hi : spec.lo + (spec.hi - spec.lo) * (i + 1) / spec.nbins;
      if (v >= lo && v < hi) {
        h.contents[i] += w;
        h.sumw2[i] += w * w;
        placed = true;
        break;
      }
    }
    if (!placed) h.overflow += w;
  }
  return h;
}

}  // namespace skimflow::testing
