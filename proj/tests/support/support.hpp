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

#ifndef SKIMFLOW_TESTS_SUPPORT_HPP_
#define SKIMFLOW_TESTS_SUPPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skimflow/analysis_config.hpp"
#include "skimflow/event.hpp"
#include "skimflow/histogram.hpp"
#include "skimflow/scalar.hpp"

namespace skimflow::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::string file(const std::string &name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// splitmix64; independent of the library's generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1)
  std::uint64_t below(std::uint64_t n);
  bool chance(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

/// Schema-conforming event with awkward values mixed in (signed zeros,
/// denormals, huge magnitudes, phi exactly -pi, empty collections).
Event random_event(Rng &rng);

/// Bit-level equality, so -0.0 and 0.0 differ.
bool same_bits(const Event &a, const Event &b);
bool same_bits(double a, double b);

bool close_rel(double a, double b, double rel = 1e-12);

std::vector<std::uint8_t> read_bytes(const std::string &path);
void write_bytes(const std::string &path, const std::vector<std::uint8_t> &bytes);
std::string sha_like_digest(const std::string &path);  // fnv-1a 64, hex

// Serial oracle. Reads files in sorted order with the plain EVT reader and
// applies the default analysis written directly in host code.

std::vector<Event> oracle_load(const std::vector<std::string> &paths);
double oracle_kahan_sum(const std::vector<double> &values);
double oracle_sum_of_weights(const std::vector<Event> &events);
bool oracle_default_selection(const Event &e);

/// Default projection columns as doubles (ints widened), then weight.
std::vector<double> oracle_default_row(const Event &e, double weight);

struct OracleSkim {
  std::vector<std::vector<double>> rows;
  std::uint64_t input_events = 0;
};

/// Default selection and projection; mc weights normalized with `sumw`.
OracleSkim oracle_skim(const std::vector<Event> &events, bool mc, double xsec, double lumi, double sumw);

struct OracleHistogram {
  std::vector<double> contents;
  std::vector<double> sumw2;
  double underflow = 0.0;
  double overflow = 0.0;
};

/// Linear scan over the edges lo + (hi - lo) * i / nbins.
OracleHistogram oracle_histogram(const std::vector<double> &values, const std::vector<double> &weights,
                                 const HistogramSpec &spec);

/// Index of a default projection column in oracle rows.
std::size_t oracle_column(const std::string &name);

}  // namespace skimflow::testing

#endif  // SKIMFLOW_TESTS_SUPPORT_HPP_
