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

#ifndef SKIMFLOW_HISTOGRAM_HPP_
#define SKIMFLOW_HISTOGRAM_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skimflow/scalar.hpp"

namespace skimflow {

/// Uniform binning of one ntuple column over [lo, hi).
struct HistogramSpec {
  std::string variable;
  std::uint32_t nbins = 1;
  double lo = 0.0;
  double hi = 1.0;

  /// Throws ConfigError unless nbins >= 1 and lo < hi (both finite).
  void validate() const;

  /// Lower edge of bin i; edge(nbins) == hi.
  double edge(std::uint32_t i) const;

  /// Bin index, -1 for underflow, nbins for overflow (NaN included).
  std::int64_t locate(double v) const;

  friend bool operator==(const HistogramSpec &, const HistogramSpec &) = default;
};

class Histogram {
 public:
  explicit Histogram(HistogramSpec spec);

  const HistogramSpec &spec() const { return spec_; }

  void fill(double value, double weight = 1.0);
  /// Adds another histogram of the same spec bin by bin. Errors: SpecMismatch.
  void merge(const Histogram &other);

  const std::vector<double> &contents() const { return contents_; }
  const std::vector<double> &sumw2() const { return sumw2_; }
  double underflow() const { return underflow_; }
  double overflow() const { return overflow_; }
  double underflow_sumw2() const { return underflow_sumw2_; }
  double overflow_sumw2() const { return overflow_sumw2_; }
  std::uint64_t entries() const { return entries_; }

  /// Sum of weights over bins plus underflow and overflow.
  double total() const;

 private:
  HistogramSpec spec_;
  std::vector<double> contents_;
  std::vector<double> sumw2_;
  double underflow_ = 0.0;
  double overflow_ = 0.0;
  double underflow_sumw2_ = 0.0;
  double overflow_sumw2_ = 0.0;
  std::uint64_t entries_ = 0;
};

/// Errors: LengthMismatch.
Histogram fill_histogram(std::span<const double> values, std::span<const double> weights, const HistogramSpec &spec);

/// Fills from ntuple columns. Errors: UnknownColumn.
Histogram fill_histogram(const ColumnBatch &columns, const HistogramSpec &spec,
                         const std::string &weight_column = "weight");

}  // namespace skimflow

#endif  // SKIMFLOW_HISTOGRAM_HPP_
