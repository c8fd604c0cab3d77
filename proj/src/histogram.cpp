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

#include "skimflow/histogram.hpp"

#include <algorithm>
#include <cmath>

#include "skimflow/error.hpp"

namespace skimflow {

void HistogramSpec::validate() const {
  if (nbins < 1) throw Error(Errc::ConfigError, "histogram '" + variable + "' needs nbins >= 1");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw Error(Errc::ConfigError, "histogram '" + variable + "' needs finite lo < hi");
  }
}

double HistogramSpec::edge(std::uint32_t i) const {
  if (i >= nbins) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nbins);
}

std::int64_t HistogramSpec::locate(double v) const {
  if (v < lo) return -1;
  if (!(v < hi)) return nbins;  // v >= hi or NaN
  const double scaled = (v - lo) / (hi - lo) * static_cast<double>(nbins);
  auto idx = static_cast<std::int64_t>(std::floor(scaled));
  idx = std::clamp<std::int64_t>(idx, 0, static_cast<std::int64_t>(nbins) - 1);
  // The edges are authoritative; nudge across an edge the division rounded over.
  while (idx > 0 && v < edge(static_cast<std::uint32_t>(idx))) --idx;
  while (idx + 1 < static_cast<std::int64_t>(nbins) && v >= edge(static_cast<std::uint32_t>(idx + 1))) ++idx;
  return idx;
}

Histogram::Histogram(HistogramSpec spec)
    : spec_(std::move(spec)), contents_(spec_.nbins, 0.0), sumw2_(spec_.nbins, 0.0) {
  spec_.validate();
}

void Histogram::fill(double value, double weight) {
  const std::int64_t idx = spec_.locate(value);
  const double w2 = weight * weight;
  if (idx < 0) {
    underflow_ += weight;
    underflow_sumw2_ += w2;
  } else if (idx >= static_cast<std::int64_t>(spec_.nbins)) {
    overflow_ += weight;
    overflow_sumw2_ += w2;
  } else {
    contents_[static_cast<std::size_t>(idx)] += weight;
    sumw2_[static_cast<std::size_t>(idx)] += w2;
  }
  ++entries_;
}

void Histogram::merge(const Histogram &other) {
  if (!(other.spec_ == spec_)) {
    throw Error(Errc::SpecMismatch, "cannot merge histograms of '" + spec_.variable + "' with different binning");
  }
  for (std::size_t i = 0; i < contents_.size(); ++i) {
    contents_[i] += other.contents_[i];
    sumw2_[i] += other.sumw2_[i];
  }
  underflow_ += other.underflow_;
  overflow_ += other.overflow_;
  underflow_sumw2_ += other.underflow_sumw2_;
  overflow_sumw2_ += other.overflow_sumw2_;
  entries_ += other.entries_;
}

double Histogram::total() const {
  double t = underflow_ + overflow_;
  for (const double c : contents_) t += c;
  return t;
}

Histogram fill_histogram(std::span<const double> values, std::span<const double> weights, const HistogramSpec &spec) {
  if (values.size() != weights.size()) {
    throw Error(Errc::LengthMismatch, "histogram '" + spec.variable + "': " + std::to_string(values.size()) +
                                          " values but " + std::to_string(weights.size()) + " weights");
  }
  Histogram h(spec);
  for (std::size_t i = 0; i < values.size(); ++i) h.fill(values[i], weights[i]);
  return h;
}

Histogram fill_histogram(const ColumnBatch &columns, const HistogramSpec &spec, const std::string &weight_column) {
  const ColumnData &values = columns.column(spec.variable);
  const ColumnData &weights = columns.column(weight_column);
  const std::size_t n = column_size(values);
  if (column_size(weights) != n) {
    throw Error(Errc::LengthMismatch, "histogram '" + spec.variable + "': column lengths differ");
  }
  Histogram h(spec);
  for (std::size_t i = 0; i < n; ++i) h.fill(column_value(values, i), column_value(weights, i));
  return h;
}

}  // namespace skimflow
