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

#ifndef SKIMFLOW_SCALAR_HPP_
#define SKIMFLOW_SCALAR_HPP_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "skimflow/schema.hpp"

namespace skimflow {

/// A single flat ntuple cell.
class Scalar {
 public:
  Scalar() = default;
  static Scalar f64(double v) { return Scalar(PrimitiveKind::F64, v, 0, false); }
  static Scalar f32(float v) { return Scalar(PrimitiveKind::F32, v, 0, false); }
  static Scalar i64(std::int64_t v) { return Scalar(PrimitiveKind::I64, 0.0, v, false); }
  static Scalar i32(std::int32_t v) { return Scalar(PrimitiveKind::I32, 0.0, v, false); }
  static Scalar boolean(bool v) { return Scalar(PrimitiveKind::Bool, 0.0, 0, v); }

  PrimitiveKind kind() const { return kind_; }
  double as_double() const;
  std::int64_t as_int() const { return int_; }
  bool as_bool() const { return bool_; }
  float as_float() const { return static_cast<float>(float_); }

  friend bool operator==(const Scalar &, const Scalar &) = default;

 private:
  Scalar(PrimitiveKind k, double f, std::int64_t i, bool b) : kind_(k), float_(f), int_(i), bool_(b) {}

  PrimitiveKind kind_ = PrimitiveKind::F64;
  double float_ = 0.0;
  std::int64_t int_ = 0;
  bool bool_ = false;
};

using NtupleRow = std::vector<Scalar>;

struct ColumnSpec {
  std::string name;
  PrimitiveKind kind;

  friend bool operator==(const ColumnSpec &, const ColumnSpec &) = default;
};

using FlatSchema = std::vector<ColumnSpec>;

/// Contiguous storage for one column; bool is held as one byte per value.
using ColumnData = std::variant<std::vector<double>, std::vector<float>, std::vector<std::int64_t>,
                                std::vector<std::int32_t>, std::vector<std::uint8_t>>;

ColumnData make_column(PrimitiveKind kind);
std::size_t column_size(const ColumnData &col);
void append_scalar(ColumnData &col, const Scalar &value);
Scalar scalar_at(const ColumnData &col, std::size_t row);
/// Widening read used by histogramming.
double column_value(const ColumnData &col, std::size_t row);
void append_column(ColumnData &dst, const ColumnData &src);

/// Column-major batch of rows sharing a flat schema.
struct ColumnBatch {
  FlatSchema schema;
  std::vector<ColumnData> columns;

  explicit ColumnBatch(FlatSchema s = {});
  std::size_t rows() const { return columns.empty() ? 0 : column_size(columns.front()); }
  void append_row(const NtupleRow &row);
  NtupleRow row(std::size_t i) const;
  /// Throws UnknownColumn.
  const ColumnData &column(std::string_view name) const;
};

}  // namespace skimflow

#endif  // SKIMFLOW_SCALAR_HPP_
