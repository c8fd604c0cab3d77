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

#include "skimflow/scalar.hpp"

#include "skimflow/error.hpp"

namespace skimflow {

double Scalar::as_double() const {
  switch (kind_) {
    case PrimitiveKind::F64:
    case PrimitiveKind::F32:
      return float_;
    case PrimitiveKind::I64:
    case PrimitiveKind::I32:
      return static_cast<double>(int_);
    case PrimitiveKind::Bool:
      return bool_ ? 1.0 : 0.0;
  }
  return 0.0;
}

ColumnData make_column(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::F64: return std::vector<double>{};
    case PrimitiveKind::F32: return std::vector<float>{};
    case PrimitiveKind::I64: return std::vector<std::int64_t>{};
    case PrimitiveKind::I32: return std::vector<std::int32_t>{};
    case PrimitiveKind::Bool: return std::vector<std::uint8_t>{};
  }
  return std::vector<double>{};
}

std::size_t column_size(const ColumnData &col) {
  return std::visit([](const auto &v) { return v.size(); }, col);
}

void append_scalar(ColumnData &col, const Scalar &value) {
  switch (col.index()) {
    case 0: std::get<0>(col).push_back(value.as_double()); break;
    case 1: std::get<1>(col).push_back(static_cast<float>(value.as_double())); break;
    case 2: std::get<2>(col).push_back(value.kind() == PrimitiveKind::I64 || value.kind() == PrimitiveKind::I32
                                           ? value.as_int()
                                           : static_cast<std::int64_t>(value.as_double()));
      break;
    case 3: std::get<3>(col).push_back(value.kind() == PrimitiveKind::I64 || value.kind() == PrimitiveKind::I32
                                           ? static_cast<std::int32_t>(value.as_int())
                                           : static_cast<std::int32_t>(value.as_double()));
      break;
    case 4: std::get<4>(col).push_back(value.as_double() != 0.0 ? 1 : 0); break;
  }
}

Scalar scalar_at(const ColumnData &col, std::size_t row) {
  switch (col.index()) {
    case 0: return Scalar::f64(std::get<0>(col)[row]);
    case 1: return Scalar::f32(std::get<1>(col)[row]);
    case 2: return Scalar::i64(std::get<2>(col)[row]);
    case 3: return Scalar::i32(std::get<3>(col)[row]);
    default: return Scalar::boolean(std::get<4>(col)[row] != 0);
  }
}

double column_value(const ColumnData &col, std::size_t row) {
  return std::visit([row](const auto &v) { return static_cast<double>(v[row]); }, col);
}

void append_column(ColumnData &dst, const ColumnData &src) {
  std::visit(
      [&src](auto &d) {
        const auto &s = std::get<std::remove_reference_t<decltype(d)>>(src);
        d.insert(d.end(), s.begin(), s.end());
      },
      dst);
}

ColumnBatch::ColumnBatch(FlatSchema s) : schema(std::move(s)) {
  columns.reserve(schema.size());
  for (const auto &c : schema) columns.push_back(make_column(c.kind));
}

void ColumnBatch::append_row(const NtupleRow &row) {
  if (row.size() != columns.size()) {
    throw Error(Errc::ArityMismatch, "row has " + std::to_string(row.size()) + " values, schema has " +
                                         std::to_string(columns.size()) + " columns");
  }
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i].kind() != schema[i].kind) {
      throw Error(Errc::ArityMismatch, "column '" + schema[i].name + "' expects " +
                                           std::string(primitive_name(schema[i].kind)));
    }
  }
  for (std::size_t i = 0; i < row.size(); ++i) append_scalar(columns[i], row[i]);
}

NtupleRow ColumnBatch::row(std::size_t i) const {
  NtupleRow out;
  out.reserve(columns.size());
  for (const auto &c : columns) out.push_back(scalar_at(c, i));
  return out;
}

const ColumnData &ColumnBatch::column(std::string_view name) const {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name == name) return columns[i];
  }
  throw Error(Errc::UnknownColumn, "no column '" + std::string(name) + "'");
}

}  // namespace skimflow
