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

#ifndef SKIMFLOW_SCHEMA_HPP_
#define SKIMFLOW_SCHEMA_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skimflow {

enum class PrimitiveKind { F64, F32, I64, I32, Bool };

std::string_view primitive_name(PrimitiveKind kind);
std::optional<PrimitiveKind> parse_primitive(std::string_view name);
std::size_t primitive_width(PrimitiveKind kind);
bool is_integral(PrimitiveKind kind);

/**
 * One node of a schema tree: a primitive leaf, an array of a single element
 * node, or a record with ordered named fields.
 */
class SchemaNode {
 public:
  enum class Kind { Primitive, Array, Record };

  static SchemaNode primitive(PrimitiveKind kind);
  static SchemaNode array(SchemaNode element);
  static SchemaNode record(std::vector<std::pair<std::string, SchemaNode>> fields);

  Kind kind() const { return kind_; }
  bool is_primitive() const { return kind_ == Kind::Primitive; }
  bool is_array() const { return kind_ == Kind::Array; }
  bool is_record() const { return kind_ == Kind::Record; }

  PrimitiveKind primitive_kind() const;
  const SchemaNode &element() const;

  std::size_t field_count() const { return names_.size(); }
  const std::string &field_name(std::size_t i) const { return names_.at(i); }
  const SchemaNode &field(std::size_t i) const { return children_.at(i); }
  /// nullptr when absent or when this node is not a record
  const SchemaNode *find(std::string_view name) const;

  std::size_t depth() const;

  friend bool operator==(const SchemaNode &, const SchemaNode &) = default;

 private:
  Kind kind_ = Kind::Primitive;
  PrimitiveKind primitive_ = PrimitiveKind::F64;
  std::vector<std::string> names_;
  std::vector<SchemaNode> children_;
};

/// A validated schema: the root is a record, names are unique per record and
/// the tree is at most kMaxDepth levels deep.
class Schema {
 public:
  static constexpr std::size_t kMaxDepth = 16;

  explicit Schema(SchemaNode root);

  const SchemaNode &root() const { return root_; }

  /// Walks a dot path ("met.pt"); nullptr if any component is missing.
  const SchemaNode *resolve(std::string_view dot_path) const;

  /// Canonical JSON: declaration-order keys, no insignificant whitespace.
  std::string to_json() const;
  static Schema from_json(std::string_view text);

  friend bool operator==(const Schema &, const Schema &) = default;

 private:
  SchemaNode root_;
};

/// Schema of the analysis event layout stored in every EVT file.
const Schema &event_schema();

}  // namespace skimflow

#endif  // SKIMFLOW_SCHEMA_HPP_
