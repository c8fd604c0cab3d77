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

#include "skimflow/schema.hpp"

#include <set>
#include <stdexcept>

#include <json.hpp>

#include "skimflow/error.hpp"

namespace skimflow {

using ordered_json = nlohmann::ordered_json;

std::string_view primitive_name(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::F64: return "f64";
    case PrimitiveKind::F32: return "f32";
    case PrimitiveKind::I64: return "i64";
    case PrimitiveKind::I32: return "i32";
    case PrimitiveKind::Bool: return "bool";
  }
  return "?";
}

std::optional<PrimitiveKind> parse_primitive(std::string_view name) {
  if (name == "f64") return PrimitiveKind::F64;
  if (name == "f32") return PrimitiveKind::F32;
  if (name == "i64") return PrimitiveKind::I64;
  if (name == "i32") return PrimitiveKind::I32;
  if (name == "bool") return PrimitiveKind::Bool;
  return std::nullopt;
}

std::size_t primitive_width(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::F64:
    case PrimitiveKind::I64:
      return 8;
    case PrimitiveKind::F32:
    case PrimitiveKind::I32:
      return 4;
    case PrimitiveKind::Bool:
      return 1;
  }
  return 0;
}

bool is_integral(PrimitiveKind kind) {
  return kind == PrimitiveKind::I64 || kind == PrimitiveKind::I32;
}

SchemaNode SchemaNode::primitive(PrimitiveKind kind) {
  SchemaNode node;
  node.kind_ = Kind::Primitive;
  node.primitive_ = kind;
  return node;
}

SchemaNode SchemaNode::array(SchemaNode element) {
  SchemaNode node;
  node.kind_ = Kind::Array;
  node.children_.push_back(std::move(element));
  return node;
}

SchemaNode SchemaNode::record(std::vector<std::pair<std::string, SchemaNode>> fields) {
  SchemaNode node;
  node.kind_ = Kind::Record;
  node.names_.reserve(fields.size());
  node.children_.reserve(fields.size());
  for (auto &[name, child] : fields) {
    node.names_.push_back(std::move(name));
    node.children_.push_back(std::move(child));
  }
  return node;
}

PrimitiveKind SchemaNode::primitive_kind() const {
  if (kind_ != Kind::Primitive) throw std::logic_error("schema node is not a primitive");
  return primitive_;
}

const SchemaNode &SchemaNode::element() const {
  if (kind_ != Kind::Array) throw std::logic_error("schema node is not an array");
  return children_.front();
}

const SchemaNode *SchemaNode::find(std::string_view name) const {
  if (kind_ != Kind::Record) return nullptr;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return &children_[i];
  }
  return nullptr;
}

std::size_t SchemaNode::depth() const {
  if (!is_record() && !is_array()) return 0;
  std::size_t deepest = 0;
  for (const auto &child : children_) deepest = std::max(deepest, child.depth());
  return deepest + 1;
}

namespace {

void validate_node(const SchemaNode &node, const std::string &where) {
  if (node.is_array()) {
    validate_node(node.element(), where + "[]");
    return;
  }
  if (!node.is_record()) return;
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < node.field_count(); ++i) {
    const auto &name = node.field_name(i);
    if (name.empty()) throw Error(Errc::InvalidSchema, "empty field name in " + where);
    if (!seen.insert(name).second) {
      throw Error(Errc::InvalidSchema, "duplicate field '" + name + "' in " + where);
    }
    validate_node(node.field(i), where.empty() ? name : where + "." + name);
  }
}

ordered_json node_to_json(const SchemaNode &node) {
  ordered_json j;
  switch (node.kind()) {
    case SchemaNode::Kind::Primitive:
      return ordered_json(std::string(primitive_name(node.primitive_kind())));
    case SchemaNode::Kind::Array:
      j["type"] = "array";
      j["items"] = node_to_json(node.element());
      return j;
    case SchemaNode::Kind::Record: {
      j["type"] = "record";
      auto fields = ordered_json::array();
      for (std::size_t i = 0; i < node.field_count(); ++i) {
        ordered_json f;
        f["name"] = node.field_name(i);
        f["type"] = node_to_json(node.field(i));
        fields.push_back(std::move(f));
      }
      j["fields"] = std::move(fields);
      return j;
    }
  }
  return j;
}

SchemaNode node_from_json(const ordered_json &j, std::size_t depth) {
  // Leaves sit one level below the deepest container.
  if (depth > Schema::kMaxDepth + 1) throw Error(Errc::InvalidSchema, "schema nesting too deep");
  if (j.is_string()) {
    auto kind = parse_primitive(j.get<std::string>());
    if (!kind) throw Error(Errc::InvalidSchema, "unknown primitive '" + j.get<std::string>() + "'");
    return SchemaNode::primitive(*kind);
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw Error(Errc::InvalidSchema, "schema node must be a primitive name or typed object");
  }
  const auto type = j["type"].get<std::string>();
  if (type == "array") {
    if (!j.contains("items")) throw Error(Errc::InvalidSchema, "array without items");
    return SchemaNode::array(node_from_json(j["items"], depth + 1));
  }
  if (type == "record") {
    if (!j.contains("fields") || !j["fields"].is_array()) {
      throw Error(Errc::InvalidSchema, "record without fields");
    }
    std::vector<std::pair<std::string, SchemaNode>> fields;
    for (const auto &f : j["fields"]) {
      if (!f.is_object() || !f.contains("name") || !f["name"].is_string() || !f.contains("type")) {
        throw Error(Errc::InvalidSchema, "malformed record field");
      }
      fields.emplace_back(f["name"].get<std::string>(), node_from_json(f["type"], depth + 1));
    }
    return SchemaNode::record(std::move(fields));
  }
  throw Error(Errc::InvalidSchema, "unknown node type '" + type + "'");
}

}  // namespace

Schema::Schema(SchemaNode root) : root_(std::move(root)) {
  if (!root_.is_record()) throw Error(Errc::InvalidSchema, "schema root must be a record");
  if (root_.depth() > kMaxDepth) throw Error(Errc::InvalidSchema, "schema nesting too deep");
  validate_node(root_, "");
}

const SchemaNode *Schema::resolve(std::string_view dot_path) const {
  const SchemaNode *node = &root_;
  std::size_t start = 0;
  while (true) {
    const auto dot = dot_path.find('.', start);
    const auto part = dot_path.substr(start, dot == std::string_view::npos ? dot_path.npos : dot - start);
    node = node->find(part);
    if (node == nullptr || dot == std::string_view::npos) return node;
    start = dot + 1;
  }
}

std::string Schema::to_json() const { return node_to_json(root_).dump(); }

Schema Schema::from_json(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw Error(Errc::InvalidSchema, std::string("schema JSON: ") + e.what());
  }
  return Schema(node_from_json(j, 1));
}

const Schema &event_schema() {
  static const Schema schema = [] {
    auto f64 = [] { return SchemaNode::primitive(PrimitiveKind::F64); };
    auto i64 = [] { return SchemaNode::primitive(PrimitiveKind::I64); };
    auto particles = [&] {
      return SchemaNode::array(SchemaNode::record({{"pt", f64()},
                                                   {"eta", f64()},
                                                   {"phi", f64()},
                                                   {"mass", f64()},
                                                   {"id", SchemaNode::primitive(PrimitiveKind::I32)}}));
    };
    return Schema(SchemaNode::record({
        {"run", i64()},
        {"lumi", i64()},
        {"event", i64()},
        {"genInfo", SchemaNode::record({{"weight", f64()}})},
        {"met", SchemaNode::record({{"pt", f64()}, {"phi", f64()}})},
        {"muons", particles()},
        {"electrons", particles()},
        {"taus", particles()},
        {"photons", particles()},
        {"jets", particles()},
    }));
  }();
  return schema;
}

}  // namespace skimflow
