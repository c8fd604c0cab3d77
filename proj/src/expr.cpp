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

#include "skimflow/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "skimflow/error.hpp"

namespace skimflow {

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

namespace {

using Node = Expr::Node;

std::shared_ptr<Node> make(Node::Kind kind) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  return n;
}

}  // namespace

Expr Expr::field(std::string path) {
  auto n = make(Node::Kind::Field);
  n->path = std::move(path);
  return Expr(n);
}

Expr Expr::constant(double value) {
  auto n = make(Node::Kind::Const);
  n->const_kind = Node::ConstKind::Float;
  n->float_value = value;
  return Expr(n);
}

Expr Expr::constant(std::int64_t value) {
  auto n = make(Node::Kind::Const);
  n->const_kind = Node::ConstKind::Int;
  n->int_value = value;
  return Expr(n);
}

Expr Expr::constant(bool value) {
  auto n = make(Node::Kind::Const);
  n->const_kind = Node::ConstKind::Bool;
  n->bool_value = value;
  return Expr(n);
}

Expr Expr::compare(CompareOp op, Expr lhs, Expr rhs) {
  auto n = make(Node::Kind::Compare);
  n->compare_op = op;
  n->operands = {std::move(lhs), std::move(rhs)};
  return Expr(n);
}

Expr Expr::arith(ArithOp op, Expr lhs, Expr rhs) {
  auto n = make(Node::Kind::Arith);
  n->arith_op = op;
  n->operands = {std::move(lhs), std::move(rhs)};
  return Expr(n);
}

Expr Expr::negate(Expr operand) {
  auto n = make(Node::Kind::Negate);
  n->operands = {std::move(operand)};
  return Expr(n);
}

Expr Expr::logical_and(Expr lhs, Expr rhs) {
  auto n = make(Node::Kind::And);
  n->operands = {std::move(lhs), std::move(rhs)};
  return Expr(n);
}

Expr Expr::logical_or(Expr lhs, Expr rhs) {
  auto n = make(Node::Kind::Or);
  n->operands = {std::move(lhs), std::move(rhs)};
  return Expr(n);
}

Expr Expr::logical_not(Expr operand) {
  auto n = make(Node::Kind::Not);
  n->operands = {std::move(operand)};
  return Expr(n);
}

Expr Expr::size(std::string collection) {
  auto n = make(Node::Kind::Size);
  n->path = std::move(collection);
  return Expr(n);
}

Expr Expr::count(std::string collection, Expr predicate) {
  auto n = make(Node::Kind::Count);
  n->path = std::move(collection);
  n->operands = {std::move(predicate)};
  return Expr(n);
}

Expr Expr::reduce(ReduceOp op, std::string collection, std::string element_field) {
  auto n = make(Node::Kind::Reduce);
  n->reduce_op = op;
  n->path = std::move(collection);
  n->element_field = std::move(element_field);
  return Expr(n);
}

namespace {

std::string_view compare_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::Less: return "<";
    case CompareOp::LessEqual: return "<=";
    case CompareOp::Greater: return ">";
    case CompareOp::GreaterEqual: return ">=";
    case CompareOp::Equal: return "==";
    case CompareOp::NotEqual: return "!=";
  }
  return "?";
}

std::string_view arith_symbol(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
  }
  return "?";
}

std::string_view reduce_name(ReduceOp op) {
  switch (op) {
    case ReduceOp::Max: return "max";
    case ReduceOp::Min: return "min";
    case ReduceOp::Sum: return "sum";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string node_to_string(const Node &n) {
  switch (n.kind) {
    case Node::Kind::Field: return n.path;
    case Node::Kind::Const:
      switch (n.const_kind) {
        case Node::ConstKind::Bool: return n.bool_value ? "true" : "false";
        case Node::ConstKind::Int: return std::to_string(n.int_value);
        case Node::ConstKind::Float: return format_double(n.float_value);
      }
      break;
    case Node::Kind::Compare:
      return "(" + n.operands[0].to_string() + " " + std::string(compare_symbol(n.compare_op)) + " " +
             n.operands[1].to_string() + ")";
    case Node::Kind::Arith:
      return "(" + n.operands[0].to_string() + " " + std::string(arith_symbol(n.arith_op)) + " " +
             n.operands[1].to_string() + ")";
    case Node::Kind::Negate: return "(-" + n.operands[0].to_string() + ")";
    case Node::Kind::And:
      return "(" + n.operands[0].to_string() + " and " + n.operands[1].to_string() + ")";
    case Node::Kind::Or:
      return "(" + n.operands[0].to_string() + " or " + n.operands[1].to_string() + ")";
    case Node::Kind::Not: return "(not " + n.operands[0].to_string() + ")";
    case Node::Kind::Size: return "size(" + n.path + ")";
    case Node::Kind::Count: return "count(" + n.path + ", " + n.operands[0].to_string() + ")";
    case Node::Kind::Reduce:
      return std::string(reduce_name(n.reduce_op)) + "(" + n.path + ", it." + n.element_field + ")";
  }
  return "?";
}

}  // namespace

std::string Expr::to_string() const { return node_to_string(*root_); }

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Token {
  enum class Kind { Ident, Int, Float, Symbol, End };
  Kind kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < src.size() && is_ident(src[i])) ++i;
      out.push_back({Token::Kind::Ident, std::string(src.substr(start, i - start)), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      bool is_float = false;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (i < src.size() && src[i] == '.') {
        is_float = true;
        ++i;
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
          is_float = true;
          i = j;
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
        }
      }
      out.push_back({is_float ? Token::Kind::Float : Token::Kind::Int,
                     std::string(src.substr(start, i - start)), start});
      continue;
    }
    static constexpr std::string_view two_char[] = {"<=", ">=", "==", "!="};
    bool matched = false;
    for (auto sym : two_char) {
      if (src.substr(i, 2) == sym) {
        out.push_back({Token::Kind::Symbol, std::string(sym), start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("<>+-*/(),.").find(c) != std::string_view::npos) {
      out.push_back({Token::Kind::Symbol, std::string(1, c), start});
      ++i;
      continue;
    }
    throw Error(Errc::ParseError, "unexpected character '" + std::string(1, c) + "' at offset " +
                                      std::to_string(start));
  }
  out.push_back({Token::Kind::End, "", src.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

  Expr parse() {
    Expr e = parse_or();
    if (peek().kind != Token::Kind::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token &peek() const { return tokens_[pos_]; }
  const Token &next() { return tokens_[pos_++]; }

  bool accept_symbol(std::string_view sym) {
    if (peek().kind == Token::Kind::Symbol && peek().text == sym) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool accept_keyword(std::string_view kw) {
    if (peek().kind == Token::Kind::Ident && peek().text == kw) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect_symbol(std::string_view sym) {
    if (!accept_symbol(sym)) fail("expected '" + std::string(sym) + "'");
  }

  [[noreturn]] void fail(const std::string &what) const {
    throw Error(Errc::ParseError, what + " at offset " + std::to_string(peek().pos));
  }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (accept_keyword("or")) lhs = Expr::logical_or(lhs, parse_and());
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_not();
    while (accept_keyword("and")) lhs = Expr::logical_and(lhs, parse_not());
    return lhs;
  }

  Expr parse_not() {
    if (accept_keyword("not")) return Expr::logical_not(parse_not());
    return parse_compare();
  }

  Expr parse_compare() {
    Expr lhs = parse_sum();
    static constexpr std::pair<std::string_view, CompareOp> ops[] = {
        {"<=", CompareOp::LessEqual}, {">=", CompareOp::GreaterEqual}, {"==", CompareOp::Equal},
        {"!=", CompareOp::NotEqual},  {"<", CompareOp::Less},          {">", CompareOp::Greater}};
    for (const auto &[sym, op] : ops) {
      if (accept_symbol(sym)) return Expr::compare(op, lhs, parse_sum());
    }
    return lhs;
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    while (true) {
      if (accept_symbol("+")) {
        lhs = Expr::arith(ArithOp::Add, lhs, parse_product());
      } else if (accept_symbol("-")) {
        lhs = Expr::arith(ArithOp::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    while (true) {
      if (accept_symbol("*")) {
        lhs = Expr::arith(ArithOp::Mul, lhs, parse_unary());
      } else if (accept_symbol("/")) {
        lhs = Expr::arith(ArithOp::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept_symbol("-")) return Expr::negate(parse_unary());
    return parse_primary();
  }

  std::string parse_path() {
    if (peek().kind != Token::Kind::Ident) fail("expected a field path");
    std::string path = next().text;
    while (accept_symbol(".")) {
      if (peek().kind != Token::Kind::Ident) fail("expected a name after '.'");
      path += ".";
      path += next().text;
    }
    return path;
  }

  bool at_call() const {
    return peek().kind == Token::Kind::Ident && tokens_[pos_ + 1].kind == Token::Kind::Symbol &&
           tokens_[pos_ + 1].text == "(";
  }

  Expr parse_primary() {
    const Token &tok = peek();
    if (tok.kind == Token::Kind::Int) {
      ++pos_;
      std::int64_t v = 0;
      auto res = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
      if (res.ec != std::errc{}) fail("integer literal out of range");
      return Expr::constant(v);
    }
    if (tok.kind == Token::Kind::Float) {
      ++pos_;
      double v = 0.0;
      auto res = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
      if (res.ec != std::errc{}) fail("bad number literal");
      return Expr::constant(v);
    }
    if (accept_symbol("(")) {
      Expr inner = parse_or();
      expect_symbol(")");
      return inner;
    }
    if (tok.kind == Token::Kind::End) fail("unexpected end of expression");
    if (tok.kind != Token::Kind::Ident) fail("unexpected '" + tok.text + "'");
    if (tok.text == "true" || tok.text == "false") {
      ++pos_;
      return Expr::constant(tok.text == "true");
    }
    if (at_call()) {
      const std::string fn = next().text;
      expect_symbol("(");
      if (fn == "size") {
        std::string coll = parse_path();
        expect_symbol(")");
        return Expr::size(std::move(coll));
      }
      if (fn == "count") {
        std::string coll = parse_path();
        expect_symbol(",");
        Expr pred = parse_or();
        expect_symbol(")");
        return Expr::count(std::move(coll), std::move(pred));
      }
      if (fn == "max" || fn == "min" || fn == "sum") {
        std::string coll = parse_path();
        expect_symbol(",");
        std::string elem = parse_path();
        if (elem.rfind("it.", 0) != 0) fail("reduction field must be written as it.<field>");
        expect_symbol(")");
        const ReduceOp op = fn == "max" ? ReduceOp::Max : fn == "min" ? ReduceOp::Min : ReduceOp::Sum;
        return Expr::reduce(op, std::move(coll), elem.substr(3));
      }
      fail("unknown function '" + fn + "'");
    }
    return Expr::field(parse_path());
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr Expr::parse(std::string_view text) { return Parser(text).parse(); }

std::string_view value_type_name(ValueType t) {
  switch (t) {
    case ValueType::Bool: return "bool";
    case ValueType::Int: return "int";
    case ValueType::Float: return "float";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Compiled form
// ---------------------------------------------------------------------------

namespace {

enum class Op {
  EventField,
  ElementField,
  ConstBool,
  ConstInt,
  ConstFloat,
  Compare,
  Arith,
  Negate,
  And,
  Or,
  Not,
  Size,
  Count,
  Reduce,
};

enum class EventAccessor { Run, Lumi, EventNumber, GenWeight, MetPt, MetPhi };
enum class ParticleAccessor { Pt, Eta, Phi, Mass, Id };

struct Instr {
  Op op;
  ValueType type;
  int lhs = -1;
  int rhs = -1;
  double float_value = 0.0;
  std::int64_t int_value = 0;
  bool bool_value = false;
  CompareOp compare_op = CompareOp::Equal;
  ArithOp arith_op = ArithOp::Add;
  ReduceOp reduce_op = ReduceOp::Sum;
  EventAccessor event_field = EventAccessor::Run;
  ParticleAccessor particle_field = ParticleAccessor::Pt;
  Collection collection = Collection::Jets;
};

}  // namespace

struct TypedExpr::Program {
  std::vector<Instr> code;
  int root = -1;
};

namespace {

using Program = TypedExpr::Program;

std::optional<EventAccessor> bind_event_field(std::string_view path) {
  if (path == "run") return EventAccessor::Run;
  if (path == "lumi") return EventAccessor::Lumi;
  if (path == "event") return EventAccessor::EventNumber;
  if (path == "genInfo.weight") return EventAccessor::GenWeight;
  if (path == "met.pt") return EventAccessor::MetPt;
  if (path == "met.phi") return EventAccessor::MetPhi;
  return std::nullopt;
}

std::optional<ParticleAccessor> bind_particle_field(std::string_view name) {
  if (name == "pt") return ParticleAccessor::Pt;
  if (name == "eta") return ParticleAccessor::Eta;
  if (name == "phi") return ParticleAccessor::Phi;
  if (name == "mass") return ParticleAccessor::Mass;
  if (name == "id") return ParticleAccessor::Id;
  return std::nullopt;
}

ValueType primitive_value_type(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Bool: return ValueType::Bool;
    case PrimitiveKind::I64:
    case PrimitiveKind::I32: return ValueType::Int;
    default: return ValueType::Float;
  }
}

bool is_numeric(ValueType t) { return t != ValueType::Bool; }

class Compiler {
 public:
  explicit Compiler(const Schema &schema) : schema_(schema) {}

  Program compile(const Expr &expr) {
    program_.root = emit(expr.root(), nullptr);
    return std::move(program_);
  }

 private:
  int push(Instr ins) {
    program_.code.push_back(ins);
    return static_cast<int>(program_.code.size()) - 1;
  }

  ValueType type_of(int idx) const { return program_.code[idx].type; }

  // Resolves a collection path in event scope; returns the element record.
  const SchemaNode &resolve_collection(const std::string &path, Collection &out) {
    if (path == "it" || path.rfind("it.", 0) == 0) {
      throw Error(Errc::UnknownField, "'" + path + "' is not a collection of the event");
    }
    const SchemaNode *node = schema_.resolve(path);
    if (node == nullptr) throw Error(Errc::UnknownField, "no field '" + path + "' in schema");
    if (!node->is_array() || !node->element().is_record()) {
      throw Error(Errc::TypeMismatch, "'" + path + "' is not a collection of records");
    }
    auto coll = parse_collection(path);
    if (!coll) throw Error(Errc::UnknownField, "collection '" + path + "' is not part of the event layout");
    out = *coll;
    return node->element();
  }

  int emit_field(const std::string &path, const SchemaNode *element) {
    Instr ins{};
    if (path == "it" || path.rfind("it.", 0) == 0) {
      if (element == nullptr) {
        throw Error(Errc::UnknownField, "'" + path + "' used outside of count/max/min/sum");
      }
      if (path == "it") throw Error(Errc::TypeMismatch, "'it' is a record, not a scalar");
      const std::string name = path.substr(3);
      const SchemaNode *node = element->find(name);
      if (node == nullptr) throw Error(Errc::UnknownField, "no element field '" + name + "'");
      if (!node->is_primitive()) throw Error(Errc::TypeMismatch, "'" + path + "' is not a scalar");
      auto acc = bind_particle_field(name);
      if (!acc) throw Error(Errc::UnknownField, "element field '" + name + "' is not part of the event layout");
      ins.op = Op::ElementField;
      ins.type = primitive_value_type(node->primitive_kind());
      ins.particle_field = *acc;
      return push(ins);
    }
    const SchemaNode *node = schema_.resolve(path);
    if (node == nullptr) throw Error(Errc::UnknownField, "no field '" + path + "' in schema");
    if (!node->is_primitive()) throw Error(Errc::TypeMismatch, "'" + path + "' is not a scalar");
    auto acc = bind_event_field(path);
    if (!acc) throw Error(Errc::UnknownField, "field '" + path + "' is not part of the event layout");
    ins.op = Op::EventField;
    ins.type = primitive_value_type(node->primitive_kind());
    ins.event_field = *acc;
    return push(ins);
  }

  int emit(const Expr::Node &n, const SchemaNode *element) {
    using K = Expr::Node::Kind;
    Instr ins{};
    switch (n.kind) {
      case K::Field:
        return emit_field(n.path, element);
      case K::Const:
        switch (n.const_kind) {
          case Expr::Node::ConstKind::Bool:
            ins.op = Op::ConstBool;
            ins.type = ValueType::Bool;
            ins.bool_value = n.bool_value;
            break;
          case Expr::Node::ConstKind::Int:
            ins.op = Op::ConstInt;
            ins.type = ValueType::Int;
            ins.int_value = n.int_value;
            break;
          case Expr::Node::ConstKind::Float:
            ins.op = Op::ConstFloat;
            ins.type = ValueType::Float;
            ins.float_value = n.float_value;
            break;
        }
        return push(ins);
      case K::Compare: {
        ins.lhs = emit(n.operands[0].root(), element);
        ins.rhs = emit(n.operands[1].root(), element);
        if (!is_numeric(type_of(ins.lhs)) || !is_numeric(type_of(ins.rhs))) {
          throw Error(Errc::TypeMismatch, "comparison needs numeric operands in " + quoted(n));
        }
        ins.op = Op::Compare;
        ins.type = ValueType::Bool;
        ins.compare_op = n.compare_op;
        return push(ins);
      }
      case K::Arith: {
        ins.lhs = emit(n.operands[0].root(), element);
        ins.rhs = emit(n.operands[1].root(), element);
        if (!is_numeric(type_of(ins.lhs)) || !is_numeric(type_of(ins.rhs))) {
          throw Error(Errc::TypeMismatch, "arithmetic needs numeric operands in " + quoted(n));
        }
        ins.op = Op::Arith;
        ins.arith_op = n.arith_op;
        const bool both_int = type_of(ins.lhs) == ValueType::Int && type_of(ins.rhs) == ValueType::Int;
        ins.type = both_int && n.arith_op != ArithOp::Div ? ValueType::Int : ValueType::Float;
        return push(ins);
      }
      case K::Negate: {
        ins.lhs = emit(n.operands[0].root(), element);
        if (!is_numeric(type_of(ins.lhs))) {
          throw Error(Errc::TypeMismatch, "negation needs a numeric operand in " + quoted(n));
        }
        ins.op = Op::Negate;
        ins.type = type_of(ins.lhs);
        return push(ins);
      }
      case K::And:
      case K::Or: {
        ins.lhs = emit(n.operands[0].root(), element);
        ins.rhs = emit(n.operands[1].root(), element);
        if (type_of(ins.lhs) != ValueType::Bool || type_of(ins.rhs) != ValueType::Bool) {
          throw Error(Errc::TypeMismatch, "and/or need boolean operands in " + quoted(n));
        }
        ins.op = n.kind == K::And ? Op::And : Op::Or;
        ins.type = ValueType::Bool;
        return push(ins);
      }
      case K::Not: {
        ins.lhs = emit(n.operands[0].root(), element);
        if (type_of(ins.lhs) != ValueType::Bool) {
          throw Error(Errc::TypeMismatch, "not needs a boolean operand in " + quoted(n));
        }
        ins.op = Op::Not;
        ins.type = ValueType::Bool;
        return push(ins);
      }
      case K::Size: {
        if (n.path == "it" || n.path.rfind("it.", 0) == 0) {
          throw Error(Errc::UnknownField, "'" + n.path + "' is not a collection of the event");
        }
        const SchemaNode *node = schema_.resolve(n.path);
        if (node == nullptr) throw Error(Errc::UnknownField, "no field '" + n.path + "' in schema");
        if (!node->is_array()) throw Error(Errc::TypeMismatch, "'" + n.path + "' is not a collection");
        auto coll = parse_collection(n.path);
        if (!coll) throw Error(Errc::UnknownField, "collection '" + n.path + "' is not part of the event layout");
        ins.op = Op::Size;
        ins.type = ValueType::Int;
        ins.collection = *coll;
        return push(ins);
      }
      case K::Count: {
        const SchemaNode &elem = resolve_collection(n.path, ins.collection);
        ins.lhs = emit(n.operands[0].root(), &elem);
        if (type_of(ins.lhs) != ValueType::Bool) {
          throw Error(Errc::TypeMismatch, "count predicate must be boolean in " + quoted(n));
        }
        ins.op = Op::Count;
        ins.type = ValueType::Int;
        return push(ins);
      }
      case K::Reduce: {
        const SchemaNode &elem = resolve_collection(n.path, ins.collection);
        const SchemaNode *field = elem.find(n.element_field);
        if (field == nullptr) throw Error(Errc::UnknownField, "no element field '" + n.element_field + "'");
        if (!field->is_primitive() || field->primitive_kind() == PrimitiveKind::Bool) {
          throw Error(Errc::TypeMismatch, "cannot reduce over '" + n.element_field + "'");
        }
        auto acc = bind_particle_field(n.element_field);
        if (!acc) {
          throw Error(Errc::UnknownField, "element field '" + n.element_field + "' is not part of the event layout");
        }
        ins.op = Op::Reduce;
        ins.type = primitive_value_type(field->primitive_kind());
        ins.reduce_op = n.reduce_op;
        ins.particle_field = *acc;
        return push(ins);
      }
    }
    throw Error(Errc::TypeMismatch, "unsupported expression node");
  }

  static std::string quoted(const Expr::Node &n) { return "'" + node_to_string(n) + "'"; }

  const Schema &schema_;
  Program program_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

double particle_value(const Particle &p, ParticleAccessor f) {
  switch (f) {
    case ParticleAccessor::Pt: return p.pt;
    case ParticleAccessor::Eta: return p.eta;
    case ParticleAccessor::Phi: return p.phi;
    case ParticleAccessor::Mass: return p.mass;
    case ParticleAccessor::Id: return p.id;
  }
  return 0.0;
}

class Evaluator {
 public:
  Evaluator(const Program &program, const Event &event) : code_(program.code), event_(event) {}

  bool boolean(int i, const Particle *elem) const {
    const Instr &ins = code_[i];
    switch (ins.op) {
      case Op::ConstBool: return ins.bool_value;
      case Op::And: return boolean(ins.lhs, elem) && boolean(ins.rhs, elem);
      case Op::Or: return boolean(ins.lhs, elem) || boolean(ins.rhs, elem);
      case Op::Not: return !boolean(ins.lhs, elem);
      case Op::Compare: {
        const double l = number(ins.lhs, elem);
        const double r = number(ins.rhs, elem);
        if (std::isnan(l) || std::isnan(r)) return false;
        switch (ins.compare_op) {
          case CompareOp::Less: return l < r;
          case CompareOp::LessEqual: return l <= r;
          case CompareOp::Greater: return l > r;
          case CompareOp::GreaterEqual: return l >= r;
          case CompareOp::Equal: return l == r;
          case CompareOp::NotEqual: return l != r;
        }
        return false;
      }
      default: return false;
    }
  }

  double number(int i, const Particle *elem) const {
    const Instr &ins = code_[i];
    if (ins.type == ValueType::Int) return static_cast<double>(integer(i, elem));
    switch (ins.op) {
      case Op::EventField:
        switch (ins.event_field) {
          case EventAccessor::GenWeight: return event_.gen_weight;
          case EventAccessor::MetPt: return event_.met_pt;
          case EventAccessor::MetPhi: return event_.met_phi;
          default: return static_cast<double>(integer(i, elem));
        }
      case Op::ElementField: return particle_value(*elem, ins.particle_field);
      case Op::ConstFloat: return ins.float_value;
      case Op::Negate: return -number(ins.lhs, elem);
      case Op::Arith: {
        const double l = number(ins.lhs, elem);
        const double r = number(ins.rhs, elem);
        switch (ins.arith_op) {
          case ArithOp::Add: return l + r;
          case ArithOp::Sub: return l - r;
          case ArithOp::Mul: return l * r;
          case ArithOp::Div: return l / r;
        }
        return 0.0;
      }
      case Op::Reduce: {
        const auto &coll = event_[ins.collection];
        if (coll.empty()) return 0.0;
        double acc = ins.reduce_op == ReduceOp::Sum ? 0.0 : particle_value(coll.front(), ins.particle_field);
        for (const auto &p : coll) {
          const double v = particle_value(p, ins.particle_field);
          switch (ins.reduce_op) {
            case ReduceOp::Sum: acc += v; break;
            case ReduceOp::Max: acc = std::max(acc, v); break;
            case ReduceOp::Min: acc = std::min(acc, v); break;
          }
        }
        return acc;
      }
      default: return 0.0;
    }
  }

  std::int64_t integer(int i, const Particle *elem) const {
    const Instr &ins = code_[i];
    switch (ins.op) {
      case Op::EventField:
        switch (ins.event_field) {
          case EventAccessor::Run: return event_.run;
          case EventAccessor::Lumi: return event_.lumi;
          case EventAccessor::EventNumber: return event_.event;
          default: return 0;
        }
      case Op::ElementField: return elem->id;
      case Op::ConstInt: return ins.int_value;
      case Op::Negate: return wrap_sub(0, integer(ins.lhs, elem));
      case Op::Arith: {
        const std::int64_t l = integer(ins.lhs, elem);
        const std::int64_t r = integer(ins.rhs, elem);
        switch (ins.arith_op) {
          case ArithOp::Add: return wrap_add(l, r);
          case ArithOp::Sub: return wrap_sub(l, r);
          case ArithOp::Mul: return wrap_mul(l, r);
          case ArithOp::Div: return 0;  // Div is always Float-typed
        }
        return 0;
      }
      case Op::Size: return static_cast<std::int64_t>(event_[ins.collection].size());
      case Op::Count: {
        std::int64_t n = 0;
        for (const auto &p : event_[ins.collection]) n += boolean(ins.lhs, &p) ? 1 : 0;
        return n;
      }
      case Op::Reduce: {
        const auto &coll = event_[ins.collection];
        if (coll.empty()) return 0;
        std::int64_t acc = ins.reduce_op == ReduceOp::Sum ? 0 : coll.front().id;
        for (const auto &p : coll) {
          switch (ins.reduce_op) {
            case ReduceOp::Sum: acc = wrap_add(acc, p.id); break;
            case ReduceOp::Max: acc = std::max<std::int64_t>(acc, p.id); break;
            case ReduceOp::Min: acc = std::min<std::int64_t>(acc, p.id); break;
          }
        }
        return acc;
      }
      default: return 0;
    }
  }

 private:
  const std::vector<Instr> &code_;
  const Event &event_;
};

}  // namespace

ValueType TypedExpr::type() const { return program_->code[program_->root].type; }

bool TypedExpr::eval_bool(const Event &event) const {
  return Evaluator(*program_, event).boolean(program_->root, nullptr);
}

double TypedExpr::eval_double(const Event &event) const {
  return Evaluator(*program_, event).number(program_->root, nullptr);
}

Scalar TypedExpr::eval_scalar(const Event &event) const {
  Evaluator ev(*program_, event);
  switch (type()) {
    case ValueType::Int: return Scalar::i64(ev.integer(program_->root, nullptr));
    case ValueType::Float: return Scalar::f64(ev.number(program_->root, nullptr));
    case ValueType::Bool: return Scalar::boolean(ev.boolean(program_->root, nullptr));
  }
  return {};
}

TypedExpr typecheck(const Expr &expr, const Schema &schema) {
  return TypedExpr(std::make_shared<const Program>(Compiler(schema).compile(expr)));
}

TypedExpr typecheck_cut(const Expr &expr, const Schema &schema) {
  TypedExpr typed = typecheck(expr, schema);
  if (typed.type() != ValueType::Bool) {
    throw Error(Errc::TypeMismatch, "selection must be boolean, got " +
                                        std::string(value_type_name(typed.type())) + " in '" +
                                        expr.to_string() + "'");
  }
  return typed;
}

bool eval_cut(const TypedExpr &cut, const Event &event) { return cut.eval_bool(event); }

TypedProjection typecheck(const Projection &projection, const Schema &schema) {
  TypedProjection out;
  std::set<std::string_view> names;
  for (const auto &col : projection) {
    if (col.name.empty()) throw Error(Errc::NonScalarProjection, "projection column without a name");
    if (!names.insert(col.name).second) {
      throw Error(Errc::NameCollision, "duplicate projection column '" + col.name + "'");
    }
    const auto &root = col.expr.root();
    if (root.kind == Expr::Node::Kind::Field && root.path.rfind("it", 0) != 0) {
      const SchemaNode *node = schema.resolve(root.path);
      if (node != nullptr && !node->is_primitive()) {
        throw Error(Errc::NonScalarProjection, "column '" + col.name + "' refers to non-scalar '" + root.path + "'");
      }
    }
    TypedExpr typed = typecheck(col.expr, schema);
    if (typed.type() == ValueType::Bool) {
      throw Error(Errc::NonScalarProjection, "column '" + col.name + "' is boolean; projections are numeric");
    }
    out.columns_.push_back(
        {col.name, typed.type() == ValueType::Int ? PrimitiveKind::I64 : PrimitiveKind::F64});
    out.exprs_.push_back(std::move(typed));
  }
  return out;
}

void TypedProjection::eval_into(const Event &event, NtupleRow &row) const {
  row.resize(exprs_.size());
  for (std::size_t i = 0; i < exprs_.size(); ++i) row[i] = exprs_[i].eval_scalar(event);
}

NtupleRow eval_projection(const TypedProjection &projection, const Event &event) {
  NtupleRow row;
  projection.eval_into(event, row);
  return row;
}

}  // namespace skimflow
