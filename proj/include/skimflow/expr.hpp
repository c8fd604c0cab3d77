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

#ifndef SKIMFLOW_EXPR_HPP_
#define SKIMFLOW_EXPR_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skimflow/event.hpp"
#include "skimflow/scalar.hpp"
#include "skimflow/schema.hpp"

namespace skimflow {

enum class CompareOp { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };
enum class ArithOp { Add, Sub, Mul, Div };
enum class ReduceOp { Max, Min, Sum };

/**
 * Untyped expression tree, produced by Expr::parse or the builder functions.
 *
 * Grammar (whitespace-insensitive):
 *   expr    := or
 *   or      := and ('or' and)*
 *   and     := not ('and' not)*
 *   not     := 'not' not | compare
 *   compare := sum (('<'|'<='|'>'|'>='|'=='|'!=') sum)?
 *   sum     := product (('+'|'-') product)*
 *   product := unary (('*'|'/') unary)*
 *   unary   := '-' unary | primary
 *   primary := number | 'true' | 'false' | '(' expr ')' | path
 *            | 'size' '(' path ')' | 'count' '(' path ',' expr ')'
 *            | ('max'|'min'|'sum') '(' path ',' 'it' '.' ident ')'
 *
 * Inside count/max/min/sum the name `it` refers to the current element.
 */
class Expr {
 public:
  struct Node;

  static Expr parse(std::string_view text);

  static Expr field(std::string path);
  static Expr constant(double value);
  static Expr constant(std::int64_t value);
  static Expr constant(bool value);
  static Expr compare(CompareOp op, Expr lhs, Expr rhs);
  static Expr arith(ArithOp op, Expr lhs, Expr rhs);
  static Expr negate(Expr operand);
  static Expr logical_and(Expr lhs, Expr rhs);
  static Expr logical_or(Expr lhs, Expr rhs);
  static Expr logical_not(Expr operand);
  static Expr size(std::string collection);
  static Expr count(std::string collection, Expr predicate);
  static Expr reduce(ReduceOp op, std::string collection, std::string element_field);

  /// Fully parenthesized text form, accepted by parse().
  std::string to_string() const;

  const Node &root() const { return *root_; }

 private:
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

struct Expr::Node {
  enum class Kind { Field, Const, Compare, Arith, Negate, And, Or, Not, Size, Count, Reduce };
  enum class ConstKind { Bool, Int, Float };

  Kind kind;
  std::string path;  // Field path, or collection for Size/Count/Reduce
  std::string element_field;  // Reduce only
  ConstKind const_kind = ConstKind::Float;
  double float_value = 0.0;
  std::int64_t int_value = 0;
  bool bool_value = false;
  CompareOp compare_op = CompareOp::Equal;
  ArithOp arith_op = ArithOp::Add;
  ReduceOp reduce_op = ReduceOp::Sum;
  std::vector<Expr> operands;
};

enum class ValueType { Bool, Int, Float };

std::string_view value_type_name(ValueType t);

/**
 * A type-checked expression bound to the Event layout. Immutable; evaluation
 * is pure and may run concurrently from any number of threads.
 */
class TypedExpr {
 public:
  ValueType type() const;

  bool eval_bool(const Event &event) const;
  double eval_double(const Event &event) const;
  /// Int-typed expressions yield an i64 cell, Float-typed an f64 cell.
  Scalar eval_scalar(const Event &event) const;

  struct Program;

 private:
  friend TypedExpr typecheck(const Expr &, const Schema &);
  friend class TypedProjection;
  explicit TypedExpr(std::shared_ptr<const Program> program) : program_(std::move(program)) {}
  std::shared_ptr<const Program> program_;
};

/// Resolves fields against `schema` and binds them to the Event layout.
/// Errors: UnknownField, TypeMismatch.
TypedExpr typecheck(const Expr &expr, const Schema &schema);

/// Same as typecheck, and additionally requires a Bool result.
TypedExpr typecheck_cut(const Expr &expr, const Schema &schema);

bool eval_cut(const TypedExpr &cut, const Event &event);

struct ProjectionColumn {
  std::string name;
  Expr expr;
};

using Projection = std::vector<ProjectionColumn>;

class TypedProjection {
 public:
  const FlatSchema &columns() const { return columns_; }
  std::size_t size() const { return exprs_.size(); }
  const TypedExpr &expr(std::size_t i) const { return exprs_[i]; }

  void eval_into(const Event &event, NtupleRow &row) const;

 private:
  friend TypedProjection typecheck(const Projection &, const Schema &);
  FlatSchema columns_;
  std::vector<TypedExpr> exprs_;
};

/// Errors: NameCollision (duplicate column), NonScalarProjection, plus those
/// of typecheck(Expr).
TypedProjection typecheck(const Projection &projection, const Schema &schema);

NtupleRow eval_projection(const TypedProjection &projection, const Event &event);

}  // namespace skimflow

#endif  // SKIMFLOW_EXPR_HPP_
