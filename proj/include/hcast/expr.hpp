#pragma once

#include "hcast/types.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hcast::expr {

// Transformation expression grammar (whitespace-insensitive):
//
//   expr  := mul
//   mul   := arith { "%**%" arith }
//   arith := unit  { ("+"|"-"|"*"|"/") unit }
//   unit  := call | ident | number | cvec | "(" expr ")"
//   call  := ident "(" [ expr { "," (ident "=" expr | expr) } ] ")"
//   cvec  := "c" "(" int { "," int } ")"
//
// The four arithmetic operators share one precedence level and associate
// left; "%**%" binds weaker than all of them. TRUE/FALSE parse as 1/0.

enum class BinOp { Add, Sub, Mul, Div, HMul };

struct Node;
using ExprPtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { Variable, Number, IntVector, Call, Binary };
  Kind kind;

  std::string name;         // Variable / Call
  Scalar number = 0.0;      // Number
  std::vector<int> ivec;    // IntVector

  std::vector<ExprPtr> args;                           // Call positional
  std::vector<std::pair<std::string, ExprPtr>> named;  // Call named

  BinOp op = BinOp::Add;  // Binary
  ExprPtr lhs, rhs;
};

ExprPtr variable(std::string name);
ExprPtr number(Scalar v);
ExprPtr int_vector(std::vector<int> v);
ExprPtr call(std::string name, std::vector<ExprPtr> args,
             std::vector<std::pair<std::string, ExprPtr>> named = {});
ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs);

struct ParseError : ConfigError {
  ParseError(const std::string& msg, std::size_t offset);
  std::size_t offset;  // 1-based byte offset into the source
};

/// Parses a transformation expression; throws ParseError with a 1-based
/// byte offset on unbalanced parentheses, unknown tokens or duplicate
/// named arguments.
ExprPtr parse_expr(const std::string& source);

/// Canonical text form; parse_expr(pretty_print(e)) reproduces e exactly.
std::string pretty_print(const ExprPtr& e);

bool equal(const ExprPtr& a, const ExprPtr& b);

/// Returns a copy of `e` with every named argument `arg_name` (at any call
/// depth) replaced by the numeric literal `value`; `replaced` counts hits.
ExprPtr bind_named(const ExprPtr& e, const std::string& arg_name, Scalar value,
                   int* replaced = nullptr);

/// Variable names referenced anywhere in the expression.
std::vector<std::string> variables(const ExprPtr& e);

const char* to_string(BinOp op);

}  // namespace hcast::expr
