#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tsbdd/var_order.hpp"

namespace tsbdd {

enum class FormulaOp { Const, Var, Not, And, Or, Implies, Iff, Xor, Ite };

/// Immutable propositional formula. Cheap to copy (shared subtrees).
///
/// And/Or/Xor are n-ary; Xor is parity (a left-associated chain of binary
/// exclusive-ors). Implies/Iff are binary, Ite is ternary (cond, then, else).
class Formula {
 public:
  struct Node {
    FormulaOp op;
    bool value = false;          // Const
    std::string name;            // Var
    std::vector<Formula> args;   // connectives
  };

  static Formula constant(bool value);
  static Formula var(std::string name);
  static Formula negate(Formula f);
  static Formula all_of(std::vector<Formula> fs);
  static Formula any_of(std::vector<Formula> fs);
  static Formula parity(std::vector<Formula> fs);
  static Formula implies(Formula a, Formula b);
  static Formula iff(Formula a, Formula b);
  static Formula ite(Formula c, Formula t, Formula e);
  /// Exactly one of fs holds, expanded into a disjunction of minterm-style
  /// terms. Quadratic in fs.size().
  static Formula exactly_one(const std::vector<Formula>& fs);

  FormulaOp op() const { return node_->op; }
  const Node& node() const { return *node_; }
  const std::vector<Formula>& args() const { return node_->args; }

  /// Variables in first-occurrence order (depth-first, left to right).
  std::vector<std::string> variables() const;

  /// Fully parenthesized infix rendering, re-parseable by parse_formula.
  std::string to_string() const;

  friend Formula operator!(Formula f) { return negate(std::move(f)); }
  friend Formula operator&(Formula a, Formula b) { return all_of({std::move(a), std::move(b)}); }
  friend Formula operator|(Formula a, Formula b) { return any_of({std::move(a), std::move(b)}); }
  friend Formula operator^(Formula a, Formula b) { return parity({std::move(a), std::move(b)}); }

 private:
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Formula make(Node n);

  std::shared_ptr<const Node> node_;
};

/// Parses the textual notation documented in README.md:
///
///   expr   := iff
///   iff    := imp ( "<=>" imp )*
///   imp    := or ( "=>" imp )?          right associative
///   or     := xor ( "|" xor )*
///   xor    := and ( "^" and )*
///   and    := unary ( "&" unary )*
///   unary  := "!" unary | atom
///   atom   := "0" | "1" | ident | "(" expr ")"
///           | "ite" "(" expr "," expr "," expr ")"
///           | "xor" "(" expr ("," expr)* ")"
///           | "one" "(" expr ("," expr)* ")"
///
/// Throws ParseError (line 0, message carries the column).
Formula parse_formula(std::string_view text);

/// Formula with variables resolved against a VarOrder, evaluable on packed
/// assignments. Bit (level-1) of the assignment holds the variable's value.
class BoundFormula {
 public:
  /// Throws UnknownVariable if the formula mentions a variable outside order.
  BoundFormula(const Formula& f, const VarOrder& order);

  bool evaluate(std::uint64_t assignment) const;

 private:
  struct Op {
    FormulaOp op;
    int arg = 0;   // level-1 for Var, constant for Const, arity otherwise
  };
  void flatten(const Formula& f, const VarOrder& order);

  std::vector<Op> program_;  // postfix
};

}  // namespace tsbdd
