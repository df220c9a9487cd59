#include "tsbdd/formula.hpp"

#include <cctype>
#include <unordered_set>

#include "tsbdd/errors.hpp"

namespace tsbdd {

Formula Formula::make(Node n) { return Formula(std::make_shared<const Node>(std::move(n))); }

Formula Formula::constant(bool value) { return make(Node{FormulaOp::Const, value, {}, {}}); }

Formula Formula::var(std::string name) {
  if (name.empty()) throw InvalidArgument("empty variable name");
  return make(Node{FormulaOp::Var, false, std::move(name), {}});
}

Formula Formula::negate(Formula f) { return make(Node{FormulaOp::Not, false, {}, {std::move(f)}}); }

Formula Formula::all_of(std::vector<Formula> fs) {
  if (fs.empty()) return constant(true);
  if (fs.size() == 1) return fs.front();
  return make(Node{FormulaOp::And, false, {}, std::move(fs)});
}

Formula Formula::any_of(std::vector<Formula> fs) {
  if (fs.empty()) return constant(false);
  if (fs.size() == 1) return fs.front();
  return make(Node{FormulaOp::Or, false, {}, std::move(fs)});
}

Formula Formula::parity(std::vector<Formula> fs) {
  if (fs.empty()) return constant(false);
  if (fs.size() == 1) return fs.front();
  return make(Node{FormulaOp::Xor, false, {}, std::move(fs)});
}

Formula Formula::implies(Formula a, Formula b) {
  return make(Node{FormulaOp::Implies, false, {}, {std::move(a), std::move(b)}});
}

Formula Formula::iff(Formula a, Formula b) {
  return make(Node{FormulaOp::Iff, false, {}, {std::move(a), std::move(b)}});
}

Formula Formula::ite(Formula c, Formula t, Formula e) {
  return make(Node{FormulaOp::Ite, false, {}, {std::move(c), std::move(t), std::move(e)}});
}

Formula Formula::exactly_one(const std::vector<Formula>& fs) {
  std::vector<Formula> terms;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    std::vector<Formula> lits;
    for (std::size_t j = 0; j < fs.size(); ++j) lits.push_back(i == j ? fs[j] : negate(fs[j]));
    terms.push_back(all_of(std::move(lits)));
  }
  return any_of(std::move(terms));
}

namespace {

void collect_vars(const Formula& f, std::vector<std::string>& out,
                  std::unordered_set<std::string>& seen) {
  if (f.op() == FormulaOp::Var) {
    if (seen.insert(f.node().name).second) out.push_back(f.node().name);
    return;
  }
  for (const auto& a : f.args()) collect_vars(a, out, seen);
}

const char* infix_symbol(FormulaOp op) {
  switch (op) {
    case FormulaOp::And: return " & ";
    case FormulaOp::Or: return " | ";
    case FormulaOp::Xor: return " ^ ";
    case FormulaOp::Implies: return " => ";
    case FormulaOp::Iff: return " <=> ";
    default: return "";
  }
}

}  // namespace

std::vector<std::string> Formula::variables() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  collect_vars(*this, out, seen);
  return out;
}

std::string Formula::to_string() const {
  switch (op()) {
    case FormulaOp::Const: return node().value ? "1" : "0";
    case FormulaOp::Var: return node().name;
    case FormulaOp::Not: return "!" + args()[0].to_string();
    case FormulaOp::Ite:
      return "ite(" + args()[0].to_string() + ", " + args()[1].to_string() + ", " +
             args()[2].to_string() + ")";
    default: {
      std::string s = "(";
      for (std::size_t i = 0; i < args().size(); ++i) {
        if (i) s += infix_symbol(op());
        s += args()[i].to_string();
      }
      return s + ")";
    }
  }
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse() {
    Formula f = parse_iff();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("formula column " + std::to_string(pos_ + 1) + ": " + what, 0);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }

  Formula parse_iff() {
    Formula lhs = parse_imp();
    while (accept("<=>")) lhs = Formula::iff(lhs, parse_imp());
    return lhs;
  }

  Formula parse_imp() {
    Formula lhs = parse_or();
    if (accept("=>")) return Formula::implies(lhs, parse_imp());
    return lhs;
  }

  Formula parse_or() {
    std::vector<Formula> parts{parse_xor()};
    while (accept("|")) parts.push_back(parse_xor());
    return Formula::any_of(std::move(parts));
  }

  Formula parse_xor() {
    std::vector<Formula> parts{parse_and()};
    while (accept("^")) parts.push_back(parse_and());
    return Formula::parity(std::move(parts));
  }

  Formula parse_and() {
    std::vector<Formula> parts{parse_unary()};
    while (accept("&")) parts.push_back(parse_unary());
    return Formula::all_of(std::move(parts));
  }

  Formula parse_unary() {
    if (accept("!")) return Formula::negate(parse_unary());
    return parse_atom();
  }

  std::vector<Formula> parse_args() {
    expect("(");
    std::vector<Formula> args{parse_iff()};
    while (accept(",")) args.push_back(parse_iff());
    expect(")");
    return args;
  }

  Formula parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (accept("(")) {
      Formula f = parse_iff();
      expect(")");
      return f;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    if (start == pos_) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    const std::string word(text_.substr(start, pos_ - start));
    if (word == "0" || word == "false") return Formula::constant(false);
    if (word == "1" || word == "true") return Formula::constant(true);
    if (word == "ite") {
      auto args = parse_args();
      if (args.size() != 3) fail("ite takes three arguments");
      return Formula::ite(args[0], args[1], args[2]);
    }
    if (word == "xor") return Formula::parity(parse_args());
    if (word == "one") return Formula::exactly_one(parse_args());
    if (std::isdigit(static_cast<unsigned char>(word[0]))) fail("bad identifier '" + word + "'");
    return Formula::var(word);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// BoundFormula

BoundFormula::BoundFormula(const Formula& f, const VarOrder& order) {
  if (order.size() > 64) throw InvalidArgument("BoundFormula supports at most 64 variables");
  flatten(f, order);
}

void BoundFormula::flatten(const Formula& f, const VarOrder& order) {
  switch (f.op()) {
    case FormulaOp::Const: program_.push_back({FormulaOp::Const, f.node().value ? 1 : 0}); return;
    case FormulaOp::Var: program_.push_back({FormulaOp::Var, order.level_of(f.node().name) - 1}); return;
    default:
      for (const auto& a : f.args()) flatten(a, order);
      program_.push_back({f.op(), static_cast<int>(f.args().size())});
  }
}

bool BoundFormula::evaluate(std::uint64_t assignment) const {
  std::vector<char> stack;
  stack.reserve(64);
  for (const Op& op : program_) {
    switch (op.op) {
      case FormulaOp::Const: stack.push_back(static_cast<char>(op.arg)); break;
      case FormulaOp::Var: stack.push_back(static_cast<char>((assignment >> op.arg) & 1U)); break;
      case FormulaOp::Not: stack.back() = !stack.back(); break;
      case FormulaOp::And:
      case FormulaOp::Or:
      case FormulaOp::Xor: {
        const std::size_t base = stack.size() - static_cast<std::size_t>(op.arg);
        bool acc = stack[base];
        for (std::size_t i = base + 1; i < stack.size(); ++i) {
          if (op.op == FormulaOp::And) acc = acc && stack[i];
          else if (op.op == FormulaOp::Or) acc = acc || stack[i];
          else acc = acc != static_cast<bool>(stack[i]);
        }
        stack.resize(base);
        stack.push_back(acc);
        break;
      }
      case FormulaOp::Implies: {
        const bool b = stack.back();
        stack.pop_back();
        stack.back() = !stack.back() || b;
        break;
      }
      case FormulaOp::Iff: {
        const bool b = stack.back();
        stack.pop_back();
        stack.back() = static_cast<bool>(stack.back()) == b;
        break;
      }
      case FormulaOp::Ite: {
        const bool e = stack.back();
        stack.pop_back();
        const bool t = stack.back();
        stack.pop_back();
        stack.back() = stack.back() ? t : e;
        break;
      }
    }
  }
  return stack.back();
}

}  // namespace tsbdd
