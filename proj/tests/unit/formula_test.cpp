#include <gtest/gtest.h>

#include <bit>

#include "support.hpp"
#include "tsbdd/errors.hpp"
#include "tsbdd/formula.hpp"

namespace tsbdd {
namespace {

using testing::random_formula;
using testing::var_names;

bool equivalent(const Formula& a, const Formula& b, const VarOrder& order) {
  const BoundFormula fa(a, order), fb(b, order);
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << order.size()); ++x)
    if (fa.evaluate(x) != fb.evaluate(x)) return false;
  return true;
}

TEST(Formula, PrecedenceAndIsTighterThanOr) {
  const VarOrder order({"a", "b", "c"});
  EXPECT_TRUE(equivalent(parse_formula("a | b & c"), parse_formula("a | (b & c)"), order));
  EXPECT_FALSE(equivalent(parse_formula("a | b & c"), parse_formula("(a | b) & c"), order));
}

TEST(Formula, ImpliesIsRightAssociative) {
  const VarOrder order({"a", "b", "c"});
  EXPECT_TRUE(equivalent(parse_formula("a => b => c"), parse_formula("a => (b => c)"), order));
  EXPECT_FALSE(equivalent(parse_formula("a => b => c"), parse_formula("(a => b) => c"), order));
}

TEST(Formula, XorBindsBetweenOrAndAnd) {
  const VarOrder order({"a", "b", "c"});
  EXPECT_TRUE(equivalent(parse_formula("a ^ b & c"), parse_formula("a ^ (b & c)"), order));
  EXPECT_TRUE(equivalent(parse_formula("a | b ^ c"), parse_formula("a | (b ^ c)"), order));
}

TEST(Formula, NamedConnectives) {
  const VarOrder order({"a", "b", "c"});
  EXPECT_TRUE(equivalent(parse_formula("ite(a, b, c)"), parse_formula("(a & b) | (!a & c)"), order));
  EXPECT_TRUE(equivalent(parse_formula("xor(a, b, c)"), parse_formula("a ^ b ^ c"), order));
  EXPECT_TRUE(equivalent(parse_formula("one(a, b, c)"),
                         parse_formula("(a & !b & !c) | (!a & b & !c) | (!a & !b & c)"), order));
  EXPECT_TRUE(equivalent(parse_formula("a <=> b"), parse_formula("(a => b) & (b => a)"), order));
}

TEST(Formula, Constants) {
  const VarOrder order({"a"});
  EXPECT_TRUE(equivalent(parse_formula("a | 1"), Formula::constant(true), order));
  EXPECT_TRUE(equivalent(parse_formula("a & 0"), Formula::constant(false), order));
}

TEST(Formula, VariablesInFirstOccurrenceOrder) {
  EXPECT_EQ(parse_formula("c & (a | c) & b").variables(), (std::vector<std::string>{"c", "a", "b"}));
}

TEST(Formula, MalformedTextThrows) {
  for (const char* bad : {"", "a &", "(a", "a)", "ite(a, b)", "a @ b", "one()", "!", "a b"})
    EXPECT_THROW(parse_formula(bad), ParseError) << bad;
}

TEST(Formula, BindingRejectsUnknownVariables) {
  EXPECT_THROW(BoundFormula(parse_formula("a & z"), VarOrder({"a"})), UnknownVariable);
}

TEST(FormulaProperty, PrintedFormReparsesEquivalent) {
  const auto vars = var_names(5);
  const VarOrder order(vars);
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const Formula f = random_formula(rng, vars, 4);
    const Formula g = parse_formula(f.to_string());
    EXPECT_TRUE(equivalent(f, g, order)) << f.to_string();
  }
}

TEST(FormulaProperty, ExactlyOneMatchesPopcount) {
  for (int n = 1; n <= 6; ++n) {
    const auto vars = var_names(n);
    std::vector<Formula> fs;
    for (const auto& v : vars) fs.push_back(Formula::var(v));
    const BoundFormula b(Formula::exactly_one(fs), VarOrder(vars));
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) EXPECT_EQ(b.evaluate(x), std::popcount(x) == 1);
  }
}

}  // namespace
}  // namespace tsbdd
