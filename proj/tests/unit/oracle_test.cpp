#include <gtest/gtest.h>

#include <map>

#include "support.hpp"
#include "tsbdd/errors.hpp"
#include "tsbdd/oracle.hpp"

namespace tsbdd {
namespace {

TEST(Oracle, ExactlyOneOfThree) {
  EXPECT_EQ(oracle::brute_card(parse_formula("one(A1, A2, A3)"), VarOrder({"A1", "A2", "A3"})), 3U);
}

TEST(Oracle, Tautology) {
  for (int n = 0; n <= 10; ++n)
    EXPECT_EQ(oracle::brute_card(Formula::constant(true), VarOrder(testing::var_names(n))), std::uint64_t{1} << n);
}

TEST(Oracle, EvidenceRestrictsEnumeration) {
  const auto f = parse_formula("a | b");
  const VarOrder order({"a", "b", "c"});
  EXPECT_EQ(oracle::brute_card(f, order), 6U);
  EXPECT_EQ(oracle::brute_card(f, order, {{"a", false}}), 2U);
  EXPECT_EQ(oracle::brute_card(f, order, {{"a", false}, {"b", false}}), 0U);
}

TEST(Oracle, BudgetsAreEnforced) {
  EXPECT_THROW(oracle::brute_card(Formula::constant(true), VarOrder(testing::var_names(25))), InvalidArgument);
  GenSpec spec;
  spec.n_system = 12;
  spec.n_cause = 5;
  const auto m = generate_model(spec);
  EXPECT_THROW(oracle::brute_kernel_card(m, {}, true), InvalidArgument);
}

TEST(Oracle, ExampleKernelCounts) {
  const auto m = example_model();
  EXPECT_EQ(oracle::brute_kernel_card(m, {}, false), 5U);
  EXPECT_EQ(oracle::brute_kernel_card(m, {}, true), 4U);
  EXPECT_EQ(oracle::brute_cause_counts(m, {}, true), (std::vector<std::uint64_t>{2, 2}));
  EXPECT_EQ(oracle::brute_kernel_card(m, {}, true, {{"S3", true}}), 1U);
  EXPECT_THROW(oracle::brute_kernel_card(m, {}, true, {{"Q", true}}), UnknownVariable);
}

TEST(Oracle, ExampleFormulaWithProblemFaulty) {
  const auto b = parse_formula(
      "((S & (S1 ^ S2)) | (!S & !S1 & !S2)) & ((S1 & (S3 ^ S4)) | (!S1 & !S3 & !S4))"
      " & (C1 => (S3 ^ S4)) & (C2 => (S2 ^ S4)) & ((S & (C1 ^ C2)) | (!S & !C1 & !C2))");
  const VarOrder order({"S", "S1", "S2", "S3", "S4", "C1", "C2"});
  EXPECT_EQ(oracle::brute_card(b, order), 5U);
  EXPECT_EQ(oracle::brute_card(b, order, {{"S", true}}), 4U);
}

TEST(Oracle, JointTableHoldsThePriorOfEachCauseConfiguration) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto m = testing::small_model(seed);
    const auto t = oracle::joint_table(m);
    const oracle::KernelOracle k(m, {}, true);
    const std::size_t first = m.system_vars.size();
    // Several fault paths can share one cause configuration; each carries that
    // configuration's prior, and the distinct configurations are disjoint events.
    std::map<std::uint64_t, double> by_causes;
    for (const auto& [x, p] : t.entries) {
      EXPECT_TRUE(k.satisfies(x));
      EXPECT_GE(p, 0.0);
      const auto [it, fresh] = by_causes.emplace(x >> first, p);
      if (!fresh) {
        EXPECT_EQ(it->second, p);
      }
    }
    double total = 0.0;
    for (const auto& [c, p] : by_causes) total += p;
    EXPECT_LE(total, 1.0 + 1e-12);
    EXPECT_EQ(t.entries.size(), oracle::brute_kernel_card(m, {}, true));
  }
}

TEST(Oracle, PosteriorsAreDeterministicAndForced) {
  const auto m = example_model();
  const auto a = oracle::brute_posteriors(m, {{"S3", true}});
  EXPECT_EQ(a.at("C1"), 1.0);
  EXPECT_EQ(a.at("C2"), 0.0);
  const auto b = oracle::brute_posteriors(m, {}, {{"A", false}});
  const auto c = oracle::brute_posteriors(m, {}, {{"A", false}});
  EXPECT_EQ(b.posteriors, c.posteriors);
  EXPECT_EQ(b.evidence_mass, c.evidence_mass);
  const auto z = oracle::brute_posteriors(m, {{"S", false}});
  EXPECT_FALSE(z.consistent);
}

}  // namespace
}  // namespace tsbdd
