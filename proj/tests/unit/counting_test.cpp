#include <gtest/gtest.h>

#include "support.hpp"
#include "tsbdd/counting.hpp"
#include "tsbdd/errors.hpp"
#include "tsbdd/kernel.hpp"
#include "tsbdd/oracle.hpp"
#include "tsbdd/robdd.hpp"

namespace tsbdd {
namespace {

using testing::random_formula;
using testing::random_partial;
using testing::var_names;

/// sum over satisfying assignments consistent with e of prod_k f_k.
double brute_weighted(const Formula& f, const VarOrder& order, const std::vector<WeightFunction>& fns,
                      const std::map<std::string, bool>& e) {
  const BoundFormula b(f, order);
  double total = 0.0;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << order.size()); ++x) {
    std::map<std::string, bool> named;
    bool consistent = true;
    for (int l = 1; l <= order.size(); ++l) {
      const bool v = ((x >> (l - 1)) & 1U) != 0;
      named[order.name_at(l)] = v;
      const auto it = e.find(order.name_at(l));
      if (it != e.end() && it->second != v) consistent = false;
    }
    if (!consistent || !b.evaluate(x)) continue;
    double w = 1.0;
    for (const auto& fn : fns) w *= fn.at(named);
    total += w;
  }
  return total;
}

WeightFunction random_weight(Rng& rng, const std::vector<std::string>& vars) {
  const int k = static_cast<int>(rng.uniform_int(1, 3));
  std::vector<std::string> domain;
  for (int idx : rng.sample(static_cast<int>(vars.size()), k)) domain.push_back(vars[static_cast<std::size_t>(idx)]);
  std::vector<double> table;
  for (int i = 0; i < (1 << k); ++i) table.push_back(rng.uniform01());
  return WeightFunction(domain, table);
}

TEST(Counting, PropagationOnExactlyOne) {
  Robdd bdd = build(parse_formula("one(A1, A2, A3)"), VarOrder({"A1", "A2", "A3"}));
  const NodeValues v = node_values(bdd, {});
  EXPECT_EQ(v.at(bdd.root()), 8.0);
  for (NodeRef u : bdd.layer(2)) EXPECT_EQ(v.at(u), 4.0);
  const NodeRef need_a3 = bdd.var("A3");
  const NodeRef need_not_a3 = bdd.negate(need_a3);
  EXPECT_EQ(v.at(need_a3), 2.0);
  EXPECT_EQ(v.at(need_not_a3), 4.0);
  EXPECT_EQ(v.terminal(), 3.0);
}

TEST(Counting, SkippedLevelsCountBothValues) {
  const Robdd bdd = build(parse_formula("a & c"), VarOrder({"a", "b", "c"}));
  EXPECT_EQ(card(bdd), 2U);
  EXPECT_EQ(card_with_evidence(bdd, {{"b", true}}), 1U);
  EXPECT_EQ(card_with_evidence(bdd, {{"b", true}, {"a", false}}), 0U);
  const Robdd t = build(Formula::constant(true), VarOrder({"a", "b", "c"}));
  EXPECT_EQ(card(t), 8U);
  EXPECT_EQ(card_with_evidence(t, {{"c", false}}), 4U);
}

TEST(Counting, ExampleCountsAndWeightedSum) {
  const auto kernel = compile_kernel(example_model(), FaultMode::exactly_one(), false);
  Robdd bdd = *kernel.bdd;
  bdd.set_root(kernel.unforced_root);
  EXPECT_EQ(card_with_evidence(bdd, {{"S2", true}, {"S4", true}}), 0U);
  // S4 faulty: C1 or C2 through S1. Both ok: the all-ok state or C1 through S3.
  EXPECT_EQ(card_with_evidence(bdd, {{"S2", false}, {"S4", true}}), 2U);
  EXPECT_EQ(card_with_evidence(bdd, {{"S2", false}, {"S4", false}}), 2U);
  EXPECT_EQ(card_with_evidence(bdd, {{"S2", true}, {"S4", false}}), 1U);
  const WeightFunction cpt({"S2", "S4"}, {0.4, 0.6, 0.2, 0.3});
  EXPECT_NEAR(weighted_card(bdd, std::span(&cpt, 1), {}), 1.8, 1e-12);
}

TEST(Counting, CheckedCountRejectsFractions) {
  EXPECT_EQ(checked_count(12.0), 12U);
  EXPECT_THROW(checked_count(2.5), VerificationError);
}

TEST(Counting, WeightFunctionRestrictionAndProduct) {
  const VarOrder order({"a", "b", "c"});
  const WeightFunction f({"b", "a"}, {1, 2, 3, 4});  // bit0 = b, bit1 = a
  EXPECT_EQ(f.at({{"a", true}, {"b", false}}), 3.0);
  const WeightFunction s = f.sorted_by(order);
  EXPECT_EQ(s.domain(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(s.at({{"a", true}, {"b", false}}), 3.0);
  const WeightFunction r = f.restricted({{"a", true}});
  EXPECT_EQ(r.domain(), (std::vector<std::string>{"b"}));
  EXPECT_EQ(r.at({{"b", true}}), 4.0);
  const WeightFunction g({"c", "b"}, {5, 6, 7, 8});
  const WeightFunction p = WeightFunction::product(f, g, order);
  for (int x = 0; x < 8; ++x) {
    const std::map<std::string, bool> m{{"a", x & 1}, {"b", (x >> 1) & 1}, {"c", (x >> 2) & 1}};
    EXPECT_EQ(p.at(m), f.at(m) * g.at(m));
  }
}

TEST(CountingProperty, CardMatchesEnumeration) {
  const auto vars = var_names(7);
  const VarOrder order(vars);
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const Formula f = random_formula(rng, vars, 4);
    const Robdd bdd = build(f, order);
    const auto e = random_partial(rng, vars);
    Evidence ev;
    ev.assignments = e;
    ASSERT_EQ(card_with_evidence(bdd, ev), oracle::brute_card(f, order, e)) << f.to_string();
  }
}

TEST(CountingProperty, MergedBandsAreDisjoint) {
  const auto vars = var_names(8);
  const VarOrder order(vars);
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<WeightFunction> fns;
    for (int i = 0; i < 4; ++i) fns.push_back(random_weight(rng, vars));
    const auto merged = merge_overlapping(fns, order);
    for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
      if (merged[i].domain().empty()) continue;
      EXPECT_LT(merged[i].band(order).second, merged[i + 1].band(order).first);
    }
    for (std::uint64_t x = 0; x < 256; ++x) {
      std::map<std::string, bool> m;
      for (int l = 0; l < 8; ++l) m[vars[static_cast<std::size_t>(l)]] = ((x >> l) & 1U) != 0;
      double a = 1.0, b = 1.0;
      for (const auto& f : fns) a *= f.at(m);
      for (const auto& f : merged) b *= f.at(m);
      ASSERT_NEAR(a, b, 1e-12 * std::max(1.0, a));
    }
  }
}

TEST(CountingProperty, WeightedCardMatchesEnumeration) {
  const auto vars = var_names(7);
  const VarOrder order(vars);
  Rng rng(29);
  for (int trial = 0; trial < 300; ++trial) {
    const Formula f = random_formula(rng, vars, 4);
    const Robdd bdd = build(f, order);
    std::vector<WeightFunction> fns;
    for (int i = 0, n = static_cast<int>(rng.uniform_int(0, 3)); i < n; ++i) fns.push_back(random_weight(rng, vars));
    const auto e = random_partial(rng, vars);
    Evidence ev;
    ev.assignments = e;
    const double expected = brute_weighted(f, order, fns, e);
    ASSERT_NEAR(weighted_card(bdd, fns, ev), expected, 1e-9 * std::max(1.0, expected)) << f.to_string();
  }
}

TEST(CountingProperty, OneWeightedPassCostsLessThanOnePassPerConfiguration) {
  const auto vars = var_names(10);
  const VarOrder order(vars);
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Robdd bdd = build(random_formula(rng, vars, 5), order);
    if (bdd.node_count() < 12) continue;
    const WeightFunction w({"x4", "x5"}, {0.1, 0.2, 0.3, 0.4});
    OpCounter single, naive;
    const double fast = weighted_card(bdd, std::span(&w, 1), {}, &single);
    double slow = 0.0;
    for (int c = 0; c < 4; ++c) {
      const Evidence e{{"x4", (c & 1) != 0}, {"x5", (c & 2) != 0}};
      slow += w.at(static_cast<std::uint64_t>(c)) * static_cast<double>(card_with_evidence(bdd, e, &naive));
    }
    EXPECT_NEAR(fast, slow, 1e-9 * std::max(1.0, slow));
    EXPECT_LT(single.total(), naive.total());
  }
}

}  // namespace
}  // namespace tsbdd
