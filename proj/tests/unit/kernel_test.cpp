#include <gtest/gtest.h>

#include <bit>

#include "support.hpp"
#include "tsbdd/errors.hpp"
#include "tsbdd/kernel.hpp"
#include "tsbdd/oracle.hpp"

namespace tsbdd {
namespace {

constexpr const char* kExampleOneFormula =
    "((S & (S1 ^ S2)) | (!S & !S1 & !S2))"
    " & ((S1 & (S3 ^ S4)) | (!S1 & !S3 & !S4))"
    " & (C1 => (S3 ^ S4))"
    " & (C2 => (S2 ^ S4))"
    " & ((S & (C1 ^ C2)) | (!S & !C1 & !C2))";

const FaultMode kModes[] = {FaultMode::exactly_one(), FaultMode::exactly(1), FaultMode::exactly(2),
                            FaultMode::at_most(1),   FaultMode::at_most(2), FaultMode::at_most(3)};

bool fits(const TroubleshootingModel& m, FaultMode mode) {
  return mode.kind == FaultMode::Kind::ExactlyOne || mode.m <= static_cast<int>(m.cause_vars.size());
}

/// Maps an oracle bit pattern (system variables, then causes, in declaration
/// order) to a diagram assignment.
std::uint64_t to_levels(const TroubleshootingModel& m, const VarOrder& order, std::uint64_t x) {
  std::vector<std::string> names;
  for (const auto& s : m.system_vars) names.push_back(s.name);
  for (const auto& c : m.cause_vars) names.push_back(c.name);
  std::uint64_t out = 0;
  for (std::size_t b = 0; b < names.size(); ++b)
    if ((x >> b) & 1U) out |= std::uint64_t{1} << (order.level_of(names[b]) - 1);
  return out;
}

TEST(Kernel, ExampleOrder) {
  const VarOrder order = order_variables(example_model());
  EXPECT_EQ(order.names(), (std::vector<std::string>{"S", "S1", "S2", "S3", "S4", "C1", "C2"}));
}

TEST(Kernel, SingleSystemOrder) {
  const auto m = parse_model("problem S\nsystem S\ncause C targets S prior 0.3\n");
  EXPECT_EQ(order_variables(m).names(), (std::vector<std::string>{"S", "C"}));
  const auto k = compile_kernel(m);
  EXPECT_EQ(card_with_evidence(*k.bdd, {}), 1U);
}

TEST(Kernel, ExampleOneFormulaIsTheUnforcedKernel) {
  const auto k = compile_kernel(example_model(), FaultMode::exactly_one(), true);
  const BoundFormula b(parse_formula(kExampleOneFormula), k.order());
  const std::uint64_t s_bit = 1;  // S is level 1
  for (std::uint64_t x = 0; x < 128; ++x) {
    EXPECT_EQ(k.bdd->evaluate(k.unforced_root, x), b.evaluate(x)) << x;
    EXPECT_EQ(k.bdd->evaluate(k.root, x), b.evaluate(x) && (x & s_bit)) << x;
  }
}

TEST(Kernel, ExampleSizes) {
  const auto k = compile_kernel(example_model(), FaultMode::exactly_one(), false);
  EXPECT_EQ(k.bdd->node_count(k.unforced_root), 21U);
  EXPECT_EQ(size_bound(example_model()), 21U);
  const auto f = compile_kernel(example_model());
  EXPECT_EQ(f.node_count(), 16U);
  EXPECT_EQ(card_with_evidence(*f.bdd, {}), 4U);
}

TEST(Kernel, SizeBoundArithmetic) {
  EXPECT_EQ(size_bound(5, 2, FaultMode::exactly_one()), 21U);
  EXPECT_EQ(cause_layer_bound(6, FaultMode::exactly(2)), 90U);
  EXPECT_EQ(cause_layer_bound(6, FaultMode::at_most(2)), 6U * (6 + 15));
  EXPECT_EQ(cause_layer_bound(10, FaultMode::exactly(3)), 1200U);
  EXPECT_EQ(size_bound(0, 0, FaultMode::exactly_one()), 2U);
}

TEST(Kernel, ModeParsing) {
  EXPECT_EQ(FaultMode::parse("exactly-one"), FaultMode::exactly_one());
  EXPECT_EQ(FaultMode::parse("exactly-m=3"), FaultMode::exactly(3));
  EXPECT_EQ(FaultMode::parse("at-most-m=2"), FaultMode::at_most(2));
  EXPECT_EQ(FaultMode::at_most(2).to_string(), "at-most-m=2");
  for (const char* bad : {"", "exactly-m=", "exactly-m=0", "at-most-m=2x", "two"})
    EXPECT_THROW(FaultMode::parse(bad), InvalidArgument) << bad;
}

TEST(Kernel, ModeLargerThanCauseCountIsRejected) {
  EXPECT_THROW(compile_kernel(example_model(), FaultMode::exactly(3)), InvalidArgument);
  EXPECT_THROW(kernel_formula(example_model(), FaultMode::at_most(3)), InvalidArgument);
  EXPECT_NO_THROW(compile_kernel(example_model(), FaultMode::exactly(2)));
}

TEST(Kernel, InvalidModelIsRejected) {
  auto m = example_model();
  m.cause_vars[0].targets.clear();
  EXPECT_THROW(compile_kernel(m), ValidationError);
}

TEST(Kernel, ActionsDoNotEnterTheKernel) {
  GenSpec spec;
  spec.n_system = 12;
  spec.n_cause = 5;
  spec.n_action = 4;
  spec.seed = 77;
  const auto a = compile_kernel(generate_model(spec));
  spec.n_action = 8;
  const auto b = compile_kernel(generate_model(spec));
  EXPECT_EQ(a.node_count(), b.node_count());
  EXPECT_TRUE(structurally_equal(*a.bdd, a.root, *b.bdd, b.root));
}

// Smallest generated counterexample to the per-layer count |U_C| * C(|U_C|, m):
// the seven system states induce four distinct cause sub-functions at C1 and
// four at C2.
TEST(Kernel, CauseLayersCanExceedThePerConfigurationCount) {
  const auto m = parse_model(
      "problem S\n"
      "system S subsystems S1 S2 S3\nsystem S1\nsystem S2\nsystem S3\n"
      "cause C1 targets S1 S2 S3 prior 0.1\n"
      "cause C2 targets S1 S2 prior 0.5\n"
      "cause C3 targets S2 S3 prior 0.7\n");
  const auto k = compile_kernel(m, FaultMode::exactly(2));
  EXPECT_EQ(k.bdd->layer(k.root, 5).size(), 4U);
  EXPECT_EQ(k.bdd->layer(k.root, 6).size(), 4U);
  EXPECT_EQ(k.bdd->layer(k.root, 7).size(), 2U);
  EXPECT_EQ(k.cause_layer_node_count(), 10U);
  EXPECT_EQ(cause_layer_bound(3, FaultMode::exactly(2)), 9U);
  // The whole diagram stays within the total bound.
  EXPECT_LE(k.node_count(), size_bound(m, FaultMode::exactly(2)));
}

TEST(KernelProperty, DiagramMatchesDirectEvaluation) {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const auto m = testing::small_model(seed);
    for (FaultMode mode : kModes) {
      if (!fits(m, mode)) continue;
      for (bool force : {false, true}) {
        const auto k = compile_kernel(m, mode, force);
        const oracle::KernelOracle o(m, mode, force);
        for (std::uint64_t x = 0; x < (std::uint64_t{1} << o.num_vars()); ++x)
          ASSERT_EQ(k.bdd->evaluate(k.root, to_levels(m, k.order(), x)), o.satisfies(x))
              << "seed " << seed << " mode " << mode.to_string() << " force " << force << " x " << x;
      }
    }
  }
}

TEST(KernelProperty, FormulaMatchesDiagram) {
  for (std::uint64_t seed = 200; seed < 260; ++seed) {
    const auto m = testing::small_model(seed);
    for (FaultMode mode : kModes) {
      if (!fits(m, mode)) continue;
      const auto k = compile_kernel(m, mode, true);
      const BoundFormula f(kernel_formula(m, mode, true), k.order());
      for (std::uint64_t x = 0; x < (std::uint64_t{1} << k.order().size()); ++x)
        ASSERT_EQ(k.bdd->evaluate(k.root, x), f.evaluate(x)) << "seed " << seed << " " << mode.to_string();
    }
  }
}

TEST(KernelProperty, OrderPutsSystemsBeforeSubsystemsAndCausesLast) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    GenSpec spec;
    spec.seed = seed;
    spec.n_system = 2 + static_cast<int>(seed % 30);
    spec.n_cause = 1 + static_cast<int>(seed % 7);
    const auto m = generate_model(spec);
    const VarOrder order = order_variables(m);
    for (const auto& s : m.system_vars) {
      EXPECT_LT(order.level_of(s.name), static_cast<int>(m.system_vars.size()) + 1);
      for (const auto& sub : s.subsystems) EXPECT_LT(order.level_of(s.name), order.level_of(sub));
    }
    EXPECT_EQ(order.level_of(m.problem_var), 1);
  }
}

TEST(KernelProperty, SingleFaultSemantics) {
  for (std::uint64_t seed = 300; seed < 380; ++seed) {
    const auto m = testing::small_model(seed);
    const auto k = compile_kernel(m);
    const VarOrder& order = k.order();
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << order.size()); ++x) {
      if (!k.bdd->evaluate(k.root, x)) continue;
      auto on = [&](const std::string& n) { return ((x >> (order.level_of(n) - 1)) & 1U) != 0; };
      ASSERT_TRUE(on(m.problem_var));
      int causes = 0;
      for (const auto& c : m.cause_vars) causes += on(c.name) ? 1 : 0;
      ASSERT_EQ(causes, 1);
      for (const auto& s : m.system_vars) {
        if (!on(s.name) || s.subsystems.empty()) continue;
        int faulty = 0;
        for (const auto& sub : s.subsystems) faulty += on(sub) ? 1 : 0;
        ASSERT_EQ(faulty, 1);
      }
    }
  }
}

TEST(KernelProperty, SingleCausePath) {
  for (std::uint64_t seed = 400; seed < 500; ++seed) {
    GenSpec spec;
    spec.seed = seed;
    spec.n_system = 2 + static_cast<int>(seed % 20);
    spec.n_cause = 1 + static_cast<int>(seed % 9);
    const auto k = compile_kernel(generate_model(spec));
    const Robdd& bdd = *k.bdd;
    // Number of distinct paths to the 1-terminal, bottom-up.
    std::map<std::uint32_t, std::uint64_t> paths{{kTerm1.id, 1}, {kTerm0.id, 0}};
    auto reach = bdd.reachable(k.root);
    std::sort(reach.begin(), reach.end(), [&](NodeRef a, NodeRef b) { return bdd.level(a) > bdd.level(b); });
    for (NodeRef u : reach)
      if (!bdd.is_terminal(u)) paths[u.id] = paths.at(bdd.lo(u).id) + paths.at(bdd.hi(u).id);
    for (NodeRef u : reach) {
      if (bdd.is_terminal(u) || bdd.level(u) < k.first_cause_level) continue;
      if (bdd.hi(u) == kTerm0) continue;
      EXPECT_EQ(paths.at(bdd.hi(u).id), 1U) << "seed " << seed;
    }
  }
}

TEST(KernelProperty, AtMostIsTheUnionOfExactCounts) {
  for (std::uint64_t seed = 500; seed < 560; ++seed) {
    const auto m = testing::small_model(seed);
    const int n_c = static_cast<int>(m.cause_vars.size());
    for (int mm = 1; mm <= std::min(3, n_c); ++mm) {
      for (bool force : {false, true}) {
        const auto at_most = compile_kernel(m, FaultMode::at_most(mm), force);
        std::vector<CompiledKernel> exact;
        for (int j = 1; j <= mm; ++j) exact.push_back(compile_kernel(m, FaultMode::exactly(j), force));
        const VarOrder& order = at_most.order();
        for (std::uint64_t x = 0; x < (std::uint64_t{1} << order.size()); ++x) {
          bool any = false;
          for (const auto& e : exact) any = any || e.bdd->evaluate(e.root, x);
          if (!force) {
            // The all-ok state: every variable ok.
            any = any || x == 0;
          }
          ASSERT_EQ(at_most.bdd->evaluate(at_most.root, x), any) << "seed " << seed << " m " << mm;
        }
      }
    }
  }
}

TEST(KernelProperty, ForcedKernelEntailsProblem) {
  for (std::uint64_t seed = 600; seed < 650; ++seed) {
    const auto k = compile_kernel(testing::small_model(seed));
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << k.order().size()); x += 2) EXPECT_FALSE(k.bdd->evaluate(k.root, x));
  }
}

TEST(KernelProperty, SizeWithinBoundForSingleFaults) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    GenSpec spec;
    spec.seed = derive_seed(99, seed);
    Rng rng(spec.seed);
    spec.n_system = static_cast<int>(rng.uniform_int(1, 60));
    spec.n_cause = static_cast<int>(rng.uniform_int(1, 30));
    spec.n_action = 0;
    const auto m = generate_model(spec);
    const auto k = compile_kernel(m, FaultMode::exactly_one(), false);
    EXPECT_LE(k.bdd->node_count(k.unforced_root), size_bound(m));
    EXPECT_LE(k.node_count(), size_bound(m));
  }
}

}  // namespace
}  // namespace tsbdd
