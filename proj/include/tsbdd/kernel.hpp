#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tsbdd/counting.hpp"
#include "tsbdd/formula.hpp"
#include "tsbdd/robdd.hpp"
#include "tsbdd/ts_model.hpp"

namespace tsbdd {

/// Constraint on how many causes may be faulty at once.
struct FaultMode {
  enum class Kind { ExactlyOne, ExactlyM, AtMostM };

  Kind kind = Kind::ExactlyOne;
  int m = 1;

  static FaultMode exactly_one() { return {}; }
  static FaultMode exactly(int m) { return {Kind::ExactlyM, m}; }
  static FaultMode at_most(int m) { return {Kind::AtMostM, m}; }

  /// "exactly-one", "exactly-m=<m>" or "at-most-m=<m>". Throws InvalidArgument.
  static FaultMode parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const FaultMode&) const = default;
};

struct CompiledKernel {
  std::shared_ptr<const Robdd> bdd;
  /// B before forcing the problem variable.
  NodeRef unforced_root;
  /// Diagram used for inference: B, or B with the problem variable faulty.
  NodeRef root;
  bool force_problem_faulty = true;
  FaultMode mode;
  std::map<std::string, int> cause_levels;
  /// All causes occupy levels first_cause_level..num_vars.
  int first_cause_level = 0;
  std::shared_ptr<const DiagramView> view;

  const VarOrder& order() const { return bdd->order(); }
  std::size_t node_count() const { return bdd->node_count(root); }
  /// Internal nodes testing a cause variable.
  std::size_t cause_layer_node_count() const;
};

/// System variables breadth-first from the problem variable (every system
/// variable before its subsystems, ties by declaration order), then causes in
/// declaration order.
VarOrder order_variables(const TroubleshootingModel& model);

/// Conjoins the per-system, per-cause and cause-count constraints one at a
/// time. Throws ValidationError for invalid models and InvalidArgument when
/// m exceeds the number of causes.
CompiledKernel compile_kernel(const TroubleshootingModel& model, FaultMode mode = {},
                              bool force_problem_faulty = true);

/// The same kernel as a formula (used for cross-checks).
Formula kernel_formula(const TroubleshootingModel& model, FaultMode mode = {},
                       bool force_problem_faulty = false);

/// Worst-case node count of the compiled kernel. Saturates at UINT64_MAX.
std::uint64_t size_bound(const TroubleshootingModel& model, FaultMode mode = {});
std::uint64_t size_bound(std::uint64_t n_system, std::uint64_t n_cause, FaultMode mode);
/// The cause-layer part of size_bound.
std::uint64_t cause_layer_bound(std::uint64_t n_cause, FaultMode mode);

}  // namespace tsbdd
