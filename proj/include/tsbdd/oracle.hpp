#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsbdd/formula.hpp"
#include "tsbdd/kernel.hpp"
#include "tsbdd/ts_model.hpp"
#include "tsbdd/var_order.hpp"

// Exhaustive enumeration. Nothing here touches the diagram or propagation
// code; the kernel compiler header is only needed for FaultMode.

namespace tsbdd::oracle {

using Assignment = std::map<std::string, bool>;

inline constexpr int kMaxFormulaVars = 24;
inline constexpr int kMaxKernelVars = 16;

/// Satisfying assignments of f over all variables of `order` that agree with
/// e. Throws InvalidArgument above kMaxFormulaVars.
std::uint64_t brute_card(const Formula& f, const VarOrder& order, const Assignment& e = {});

/// The kernel constraints evaluated directly on a configuration. Bit i of a
/// configuration is variables()[i]: system variables in declaration order,
/// then causes in declaration order.
class KernelOracle {
 public:
  KernelOracle(const TroubleshootingModel& model, FaultMode mode, bool force_problem_faulty);

  const std::vector<std::string>& variables() const { return names_; }
  int num_vars() const { return static_cast<int>(names_.size()); }
  bool satisfies(std::uint64_t x) const;
  /// Bit mask and values of the configurations consistent with e.
  std::pair<std::uint64_t, std::uint64_t> evidence_mask(const Assignment& e) const;

 private:
  struct Group {
    int self;
    std::vector<int> members;
  };
  std::vector<std::string> names_;
  std::vector<Group> systems_;  // system with subsystems
  std::vector<Group> causes_;   // cause with targets
  std::vector<int> cause_bits_;
  int problem_ = 0;
  FaultMode mode_;
  bool force_ = true;
};

std::uint64_t brute_kernel_card(const TroubleshootingModel& model, FaultMode mode, bool force_problem_faulty,
                                const Assignment& e = {});
/// Satisfying configurations with each cause faulty, in declaration order.
std::vector<std::uint64_t> brute_cause_counts(const TroubleshootingModel& model, FaultMode mode,
                                              bool force_problem_faulty, const Assignment& e = {});

/// Prior mass of every satisfying kernel configuration.
struct JointTable {
  std::vector<std::string> variables;
  std::map<std::uint64_t, double> entries;
};
JointTable joint_table(const TroubleshootingModel& model, FaultMode mode = {}, bool force_problem_faulty = true);

struct Posteriors {
  std::vector<std::string> causes;
  std::vector<double> posteriors;
  /// Unnormalized: sum over configurations of priors * action likelihoods.
  std::vector<double> masses;
  double evidence_mass = 0.0;
  bool consistent = false;

  double at(const std::string& cause) const;
};

/// Full-joint enumeration of P(C_i = faulty | e). Throws InvalidArgument
/// above kMaxKernelVars.
Posteriors brute_posteriors(const TroubleshootingModel& model, const Assignment& kernel_evidence,
                            const Assignment& action_observations = {}, FaultMode mode = {},
                            bool force_problem_faulty = true);

}  // namespace tsbdd::oracle
