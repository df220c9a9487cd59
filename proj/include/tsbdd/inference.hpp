#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tsbdd/counting.hpp"
#include "tsbdd/kernel.hpp"
#include "tsbdd/ts_model.hpp"

namespace tsbdd {

/// Observations: kernel variables go into kernel_evidence, actions are kept
/// apart because they never enter the diagram.
struct TsEvidence {
  Evidence kernel_evidence;
  std::map<std::string, bool> action_observations;

  /// "S3=faulty,A=y" (comma or whitespace separated). Throws ParseError on
  /// malformed items and UnknownVariable for names the model lacks.
  static TsEvidence parse(std::string_view text, const TroubleshootingModel& model);
  /// Adds or replaces one observation.
  void set(const TroubleshootingModel& model, const std::string& name, bool value);
  /// Removes an observation; false if there was none.
  bool retract(const std::string& name);
  bool empty() const { return kernel_evidence.empty() && action_observations.empty(); }
  std::string to_string() const;
};

enum class Strategy { Naive, SinglePass, Both };
Strategy parse_strategy(std::string_view text);
std::string to_string(Strategy s);

/// Number of satisfying configurations with each cause faulty, consistent
/// with e, in cause declaration order. One propagation plus one bottom-up
/// pass over the cause layers.
std::vector<std::uint64_t> cause_counts(const CompiledKernel& kernel, const Evidence& e, OpCounter* ops = nullptr);
std::map<std::string, std::uint64_t> cause_count_map(const CompiledKernel& kernel, const Evidence& e,
                                                     OpCounter* ops = nullptr);

struct PosteriorResult {
  std::vector<std::string> causes;
  std::vector<double> posteriors;
  /// Unnormalized per-cause mass.
  std::vector<double> masses;
  /// Card_B(C_i = y, e), weighted by the observed actions' likelihoods when
  /// there are any.
  std::vector<double> cards;
  double evidence_probability = 0.0;
  bool consistent = false;
  Strategy strategy = Strategy::SinglePass;
  /// Operations of the reported strategy (single-pass when both ran).
  OpCounter ops;
  OpCounter naive_ops;
  /// Largest posterior difference between the strategies (Both only).
  double strategy_gap = 0.0;

  double posterior(std::string_view cause) const;
};

/// P(C_i = faulty | e) for every cause. With Strategy::Both the two results
/// are compared and VerificationError is thrown if they differ by more than
/// `tolerance`.
///
/// Under exactly-one faults the mass of C_i is
/// P(C_i=y) * prod_{k!=i} P(C_k=n) * cards[i]. Under m-fault modes the mass is
/// the prior-weighted marginal and posteriors need not sum to one.
PosteriorResult posteriors(const TroubleshootingModel& model, const CompiledKernel& kernel, const TsEvidence& e,
                           Strategy strategy = Strategy::SinglePass, double tolerance = 1e-9);

/// Unnormalized P(e): the sum of the per-cause masses under exactly-one,
/// the total prior-weighted mass otherwise.
double evidence_probability(const TroubleshootingModel& model, const CompiledKernel& kernel, const TsEvidence& e);

/// One weight function per observed action: P(A = observed | parents).
std::vector<WeightFunction> action_weights(const TroubleshootingModel& model,
                                           const std::map<std::string, bool>& observations);

}  // namespace tsbdd
