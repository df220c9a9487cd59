#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "tsbdd/inference.hpp"
#include "tsbdd/kernel.hpp"
#include "tsbdd/ts_model.hpp"

namespace tsbdd {

// ---------------------------------------------------------------------------
// Deterministic random helpers. They use only the raw engine output, so a
// seed yields the same sequence on every standard library.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  bool coin() { return (engine_() >> 63) != 0; }
  /// k distinct indices from [0, n), in draw order.
  std::vector<int> sample(int n, int k);

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed with a stream index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Model generation

struct GenSpec {
  int n_system = 5;
  int n_cause = 2;
  int n_action = 1;
  int max_subsystems_per_node = 3;
  int targets_min = 1;
  int targets_max = 3;
  int parents_min = 1;
  int parents_max = 3;
  double prior_min = 0.05;
  double prior_max = 0.95;
  std::uint64_t seed = 1;

  int total() const { return n_system + n_cause + n_action; }
};

/// A validating model: random rooted tree of system variables under S with
/// bounded branching; causes with distinct targets among the non-root system
/// variables (S itself when it is the only one), every leaf covered; actions
/// with distinct random system parents and CPT entries uniform in [0, 1].
/// Throws InvalidArgument for infeasible specs.
TroubleshootingModel generate_model(const GenSpec& spec);

/// Suite of `points` sizes spaced evenly over [min_total, max_total] with
/// `per_point` models each; the system/cause/action split rotates through
/// several ratios.
std::vector<GenSpec> default_suite(std::uint64_t seed = 1, int min_total = 21, int max_total = 322, int points = 15,
                                   int per_point = 15);

// ---------------------------------------------------------------------------
// Benchmark

struct BenchOptions {
  FaultMode mode;
  int observed_min = 1;
  int observed_max = 3;
  /// Also run the naive strategy and fail on disagreement.
  bool verify_strategies = false;
  /// Record wall time; off by default so the CSV is reproducible.
  bool timing = false;
};

struct BenchRecord {
  int model_id = 0;
  int n_system = 0;
  int n_cause = 0;
  int n_action = 0;
  std::string mode;
  std::uint64_t nodes = 0;
  std::uint64_t unforced_nodes = 0;
  std::uint64_t size_bound = 0;
  std::uint64_t cause_layer_nodes = 0;
  OpCounter ops;
  OpCounter cause_count_ops;
  std::uint64_t wall_ns = 0;
  std::string evidence;
  int observed_actions = 0;
  double posterior_sum = 0.0;
  double strategy_gap = 0.0;
  bool consistent = false;

  int n_kernel() const { return n_system + n_cause; }
  int n_total() const { return n_system + n_cause + n_action; }
};

/// Compiles each generated model, observes S faulty plus random action
/// outcomes, computes all posteriors and records sizes and operations.
std::vector<BenchRecord> run_benchmark(const std::vector<GenSpec>& specs, const BenchOptions& options);

/// Column header of the CSV output.
const std::string& csv_header();
void write_csv(std::ostream& os, const std::vector<BenchRecord>& records,
               const std::vector<std::pair<std::string, std::string>>& settings = {});
void write_json(std::ostream& os, const std::vector<BenchRecord>& records,
                const std::vector<std::pair<std::string, std::string>>& settings = {});
/// Scatter of total operations against total variables, log-scale y axis.
void write_svg(std::ostream& os, const std::vector<BenchRecord>& records);

/// Least-squares exponent b of y = a * x^b (fit in log-log space).
double power_law_exponent(const std::vector<double>& x, const std::vector<double>& y);
/// Coefficient of determination of the least-squares line y = a + b x.
double linear_r2(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Interactive evidence entry

/// Reads statements ("S3=faulty", "A=y", "retract S3", "show", "quit") and
/// prints the posterior table after each. Malformed statements print a
/// diagnostic and leave the evidence unchanged. Returns the number of
/// diagnostics.
int run_session(const TroubleshootingModel& model, const CompiledKernel& kernel, std::istream& in,
                std::ostream& out, Strategy strategy = Strategy::SinglePass);

/// Table of cause, Card and posterior.
void print_posteriors(std::ostream& os, const PosteriorResult& r);

// ---------------------------------------------------------------------------
// Oracle comparison

struct OracleCheckReport {
  int models = 0;
  int evidence_sets = 0;
  int count_mismatches = 0;
  double max_posterior_deviation = 0.0;
  double max_strategy_gap = 0.0;
  std::vector<std::string> failures;
};

/// Compares engine counts and posteriors (both strategies) with exhaustive
/// enumeration on `trials` random evidence sets per model.
OracleCheckReport oracle_check(const TroubleshootingModel& model, FaultMode mode, int trials, std::uint64_t seed,
                               OracleCheckReport report = {});
/// Same over random models with at most 16 kernel variables.
OracleCheckReport oracle_check_random(int models, int trials, std::uint64_t seed, FaultMode mode = {});

/// Random evidence: a few kernel observations and action outcomes.
TsEvidence random_evidence(const TroubleshootingModel& model, Rng& rng, int max_kernel = 2, int max_actions = 2);

/// Oracle-derived reference values for a model, as JSON with the generating
/// command line.
std::string freeze_json(const TroubleshootingModel& model, const std::vector<TsEvidence>& evidence,
                        const std::string& command_line);

}  // namespace tsbdd
