#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tsbdd {

struct SystemVar {
  std::string name;
  /// Subsystems that immediately compose this system (its parents in the
  /// network).
  std::vector<std::string> subsystems;

  bool operator==(const SystemVar&) const = default;
};

struct CauseVar {
  std::string name;
  /// System variables this component can cause to fail.
  std::vector<std::string> targets;
  double prior_faulty = 0.5;

  bool operator==(const CauseVar&) const = default;
};

/// Binary action with P(A = y | parents). cpt[idx] uses bit k for the value of
/// parents[k] (1 = faulty).
struct ActionVar {
  std::string name;
  std::vector<std::string> parents;
  std::vector<double> cpt;

  double p_yes(std::uint64_t config) const { return cpt.at(config); }
  /// P(A = observed | config).
  double likelihood(std::uint64_t config, bool observed) const {
    return observed ? cpt.at(config) : 1.0 - cpt.at(config);
  }

  bool operator==(const ActionVar&) const = default;
};

struct TroubleshootingModel {
  std::vector<SystemVar> system_vars;
  std::string problem_var;
  std::vector<CauseVar> cause_vars;
  std::vector<ActionVar> action_vars;

  const SystemVar* find_system(std::string_view name) const;
  const CauseVar* find_cause(std::string_view name) const;
  const ActionVar* find_action(std::string_view name) const;
  int num_kernel_vars() const { return static_cast<int>(system_vars.size() + cause_vars.size()); }

  bool operator==(const TroubleshootingModel&) const = default;
};

enum class Severity { Error, Warning };

struct ModelIssue {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  std::vector<std::string> variables;

  bool operator==(const ModelIssue&) const = default;
};

/// Checks the structural requirements on a troubleshooting model. Returns one
/// issue per violation; no Error-severity issue means the model is usable.
std::vector<ModelIssue> validate(const TroubleshootingModel& model);
bool has_errors(const std::vector<ModelIssue>& issues);
/// Throws ValidationError listing the error-severity issues, if any.
void require_valid(const TroubleshootingModel& model);

/// Parses the line-oriented model format (see README.md). Throws ParseError
/// with the offending line number.
TroubleshootingModel parse_model(std::string_view text);
std::string serialize_model(const TroubleshootingModel& model);

/// Accepts 1/0, faulty/ok, y/n, yes/no, true/false.
bool parse_state(std::string_view token, bool& value);

TroubleshootingModel load_model(const std::string& path);

/// The model of the worked example: S composed of S1, S2; S1 of S3, S4;
/// C1 targets S3, S4; C2 targets S2, S4; action A over S2, S4.
TroubleshootingModel example_model(double prior_c1 = 0.5, double prior_c2 = 0.5);

}  // namespace tsbdd
