#include "tsbdd/oracle.hpp"

#include <algorithm>

#include "tsbdd/errors.hpp"

namespace tsbdd::oracle {

namespace {

/// Calls fn(x) for every x with x & ~free == fixed, in increasing order.
template <typename Fn>
void for_each_completion(std::uint64_t free, std::uint64_t fixed, Fn&& fn) {
  std::uint64_t s = 0;
  do {
    fn(fixed | s);
    s = (s - free) & free;
  } while (s != 0);
}

}  // namespace

std::uint64_t brute_card(const Formula& f, const VarOrder& order, const Assignment& e) {
  const int n = order.size();
  if (n > kMaxFormulaVars) throw InvalidArgument("brute_card is limited to " + std::to_string(kMaxFormulaVars) + " variables");
  const BoundFormula bound(f, order);
  std::uint64_t fixed_mask = 0, fixed = 0;
  for (const auto& [name, value] : e) {
    const int l = order.level_of(name);
    fixed_mask |= std::uint64_t{1} << (l - 1);
    if (value) fixed |= std::uint64_t{1} << (l - 1);
  }
  const std::uint64_t all = n == 0 ? 0 : (~std::uint64_t{0} >> (64 - n));
  std::uint64_t count = 0;
  for_each_completion(all & ~fixed_mask, fixed, [&](std::uint64_t x) { count += bound.evaluate(x) ? 1 : 0; });
  return count;
}

KernelOracle::KernelOracle(const TroubleshootingModel& model, FaultMode mode, bool force_problem_faulty)
    : mode_(mode), force_(force_problem_faulty) {
  require_valid(model);
  for (const auto& s : model.system_vars) names_.push_back(s.name);
  for (const auto& c : model.cause_vars) names_.push_back(c.name);
  if (names_.size() > 63) throw InvalidArgument("kernel oracle is limited to 63 variables");
  auto bit = [&](const std::string& name) {
    return static_cast<int>(std::find(names_.begin(), names_.end(), name) - names_.begin());
  };
  for (const auto& s : model.system_vars) {
    if (s.subsystems.empty()) continue;
    Group g{bit(s.name), {}};
    for (const auto& sub : s.subsystems) g.members.push_back(bit(sub));
    systems_.push_back(std::move(g));
  }
  for (const auto& c : model.cause_vars) {
    Group g{bit(c.name), {}};
    for (const auto& t : c.targets) g.members.push_back(bit(t));
    causes_.push_back(std::move(g));
    cause_bits_.push_back(bit(c.name));
  }
  problem_ = bit(model.problem_var);
}

bool KernelOracle::satisfies(std::uint64_t x) const {
  auto on = [&](int b) { return ((x >> b) & 1U) != 0; };
  auto faulty = [&](const std::vector<int>& bits) {
    int k = 0;
    for (int b : bits) k += on(b) ? 1 : 0;
    return k;
  };
  const bool single = mode_.kind == FaultMode::Kind::ExactlyOne;
  for (const auto& g : systems_) {
    const int k = faulty(g.members);
    if (single ? (on(g.self) ? k != 1 : k != 0) : (on(g.self) != (k >= 1))) return false;
  }
  for (const auto& g : causes_)
    if (on(g.self) && faulty(g.members) != 1) return false;
  const int k = faulty(cause_bits_);
  if (!on(problem_)) return !force_ && k == 0;
  switch (mode_.kind) {
    case FaultMode::Kind::ExactlyOne: return k == 1;
    case FaultMode::Kind::ExactlyM: return k == mode_.m;
    case FaultMode::Kind::AtMostM: return k >= 1 && k <= mode_.m;
  }
  return false;
}

std::pair<std::uint64_t, std::uint64_t> KernelOracle::evidence_mask(const Assignment& e) const {
  std::uint64_t mask = 0, values = 0;
  for (const auto& [name, value] : e) {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw UnknownVariable(name);
    const auto b = static_cast<std::uint64_t>(it - names_.begin());
    mask |= std::uint64_t{1} << b;
    if (value) values |= std::uint64_t{1} << b;
  }
  return {mask, values};
}

namespace {

void check_budget(const KernelOracle& k) {
  if (k.num_vars() > kMaxKernelVars)
    throw InvalidArgument("kernel enumeration is limited to " + std::to_string(kMaxKernelVars) + " variables");
}

template <typename Fn>
void for_each_model(const KernelOracle& k, const Assignment& e, Fn&& fn) {
  check_budget(k);
  const auto [mask, values] = k.evidence_mask(e);
  const std::uint64_t all = k.num_vars() == 0 ? 0 : (~std::uint64_t{0} >> (64 - k.num_vars()));
  for_each_completion(all & ~mask, values, [&](std::uint64_t x) {
    if (k.satisfies(x)) fn(x);
  });
}

}  // namespace

std::uint64_t brute_kernel_card(const TroubleshootingModel& model, FaultMode mode, bool force_problem_faulty,
                                const Assignment& e) {
  const KernelOracle k(model, mode, force_problem_faulty);
  std::uint64_t n = 0;
  for_each_model(k, e, [&](std::uint64_t) { ++n; });
  return n;
}

std::vector<std::uint64_t> brute_cause_counts(const TroubleshootingModel& model, FaultMode mode,
                                              bool force_problem_faulty, const Assignment& e) {
  const KernelOracle k(model, mode, force_problem_faulty);
  const std::size_t first = model.system_vars.size();
  std::vector<std::uint64_t> out(model.cause_vars.size(), 0);
  for_each_model(k, e, [&](std::uint64_t x) {
    for (std::size_t i = 0; i < out.size(); ++i)
      if ((x >> (first + i)) & 1U) ++out[i];
  });
  return out;
}

JointTable joint_table(const TroubleshootingModel& model, FaultMode mode, bool force_problem_faulty) {
  const KernelOracle k(model, mode, force_problem_faulty);
  JointTable t;
  t.variables = k.variables();
  const std::size_t first = model.system_vars.size();
  for_each_model(k, {}, [&](std::uint64_t x) {
    double p = 1.0;
    for (std::size_t i = 0; i < model.cause_vars.size(); ++i) {
      const double prior = model.cause_vars[i].prior_faulty;
      p *= ((x >> (first + i)) & 1U) ? prior : 1.0 - prior;
    }
    t.entries.emplace(x, p);
  });
  return t;
}

double Posteriors::at(const std::string& cause) const {
  for (std::size_t i = 0; i < causes.size(); ++i)
    if (causes[i] == cause) return posteriors[i];
  throw UnknownVariable(cause);
}

Posteriors brute_posteriors(const TroubleshootingModel& model, const Assignment& kernel_evidence,
                            const Assignment& action_observations, FaultMode mode, bool force_problem_faulty) {
  const KernelOracle k(model, mode, force_problem_faulty);
  const auto& names = k.variables();
  auto bit_of = [&](const std::string& name) {
    return static_cast<int>(std::find(names.begin(), names.end(), name) - names.begin());
  };
  struct Observed {
    const ActionVar* action;
    bool value;
    std::vector<int> parent_bits;
  };
  std::vector<Observed> observed;
  for (const auto& [name, value] : action_observations) {
    const ActionVar* a = model.find_action(name);
    if (!a) throw UnknownVariable(name);
    Observed o{a, value, {}};
    for (const auto& p : a->parents) o.parent_bits.push_back(bit_of(p));
    observed.push_back(std::move(o));
  }

  Posteriors out;
  for (const auto& c : model.cause_vars) out.causes.push_back(c.name);
  out.masses.assign(out.causes.size(), 0.0);
  out.posteriors.assign(out.causes.size(), 0.0);
  const std::size_t first = model.system_vars.size();
  for_each_model(k, kernel_evidence, [&](std::uint64_t x) {
    double p = 1.0;
    for (std::size_t i = 0; i < model.cause_vars.size(); ++i) {
      const double prior = model.cause_vars[i].prior_faulty;
      p *= ((x >> (first + i)) & 1U) ? prior : 1.0 - prior;
    }
    for (const auto& o : observed) {
      std::uint64_t idx = 0;
      for (std::size_t j = 0; j < o.parent_bits.size(); ++j)
        if ((x >> o.parent_bits[j]) & 1U) idx |= std::uint64_t{1} << j;
      p *= o.action->likelihood(idx, o.value);
    }
    out.evidence_mass += p;
    for (std::size_t i = 0; i < out.masses.size(); ++i)
      if ((x >> (first + i)) & 1U) out.masses[i] += p;
  });
  out.consistent = out.evidence_mass > 0.0;
  if (out.consistent)
    for (std::size_t i = 0; i < out.masses.size(); ++i) out.posteriors[i] = out.masses[i] / out.evidence_mass;
  return out;
}

}  // namespace tsbdd::oracle
