#include "tsbdd/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "tsbdd/errors.hpp"

namespace tsbdd {

// ---------------------------------------------------------------------------
// TsEvidence

void TsEvidence::set(const TroubleshootingModel& model, const std::string& name, bool value) {
  if (model.find_system(name) || model.find_cause(name)) {
    kernel_evidence.set(name, value);
  } else if (model.find_action(name)) {
    action_observations[name] = value;
  } else {
    throw UnknownVariable(name);
  }
}

bool TsEvidence::retract(const std::string& name) {
  return kernel_evidence.assignments.erase(name) + action_observations.erase(name) > 0;
}

TsEvidence TsEvidence::parse(std::string_view text, const TroubleshootingModel& model) {
  std::string flat(text);
  std::replace(flat.begin(), flat.end(), ',', ' ');
  std::istringstream is(flat);
  TsEvidence out;
  std::string item;
  while (is >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("expected <var>=<state>, got '" + item + "'", 0);
    bool value = false;
    if (!parse_state(std::string_view(item).substr(eq + 1), value))
      throw ParseError("bad state in '" + item + "'", 0);
    out.set(model, item.substr(0, eq), value);
  }
  return out;
}

std::string TsEvidence::to_string() const {
  std::string out;
  auto append = [&](const std::string& s) {
    if (!out.empty()) out += ",";
    out += s;
  };
  for (const auto& [name, v] : kernel_evidence.assignments) append(name + (v ? "=faulty" : "=ok"));
  for (const auto& [name, v] : action_observations) append(name + (v ? "=y" : "=n"));
  return out;
}

Strategy parse_strategy(std::string_view text) {
  if (text == "naive") return Strategy::Naive;
  if (text == "single-pass") return Strategy::SinglePass;
  if (text == "both") return Strategy::Both;
  throw InvalidArgument("unknown strategy '" + std::string(text) + "' (expected naive, single-pass or both)");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Naive: return "naive";
    case Strategy::SinglePass: return "single-pass";
    case Strategy::Both: return "both";
  }
  return "?";
}

double PosteriorResult::posterior(std::string_view cause) const {
  for (std::size_t i = 0; i < causes.size(); ++i)
    if (causes[i] == cause) return posteriors[i];
  throw UnknownVariable(std::string(cause));
}

// ---------------------------------------------------------------------------
// Cause layers

namespace {

/// Per-level weights of the two values of a cause variable. Uniform (1/2,
/// 1/2) yields counts; (P(n), P(y)) yields prior-weighted mass scaled by
/// 2^|causes|.
using LevelWeights = std::vector<std::array<double, 2>>;

struct LayerMass {
  double total = 0.0;
  /// Indexed by level.
  std::vector<double> by_level;
};

/// Reads per-level masses off the cause layers. `nv` must come from a
/// propagation cut at the first cause level.
///
/// A backward pass computes the completion mass below every arc of the cause
/// layers. With `w` null the level weights are the uniform halves of the
/// propagation, so its node values are reused as forward values and the
/// result is a count. Otherwise forward values are recomputed from the
/// propagation's entry values under `w`. A cause level then collects the
/// paths that take its 1-arc plus its share of the paths that skip it.
LayerMass cause_layers(const DiagramView& view, const NodeValues& nv, const Evidence& e, const LevelWeights* w,
                       OpCounter& ops) {
  const int n = view.num_vars();
  const int cut = nv.cut_level;
  LayerMass out;
  out.by_level.assign(static_cast<std::size_t>(n) + 2, 0.0);
  if (cut < 1 || cut > n) {
    out.total = nv.terminal();
    return out;
  }
  const bool uniform = w == nullptr;

  std::vector<int> ev(static_cast<std::size_t>(n) + 2, -1);
  for (const auto& [name, value] : e.assignments) ev[view.order().level_of(name)] = value ? 1 : 0;

  // wb: weight of each branch (0 when evidence blocks it); hp: both branches
  // together, the factor of a skipped level; share: fraction of hp on the
  // faulty branch.
  std::vector<std::array<double, 2>> wb(static_cast<std::size_t>(n) + 2, {0.0, 0.0});
  std::vector<double> hp(wb.size(), 1.0), share(wb.size(), 0.0);
  bool rescale = false;
  for (int l = cut; l <= n; ++l) {
    if (uniform) {
      for (int b = 0; b < 2; ++b) wb[l][b] = (ev[l] < 0 || ev[l] == b) ? 0.5 : 0.0;
      hp[l] = ev[l] < 0 ? 1.0 : 0.5;
      share[l] = ev[l] < 0 ? 0.5 : (ev[l] == 1 ? 1.0 : 0.0);
      continue;
    }
    for (int b = 0; b < 2; ++b) wb[l][b] = (ev[l] < 0 || ev[l] == b) ? (*w)[l][b] : 0.0;
    hp[l] = wb[l][0] + wb[l][1];
    share[l] = hp[l] == 0.0 ? 0.0 : wb[l][1] / hp[l];
    ++ops.additions;
    ++ops.divisions;
    if (hp[l] != (ev[l] < 0 ? 1.0 : 0.5)) rescale = true;
  }

  // Products of hp over skipped levels. Uniform: a power of two from the
  // number of evidence levels. Otherwise kept zero-safe as the product of
  // the nonzero factors and the count of zero factors on [cut, l).
  std::vector<int> evcount(static_cast<std::size_t>(n) + 2, 0);
  std::vector<double> pnz(evcount.size(), 1.0);
  std::vector<int> zeros(evcount.size(), 0);
  std::vector<double> ratio(evcount.size(), 1.0);
  for (int l = cut; l <= n; ++l) {
    evcount[l + 1] = evcount[l] + (ev[l] >= 0 ? 1 : 0);
    if (uniform) continue;
    pnz[l + 1] = pnz[l] * (hp[l] == 0.0 ? 1.0 : hp[l]);
    zeros[l + 1] = zeros[l] + (hp[l] == 0.0 ? 1 : 0);
    ratio[l + 1] = ratio[l] * hp[l] / (ev[l] < 0 ? 1.0 : 0.5);
    ops.multiplications += 2;
    ++ops.divisions;
  }
  auto gap = [&](int lp, int lc) {
    if (lc <= lp + 1) return 1.0;
    if (uniform) {
      const int k = evcount[lc] - evcount[lp + 1];
      return k == 0 ? 1.0 : std::ldexp(1.0, -k);
    }
    if (zeros[lc] - zeros[lp + 1] > 0) return 0.0;
    ++ops.divisions;
    return pnz[lc] / pnz[lp + 1];
  };
  // Weight of arc b of a node at lu into a node at lc.
  auto arc = [&](int lu, int b, int lc) {
    double x = wb[lu][b];
    if (uniform)
      ++ops.divisions;  // a halving
    else
      ++ops.multiplications;
    const double g = gap(lu, lc);
    if (g != 1.0) {
      x *= g;
      ++ops.multiplications;
    }
    return x;
  };

  const int begin = view.level_begin(cut);
  const int end = view.level_begin(n + 1);
  const int size = view.size();
  std::vector<double> beta(static_cast<std::size_t>(size), 0.0);
  std::vector<std::array<double, 2>> part(static_cast<std::size_t>(end - begin), {0.0, 0.0});
  if (view.term1() >= 0) beta[view.term1()] = 1.0;
  for (int i = end - 1; i >= begin; --i) {
    const int lu = view.level(i);
    for (int b = 0; b < 2; ++b) {
      const int c = view.child(i, b);
      if (c < 0 || wb[lu][b] == 0.0 || beta[c] == 0.0) continue;
      part[i - begin][b] = arc(lu, b, view.level(c)) * beta[c];
      beta[i] += part[i - begin][b];
      ++ops.multiplications;
      ++ops.additions;
    }
  }

  std::vector<double> alpha;
  if (uniform) {
    alpha = nv.v;
  } else {
    alpha.assign(static_cast<std::size_t>(size), 0.0);
    for (int c = begin; c < size; ++c) {
      if (nv.entry[c] == 0.0) continue;
      alpha[c] = nv.entry[c];
      if (rescale) {
        alpha[c] *= ratio[view.level(c)];
        ++ops.multiplications;
      }
    }
    for (int i = begin; i < end; ++i) {
      if (alpha[i] == 0.0) continue;
      const int lu = view.level(i);
      for (int b = 0; b < 2; ++b) {
        const int c = view.child(i, b);
        if (c < 0 || wb[lu][b] == 0.0) continue;
        alpha[c] += alpha[i] * arc(lu, b, view.level(c));
        ++ops.multiplications;
        ++ops.additions;
      }
    }
  }

  std::vector<double> diff(static_cast<std::size_t>(n) + 2, 0.0);
  for (int c = begin; c < size; ++c) {
    const int lc = view.level(c);
    if (nv.entry[c] == 0.0 || beta[c] == 0.0 || lc == cut) continue;
    double through = nv.entry[c] * beta[c];
    ++ops.multiplications;
    if (rescale) {
      through *= ratio[lc];
      ++ops.multiplications;
    }
    diff[cut] += through;
    diff[lc] -= through;
    ops.additions += 2;
  }
  for (int i = begin; i < end; ++i) {
    const double a = alpha[i];
    if (a == 0.0) continue;
    const int lu = view.level(i);
    for (int b = 0; b < 2; ++b) {
      const double p = part[i - begin][b];
      if (p == 0.0) continue;
      const int lc = view.level(view.child(i, b));
      if (b == 0 && lc == lu + 1) continue;
      const double through = a * p;
      ++ops.multiplications;
      if (b == 1) {
        out.by_level[lu] += through;
        ++ops.additions;
      }
      if (lc > lu + 1) {
        diff[lu + 1] += through;
        diff[lc] -= through;
        ops.additions += 2;
      }
    }
  }
  double running = 0.0;
  for (int l = cut; l <= n; ++l) {
    if (diff[l] != 0.0) {
      // Cancellation can leave a tiny negative residue once every open arc has closed.
      running = std::max(0.0, running + diff[l]);
      ++ops.additions;
    }
    if (running != 0.0 && share[l] != 0.0) {
      out.by_level[l] += share[l] * running;
      ++ops.multiplications;
      ++ops.additions;
    }
  }
  out.total = uniform ? nv.terminal() : (view.term1() >= 0 ? alpha[view.term1()] : 0.0);
  return out;
}

LevelWeights uniform_weights(int n) { return LevelWeights(static_cast<std::size_t>(n) + 2, {0.5, 0.5}); }

LevelWeights prior_weights(const TroubleshootingModel& model, const CompiledKernel& k) {
  LevelWeights w = uniform_weights(k.order().size());
  for (const auto& c : model.cause_vars) w[k.cause_levels.at(c.name)] = {1.0 - c.prior_faulty, c.prior_faulty};
  return w;
}

void check_kernel_evidence(const CompiledKernel& k, const Evidence& e) {
  for (const auto& [name, value] : e.assignments)
    if (!k.order().contains(name)) throw UnknownVariable(name);
}

std::vector<double> per_cause(const CompiledKernel& k, const std::vector<std::string>& causes,
                              const std::vector<double>& by_level) {
  std::vector<double> out;
  for (const auto& c : causes) out.push_back(by_level[k.cause_levels.at(c)]);
  return out;
}

std::vector<std::string> cause_names(const CompiledKernel& k) {
  std::vector<std::pair<int, std::string>> byl;
  for (const auto& [name, level] : k.cause_levels) byl.emplace_back(level, name);
  std::sort(byl.begin(), byl.end());
  std::vector<std::string> out;
  for (auto& [l, name] : byl) out.push_back(std::move(name));
  return out;
}

}  // namespace

std::vector<std::uint64_t> cause_counts(const CompiledKernel& kernel, const Evidence& e, OpCounter* ops) {
  check_kernel_evidence(kernel, e);
  OpCounter local;
  const NodeValues nv = propagate(kernel.view, e, {}, &local, kernel.first_cause_level);
  const LayerMass lm = cause_layers(*kernel.view, nv, e, nullptr, local);
  if (ops) *ops += local;
  std::vector<std::uint64_t> out;
  for (double x : per_cause(kernel, cause_names(kernel), lm.by_level)) out.push_back(checked_count(x));
  return out;
}

std::map<std::string, std::uint64_t> cause_count_map(const CompiledKernel& kernel, const Evidence& e, OpCounter* ops) {
  const auto counts = cause_counts(kernel, e, ops);
  const auto names = cause_names(kernel);
  std::map<std::string, std::uint64_t> out;
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = counts[i];
  return out;
}

std::vector<WeightFunction> action_weights(const TroubleshootingModel& model,
                                           const std::map<std::string, bool>& observations) {
  std::vector<WeightFunction> out;
  for (const auto& [name, observed] : observations) {
    const ActionVar* a = model.find_action(name);
    if (!a) throw UnknownVariable(name);
    std::vector<double> table(a->cpt.size());
    for (std::uint64_t idx = 0; idx < table.size(); ++idx) table[idx] = a->likelihood(idx, observed);
    out.emplace_back(a->parents, std::move(table));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Posteriors

namespace {

struct Masses {
  std::vector<double> cards;
  std::vector<double> masses;
  double total = 0.0;
  OpCounter ops;
};

/// Cards and masses for one fully weighted propagation.
void accumulate(const TroubleshootingModel& model, const CompiledKernel& k, const std::vector<std::string>& causes,
                const Evidence& e, std::span<const WeightFunction> fns, double weight, Masses& m) {
  const bool single = k.mode.kind == FaultMode::Kind::ExactlyOne;
  const NodeValues nv = propagate(k.view, e, fns, &m.ops, k.first_cause_level);
  const LayerMass cards = cause_layers(*k.view, nv, e, nullptr, m.ops);
  const auto c = per_cause(k, causes, cards.by_level);
  for (std::size_t i = 0; i < c.size(); ++i) {
    m.cards[i] += weight * c[i];
    ++m.ops.multiplications;
    ++m.ops.additions;
  }
  if (single) return;
  const LevelWeights w = prior_weights(model, k);
  const LayerMass pri = cause_layers(*k.view, nv, e, &w, m.ops);
  const int nc = static_cast<int>(causes.size());
  const auto p = per_cause(k, causes, pri.by_level);
  for (std::size_t i = 0; i < p.size(); ++i) {
    m.masses[i] += weight * std::ldexp(p[i], -nc);
    m.ops.multiplications += 2;
    ++m.ops.additions;
  }
  m.total += weight * std::ldexp(pri.total, -nc);
  m.ops.multiplications += 2;
  ++m.ops.additions;
}

Masses single_pass(const TroubleshootingModel& model, const CompiledKernel& k, const std::vector<std::string>& causes,
                   const TsEvidence& e) {
  Masses m;
  m.cards.assign(causes.size(), 0.0);
  m.masses.assign(causes.size(), 0.0);
  std::vector<WeightFunction> fns;
  for (const auto& f : action_weights(model, e.action_observations))
    fns.push_back(f.restricted(e.kernel_evidence.assignments));
  const auto merged = merge_overlapping(std::move(fns), k.order(), &m.ops);
  accumulate(model, k, causes, e.kernel_evidence, merged, 1.0, m);
  return m;
}

/// One conditioned propagation per configuration of the observed actions'
/// parents, each weighted by the product of the action likelihoods.
Masses naive(const TroubleshootingModel& model, const CompiledKernel& k, const std::vector<std::string>& causes,
             const TsEvidence& e) {
  Masses m;
  m.cards.assign(causes.size(), 0.0);
  m.masses.assign(causes.size(), 0.0);
  std::vector<const ActionVar*> actions;
  std::vector<int> free_levels;
  for (const auto& [name, obs] : e.action_observations) {
    actions.push_back(model.find_action(name));
    for (const auto& p : actions.back()->parents) {
      const int l = k.order().level_of(p);
      if (!e.kernel_evidence.assignments.count(p) && std::find(free_levels.begin(), free_levels.end(), l) == free_levels.end())
        free_levels.push_back(l);
    }
  }
  std::sort(free_levels.begin(), free_levels.end());
  if (free_levels.size() > 24) throw InvalidArgument("too many action parents for the naive strategy");
  const std::uint64_t configs = std::uint64_t{1} << free_levels.size();
  for (std::uint64_t cfg = 0; cfg < configs; ++cfg) {
    Evidence ec = e.kernel_evidence;
    for (std::size_t j = 0; j < free_levels.size(); ++j) ec.set(k.order().name_at(free_levels[j]), (cfg >> j) & 1U);
    double weight = 1.0;
    for (const ActionVar* a : actions) {
      std::uint64_t idx = 0;
      for (std::size_t j = 0; j < a->parents.size(); ++j)
        if (ec.assignments.at(a->parents[j])) idx |= std::uint64_t{1} << j;
      weight *= a->likelihood(idx, e.action_observations.at(a->name));
      ++m.ops.multiplications;
    }
    if (weight == 0.0) continue;
    accumulate(model, k, causes, ec, {}, weight, m);
  }
  return m;
}

PosteriorResult finish(const TroubleshootingModel& model, const CompiledKernel& k, const std::vector<std::string>& causes,
                       Masses m, Strategy strategy) {
  PosteriorResult r;
  r.causes = causes;
  r.strategy = strategy;
  r.cards = std::move(m.cards);
  const std::size_t nc = causes.size();
  if (k.mode.kind == FaultMode::Kind::ExactlyOne) {
    std::vector<double> p(nc), q(nc);
    for (std::size_t i = 0; i < nc; ++i) {
      const double prior = model.find_cause(causes[i])->prior_faulty;
      p[i] = prior;
      q[i] = 1.0 - prior;
    }
    // Product of the "ok" priors of all other causes via prefix and suffix
    // products.
    std::vector<double> suffix(nc + 1, 1.0);
    for (std::size_t i = nc; i-- > 0;) {
      suffix[i] = suffix[i + 1] * q[i];
      ++m.ops.multiplications;
    }
    double prefix = 1.0;
    m.masses.assign(nc, 0.0);
    m.total = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
      m.masses[i] = p[i] * prefix * suffix[i + 1] * r.cards[i];
      m.total += m.masses[i];
      prefix *= q[i];
      m.ops.multiplications += 4;
      ++m.ops.additions;
    }
  }
  r.masses = std::move(m.masses);
  r.evidence_probability = m.total;
  r.consistent = m.total > 0.0;
  r.posteriors.assign(nc, 0.0);
  if (r.consistent) {
    for (std::size_t i = 0; i < nc; ++i) {
      r.posteriors[i] = r.masses[i] / m.total;
      ++m.ops.divisions;
    }
  }
  r.ops = m.ops;
  return r;
}

}  // namespace

PosteriorResult posteriors(const TroubleshootingModel& model, const CompiledKernel& kernel, const TsEvidence& e,
                           Strategy strategy, double tolerance) {
  check_kernel_evidence(kernel, e.kernel_evidence);
  for (const auto& [name, obs] : e.action_observations)
    if (!model.find_action(name)) throw UnknownVariable(name);
  const auto causes = cause_names(kernel);

  if (strategy == Strategy::Naive) {
    PosteriorResult r = finish(model, kernel, causes, naive(model, kernel, causes, e), Strategy::Naive);
    r.naive_ops = r.ops;
    return r;
  }
  PosteriorResult r = finish(model, kernel, causes, single_pass(model, kernel, causes, e), strategy);
  if (strategy == Strategy::SinglePass) return r;

  const PosteriorResult n = finish(model, kernel, causes, naive(model, kernel, causes, e), Strategy::Naive);
  r.naive_ops = n.ops;
  double gap = 0.0;
  for (std::size_t i = 0; i < causes.size(); ++i) gap = std::max(gap, std::fabs(r.posteriors[i] - n.posteriors[i]));
  r.strategy_gap = gap;
  const double scale = std::max(std::fabs(r.evidence_probability), std::fabs(n.evidence_probability));
  const bool mass_mismatch = std::fabs(r.evidence_probability - n.evidence_probability) > tolerance * std::max(scale, 1e-300);
  if (gap > tolerance || r.consistent != n.consistent || mass_mismatch) {
    std::ostringstream os;
    os << "naive and single-pass strategies disagree: max posterior gap " << gap << ", P(e) "
       << n.evidence_probability << " vs " << r.evidence_probability;
    throw VerificationError(os.str());
  }
  return r;
}

double evidence_probability(const TroubleshootingModel& model, const CompiledKernel& kernel, const TsEvidence& e) {
  return posteriors(model, kernel, e).evidence_probability;
}

}  // namespace tsbdd
