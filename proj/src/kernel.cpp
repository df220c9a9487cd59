#include "tsbdd/kernel.hpp"

#include <charconv>
#include <deque>
#include <limits>
#include <optional>
#include <unordered_map>

#include "tsbdd/errors.hpp"

namespace tsbdd {

FaultMode FaultMode::parse(std::string_view text) {
  if (text == "exactly-one") return exactly_one();
  auto parse_m = [&](std::string_view prefix, Kind kind) -> std::optional<FaultMode> {
    if (text.substr(0, prefix.size()) != prefix) return std::nullopt;
    const auto digits = text.substr(prefix.size());
    int m = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), m);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || m < 1)
      throw InvalidArgument("bad fault mode '" + std::string(text) + "'");
    return FaultMode{kind, m};
  };
  if (auto f = parse_m("exactly-m=", Kind::ExactlyM)) return *f;
  if (auto f = parse_m("at-most-m=", Kind::AtMostM)) return *f;
  throw InvalidArgument("unknown fault mode '" + std::string(text) +
                        "' (expected exactly-one, exactly-m=<m> or at-most-m=<m>)");
}

std::string FaultMode::to_string() const {
  switch (kind) {
    case Kind::ExactlyOne: return "exactly-one";
    case Kind::ExactlyM: return "exactly-m=" + std::to_string(m);
    case Kind::AtMostM: return "at-most-m=" + std::to_string(m);
  }
  return "?";
}

std::size_t CompiledKernel::cause_layer_node_count() const {
  std::size_t n = 0;
  for (int l = first_cause_level; l <= bdd->num_vars(); ++l) n += bdd->layer(root, l).size();
  return n;
}

VarOrder order_variables(const TroubleshootingModel& model) {
  require_valid(model);
  std::unordered_map<std::string, const SystemVar*> sys;
  std::unordered_map<std::string, int> pending;
  for (const auto& s : model.system_vars) sys.emplace(s.name, &s);
  for (const auto& s : model.system_vars)
    for (const auto& sub : s.subsystems) ++pending[sub];
  VarOrder order;
  std::deque<std::string> queue{model.problem_var};
  while (!queue.empty()) {
    const std::string x = queue.front();
    queue.pop_front();
    order.add(x);
    for (const auto& sub : sys.at(x)->subsystems)
      if (--pending[sub] == 0) queue.push_back(sub);
  }
  for (const auto& c : model.cause_vars) order.add(c.name);
  return order;
}

namespace {

void check_mode(const TroubleshootingModel& model, FaultMode mode) {
  if (mode.m < 1) throw InvalidArgument("fault mode needs m >= 1");
  if (mode.kind != FaultMode::Kind::ExactlyOne && mode.m > static_cast<int>(model.cause_vars.size()))
    throw InvalidArgument("fault mode " + mode.to_string() + " exceeds the number of causes (" +
                          std::to_string(model.cause_vars.size()) + ")");
}

std::pair<int, int> cause_count_range(FaultMode mode) {
  switch (mode.kind) {
    case FaultMode::Kind::ExactlyOne: return {1, 1};
    case FaultMode::Kind::ExactlyM: return {mode.m, mode.m};
    case FaultMode::Kind::AtMostM: return {1, mode.m};
  }
  return {1, 1};
}

}  // namespace

CompiledKernel compile_kernel(const TroubleshootingModel& model, FaultMode mode, bool force_problem_faulty) {
  check_mode(model, mode);
  VarOrder order = order_variables(model);
  auto bdd = std::make_shared<Robdd>(order);
  const bool single = mode.kind == FaultMode::Kind::ExactlyOne;

  auto levels_of = [&](const std::vector<std::string>& names) {
    std::vector<int> out;
    for (const auto& n : names) out.push_back(order.level_of(n));
    return out;
  };

  NodeRef acc = kTerm1;
  for (int l = 1; l <= order.size(); ++l) {
    const SystemVar* t = model.find_system(order.name_at(l));
    if (!t || t->subsystems.empty()) continue;
    const auto subs = levels_of(t->subsystems);
    const int k = static_cast<int>(subs.size());
    const NodeRef x = bdd->literal(l, true);
    NodeRef f = single ? bdd->ite(x, bdd->cardinality(subs, 1, 1), bdd->cardinality(subs, 0, 0))
                       : bdd->apply(BinOp::Iff, x, bdd->cardinality(subs, 1, k));
    acc = bdd->apply(BinOp::And, acc, f);
  }
  for (const auto& c : model.cause_vars) {
    const NodeRef g = bdd->apply(BinOp::Implies, bdd->var(c.name), bdd->cardinality(levels_of(c.targets), 1, 1));
    acc = bdd->apply(BinOp::And, acc, g);
  }
  std::vector<std::string> cause_names;
  for (const auto& c : model.cause_vars) cause_names.push_back(c.name);
  const auto causes = levels_of(cause_names);
  const auto [lo, hi] = cause_count_range(mode);
  const NodeRef s = bdd->var(model.problem_var);
  acc = bdd->apply(BinOp::And, acc, bdd->ite(s, bdd->cardinality(causes, lo, hi), bdd->cardinality(causes, 0, 0)));

  CompiledKernel k;
  k.unforced_root = acc;
  k.root = force_problem_faulty ? bdd->apply(BinOp::And, acc, s) : acc;
  bdd->set_root(k.root);
  k.force_problem_faulty = force_problem_faulty;
  k.mode = mode;
  for (const auto& c : model.cause_vars) k.cause_levels[c.name] = order.level_of(c.name);
  k.first_cause_level = static_cast<int>(model.system_vars.size()) + 1;
  k.view = std::make_shared<const DiagramView>(*bdd, k.root);
  k.bdd = std::move(bdd);
  return k;
}

namespace {

/// lo <= (number of true fs) <= hi, as nested if-then-else with shared
/// subformulas.
Formula count_between(const std::vector<Formula>& fs, int lo, int hi) {
  const int k = static_cast<int>(fs.size());
  hi = std::min(hi, k);
  if (lo > hi) return Formula::constant(false);
  std::vector<Formula> next;
  for (int c = 0; c <= hi + 1; ++c) next.push_back(Formula::constant(c >= lo && c <= hi));
  for (int i = k - 1; i >= 0; --i) {
    std::vector<Formula> cur;
    for (int c = 0; c <= hi + 1; ++c) cur.push_back(Formula::ite(fs[i], next[std::min(c + 1, hi + 1)], next[c]));
    next = std::move(cur);
  }
  return next[0];
}

std::vector<Formula> vars(const std::vector<std::string>& names) {
  std::vector<Formula> out;
  for (const auto& n : names) out.push_back(Formula::var(n));
  return out;
}

Formula none_of(const std::vector<Formula>& fs) {
  std::vector<Formula> neg;
  for (const auto& f : fs) neg.push_back(!f);
  return Formula::all_of(std::move(neg));
}

}  // namespace

Formula kernel_formula(const TroubleshootingModel& model, FaultMode mode, bool force_problem_faulty) {
  check_mode(model, mode);
  const VarOrder order = order_variables(model);
  const bool single = mode.kind == FaultMode::Kind::ExactlyOne;
  std::vector<Formula> conj;
  for (int l = 1; l <= order.size(); ++l) {
    const SystemVar* t = model.find_system(order.name_at(l));
    if (!t || t->subsystems.empty()) continue;
    const Formula x = Formula::var(t->name);
    const auto subs = vars(t->subsystems);
    if (single)
      conj.push_back((x & Formula::exactly_one(subs)) | (Formula::negate(x) & none_of(subs)));
    else
      conj.push_back(Formula::iff(x, Formula::any_of(subs)));
  }
  for (const auto& c : model.cause_vars)
    conj.push_back(Formula::implies(Formula::var(c.name), Formula::exactly_one(vars(c.targets))));
  std::vector<std::string> cause_names;
  for (const auto& c : model.cause_vars) cause_names.push_back(c.name);
  const auto causes = vars(cause_names);
  const Formula s = Formula::var(model.problem_var);
  const auto [lo, hi] = cause_count_range(mode);
  const Formula faulty = single ? Formula::exactly_one(causes) : count_between(causes, lo, hi);
  conj.push_back((s & faulty) | (Formula::negate(s) & none_of(causes)));
  if (force_problem_faulty) conj.push_back(s);
  return Formula::all_of(std::move(conj));
}

namespace {

constexpr std::uint64_t kSat = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a > kSat - b ? kSat : a + b; }
std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  return a > kSat / b ? kSat : a * b;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays integral; guard the intermediate product.
    const std::uint64_t num = n - k + i;
    if (r > kSat / num) return kSat;
    r = r * num / i;
  }
  return r;
}

}  // namespace

std::uint64_t cause_layer_bound(std::uint64_t n_cause, FaultMode mode) {
  switch (mode.kind) {
    case FaultMode::Kind::ExactlyOne: return sat_mul(n_cause, n_cause);
    case FaultMode::Kind::ExactlyM: return sat_mul(n_cause, binomial(n_cause, static_cast<std::uint64_t>(mode.m)));
    case FaultMode::Kind::AtMostM: {
      std::uint64_t sum = 0;
      for (int i = 1; i <= mode.m; ++i) sum = sat_add(sum, binomial(n_cause, static_cast<std::uint64_t>(i)));
      return sat_mul(n_cause, sum);
    }
  }
  return kSat;
}

std::uint64_t size_bound(std::uint64_t n_system, std::uint64_t n_cause, FaultMode mode) {
  const std::uint64_t a = n_system % 2 == 0 ? sat_mul(n_system / 2, n_system + 1) : sat_mul(n_system, (n_system + 1) / 2);
  return sat_add(sat_add(a, cause_layer_bound(n_cause, mode)), 2);
}

std::uint64_t size_bound(const TroubleshootingModel& model, FaultMode mode) {
  return size_bound(model.system_vars.size(), model.cause_vars.size(), mode);
}

}  // namespace tsbdd
