#include "tsbdd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tsbdd/errors.hpp"
#include "tsbdd/oracle.hpp"

namespace tsbdd {

// ---------------------------------------------------------------------------
// Rng

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw InvalidArgument("empty integer range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

std::vector<int> Rng::sample(int n, int k) {
  if (k > n || k < 0) throw InvalidArgument("cannot sample " + std::to_string(k) + " of " + std::to_string(n));
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) std::swap(pool[i], pool[static_cast<std::size_t>(uniform_int(i, n - 1))]);
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Generation

TroubleshootingModel generate_model(const GenSpec& spec) {
  if (spec.n_system < 1 || spec.n_cause < 1 || spec.n_action < 0)
    throw InvalidArgument("generator needs at least one system variable and one cause");
  if (spec.max_subsystems_per_node < 1) throw InvalidArgument("max_subsystems_per_node must be positive");
  if (spec.targets_min < 1 || spec.targets_max < spec.targets_min) throw InvalidArgument("bad targets_per_cause range");
  const int candidates = spec.n_system == 1 ? 1 : spec.n_system - 1;
  if (spec.targets_min > candidates)
    throw InvalidArgument("targets_per_cause minimum " + std::to_string(spec.targets_min) + " exceeds the " +
                          std::to_string(candidates) + " available targets");
  if (spec.n_action > 0 && (spec.parents_min < 1 || spec.parents_max < spec.parents_min || spec.parents_min > spec.n_system))
    throw InvalidArgument("bad action parent range");
  if (!(spec.prior_min > 0.0 && spec.prior_max < 1.0 && spec.prior_min <= spec.prior_max))
    throw InvalidArgument("prior range must lie inside (0, 1)");

  Rng rng(spec.seed);
  TroubleshootingModel m;
  m.problem_var = "S";
  for (int i = 0; i < spec.n_system; ++i) m.system_vars.push_back({i == 0 ? "S" : "S" + std::to_string(i), {}});

  std::vector<int> children(static_cast<std::size_t>(spec.n_system), 0);
  for (int i = 1; i < spec.n_system; ++i) {
    std::vector<int> open;
    for (int j = 0; j < i; ++j)
      if (children[j] < spec.max_subsystems_per_node) open.push_back(j);
    const int parent = open[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(open.size()) - 1))];
    ++children[parent];
    m.system_vars[parent].subsystems.push_back(m.system_vars[i].name);
  }

  const int first_target = spec.n_system == 1 ? 0 : 1;
  for (int c = 0; c < spec.n_cause; ++c) {
    const int k = static_cast<int>(rng.uniform_int(spec.targets_min, std::min(spec.targets_max, candidates)));
    CauseVar cv{"C" + std::to_string(c + 1), {}, 0.5};
    std::vector<int> picks = rng.sample(candidates, k);
    std::sort(picks.begin(), picks.end());
    for (int p : picks) cv.targets.push_back(m.system_vars[first_target + p].name);
    cv.prior_faulty = rng.uniform(spec.prior_min, spec.prior_max);
    m.cause_vars.push_back(std::move(cv));
  }
  for (const auto& s : m.system_vars) {
    if (!s.subsystems.empty()) continue;
    bool covered = false;
    for (const auto& c : m.cause_vars)
      covered = covered || std::find(c.targets.begin(), c.targets.end(), s.name) != c.targets.end();
    if (!covered) {
      auto& c = m.cause_vars[static_cast<std::size_t>(rng.uniform_int(0, spec.n_cause - 1))];
      c.targets.push_back(s.name);
    }
  }

  for (int a = 0; a < spec.n_action; ++a) {
    const int k = static_cast<int>(rng.uniform_int(spec.parents_min, std::min(spec.parents_max, spec.n_system)));
    ActionVar av{"A" + std::to_string(a + 1), {}, {}};
    for (int p : rng.sample(spec.n_system, k)) av.parents.push_back(m.system_vars[p].name);
    av.cpt.resize(std::size_t{1} << k);
    for (double& p : av.cpt) p = rng.uniform01();
    m.action_vars.push_back(std::move(av));
  }
  require_valid(m);
  return m;
}

std::vector<GenSpec> default_suite(std::uint64_t seed, int min_total, int max_total, int points, int per_point) {
  // (system, cause) shares of the total; actions take the rest.
  static const double kSplits[][2] = {{0.5, 0.3}, {0.6, 0.25}, {0.4, 0.4}};
  std::vector<GenSpec> out;
  for (int p = 0; p < points; ++p) {
    const int total =
        points == 1 ? min_total
                    : min_total + static_cast<int>(std::lround(static_cast<double>(p) * (max_total - min_total) / (points - 1)));
    for (int j = 0; j < per_point; ++j) {
      const auto& split = kSplits[j % 3];
      GenSpec g;
      g.n_system = std::max(1, static_cast<int>(std::lround(total * split[0])));
      g.n_cause = std::max(1, static_cast<int>(std::lround(total * split[1])));
      g.n_action = std::max(0, total - g.n_system - g.n_cause);
      g.seed = derive_seed(seed, static_cast<std::uint64_t>(p * per_point + j));
      out.push_back(g);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark

std::vector<BenchRecord> run_benchmark(const std::vector<GenSpec>& specs, const BenchOptions& options) {
  std::vector<BenchRecord> out;
  int id = 0;
  for (const auto& spec : specs) {
    const TroubleshootingModel model = generate_model(spec);
    BenchRecord r;
    r.model_id = id++;
    r.n_system = spec.n_system;
    r.n_cause = spec.n_cause;
    r.n_action = spec.n_action;
    r.mode = options.mode.to_string();

    const auto t0 = std::chrono::steady_clock::now();
    const CompiledKernel kernel = compile_kernel(model, options.mode, true);
    Rng rng(derive_seed(spec.seed, 0xE71D));
    TsEvidence e;
    e.kernel_evidence.set(model.problem_var, true);
    if (!model.action_vars.empty() && options.observed_max > 0) {
      const int k = static_cast<int>(rng.uniform_int(std::min(options.observed_min, static_cast<int>(model.action_vars.size())),
                                                     std::min(options.observed_max, static_cast<int>(model.action_vars.size()))));
      for (int a : rng.sample(static_cast<int>(model.action_vars.size()), k))
        e.action_observations[model.action_vars[a].name] = rng.coin();
    }
    const PosteriorResult pr =
        posteriors(model, kernel, e, options.verify_strategies ? Strategy::Both : Strategy::SinglePass);
    const auto t1 = std::chrono::steady_clock::now();

    r.nodes = kernel.node_count();
    r.unforced_nodes = kernel.bdd->node_count(kernel.unforced_root);
    r.size_bound = size_bound(model, options.mode);
    r.cause_layer_nodes = kernel.cause_layer_node_count();
    r.ops = pr.ops;
    cause_counts(kernel, e.kernel_evidence, &r.cause_count_ops);
    r.wall_ns = options.timing ? static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()) : 0;
    r.evidence = e.to_string();
    r.observed_actions = static_cast<int>(e.action_observations.size());
    for (double p : pr.posteriors) r.posterior_sum += p;
    r.strategy_gap = pr.strategy_gap;
    r.consistent = pr.consistent;
    out.push_back(std::move(r));
  }
  return out;
}

const std::string& csv_header() {
  static const std::string h = "model_id,n_system,n_cause,n_action,mode,nodes,size_bound,adds,muls,divs,wall_ns";
  return h;
}

void write_csv(std::ostream& os, const std::vector<BenchRecord>& records,
               const std::vector<std::pair<std::string, std::string>>& settings) {
  for (const auto& [k, v] : settings) os << "# " << k << "=" << v << "\n";
  os << csv_header() << "\n";
  for (const auto& r : records) {
    os << r.model_id << "," << r.n_system << "," << r.n_cause << "," << r.n_action << "," << r.mode << "," << r.nodes
       << "," << r.size_bound << "," << r.ops.additions << "," << r.ops.multiplications << "," << r.ops.divisions << ","
       << r.wall_ns << "\n";
  }
}

void write_json(std::ostream& os, const std::vector<BenchRecord>& records,
                const std::vector<std::pair<std::string, std::string>>& settings) {
  nlohmann::ordered_json doc;
  for (const auto& [k, v] : settings) doc["settings"][k] = v;
  doc["records"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["model_id"] = r.model_id;
    j["n_system"] = r.n_system;
    j["n_cause"] = r.n_cause;
    j["n_action"] = r.n_action;
    j["mode"] = r.mode;
    j["nodes"] = r.nodes;
    j["size_bound"] = r.size_bound;
    j["adds"] = r.ops.additions;
    j["muls"] = r.ops.multiplications;
    j["divs"] = r.ops.divisions;
    j["wall_ns"] = r.wall_ns;
    j["cause_layer_nodes"] = r.cause_layer_nodes;
    j["evidence"] = r.evidence;
    doc["records"].push_back(std::move(j));
  }
  os << doc.dump(2) << "\n";
}

void write_svg(std::ostream& os, const std::vector<BenchRecord>& records) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 20, B = 50;
  double xmin = 1e300, xmax = 0, ymin = 1e300, ymax = 0;
  for (const auto& r : records) {
    const double x = r.n_total();
    const double y = std::max<double>(1.0, static_cast<double>(r.ops.total()));
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (records.empty()) xmin = 0, xmax = 1, ymin = 1, ymax = 10;
  if (xmax <= xmin) xmax = xmin + 1;
  const double ly0 = std::floor(std::log10(ymin));
  double ly1 = std::ceil(std::log10(ymax));
  if (ly1 <= ly0) ly1 = ly0 + 1;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - ly0) / (ly1 - ly0) * (H - T - B); };

  char buf[160];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B, W - R, H - B);
  os << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, T, L, H - B);
  os << buf;
  for (int d = static_cast<int>(ly0); d <= static_cast<int>(ly1); ++d) {
    const double y = py(std::pow(10.0, d));
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">1e%d</text>\n", L - 6, y + 4, d);
    os << buf;
  }
  for (int i = 0; i <= 4; ++i) {
    const double x = xmin + (xmax - xmin) * i / 4;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">%.0f</text>\n", px(x),
                  H - B + 16, x);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\">total variables</text>\n",
                (L + W - R) / 2, H - 12);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 %g)\">operations</text>\n",
                (T + H - B) / 2, (T + H - B) / 2);
  os << buf;
  for (const auto& r : records) {
    const double y = std::max<double>(1.0, static_cast<double>(r.ops.total()));
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"2.5\" fill=\"steelblue\"/>\n", px(r.n_total()), py(y));
    os << buf;
  }
  os << "</svg>\n";
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("regression needs at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("regression needs distinct x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

}  // namespace

double power_law_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw InvalidArgument("power-law fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly).slope;
}

double linear_r2(const std::vector<double>& x, const std::vector<double>& y) { return fit_line(x, y).r2; }

// ---------------------------------------------------------------------------
// Session

void print_posteriors(std::ostream& os, const PosteriorResult& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-12s %16s %16s\n", "cause", "card", "posterior");
  os << buf;
  for (std::size_t i = 0; i < r.causes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-12s %16.10g %16.12f\n", r.causes[i].c_str(), r.cards[i], r.posteriors[i]);
    os << buf;
  }
  if (!r.consistent) os << "inconsistent evidence: P(e) = 0\n";
}

int run_session(const TroubleshootingModel& model, const CompiledKernel& kernel, std::istream& in, std::ostream& out,
                Strategy strategy) {
  TsEvidence e;
  int diagnostics = 0;
  auto show = [&] {
    out << "evidence: " << (e.empty() ? "(none)" : e.to_string()) << "\n";
    print_posteriors(out, posteriors(model, kernel, e, strategy));
  };
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream is(line);
    std::string first;
    if (!(is >> first)) continue;
    out << "> " << line.substr(line.find_first_not_of(" \t")) << "\n";
    try {
      if (first == "quit" || first == "exit") break;
      if (first == "show") {
        show();
      } else if (first == "retract") {
        std::string name;
        if (!(is >> name)) throw ParseError("retract needs a variable name", 0);
        if (!e.retract(name)) throw InvalidArgument("no evidence on '" + name + "'");
        show();
      } else {
        TsEvidence add = TsEvidence::parse(line, model);
        TsEvidence next = e;
        for (const auto& [k, v] : add.kernel_evidence.assignments) next.kernel_evidence.set(k, v);
        for (const auto& [k, v] : add.action_observations) next.action_observations[k] = v;
        e = std::move(next);
        show();
      }
    } catch (const Error& ex) {
      out << "error: " << ex.what() << "\n";
      ++diagnostics;
    }
  }
  return diagnostics;
}

// ---------------------------------------------------------------------------
// Oracle comparison

TsEvidence random_evidence(const TroubleshootingModel& model, Rng& rng, int max_kernel, int max_actions) {
  TsEvidence e;
  std::vector<std::string> kernel_vars;
  for (const auto& s : model.system_vars) kernel_vars.push_back(s.name);
  for (const auto& c : model.cause_vars) kernel_vars.push_back(c.name);
  const int nk = static_cast<int>(rng.uniform_int(0, std::min<int>(max_kernel, static_cast<int>(kernel_vars.size()))));
  for (int i : rng.sample(static_cast<int>(kernel_vars.size()), nk)) e.kernel_evidence.set(kernel_vars[i], rng.coin());
  const int na = static_cast<int>(
      rng.uniform_int(0, std::min<int>(max_actions, static_cast<int>(model.action_vars.size()))));
  for (int i : rng.sample(static_cast<int>(model.action_vars.size()), na))
    e.action_observations[model.action_vars[i].name] = rng.coin();
  return e;
}

namespace {

/// Evidence drawn from a random satisfying configuration so that most sets
/// have positive probability.
TsEvidence plausible_evidence(const TroubleshootingModel& model, const oracle::KernelOracle& ko, Rng& rng) {
  std::vector<std::uint64_t> sat;
  const std::uint64_t all = std::uint64_t{1} << ko.num_vars();
  for (std::uint64_t x = 0; x < all; ++x)
    if (ko.satisfies(x)) sat.push_back(x);
  TsEvidence e = random_evidence(model, rng, 3, 3);
  if (sat.empty()) return e;
  const std::uint64_t x = sat[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(sat.size()) - 1))];
  for (auto& [name, value] : e.kernel_evidence.assignments) {
    const auto& names = ko.variables();
    const auto b = std::find(names.begin(), names.end(), name) - names.begin();
    value = ((x >> b) & 1U) != 0;
  }
  return e;
}

}  // namespace

OracleCheckReport oracle_check(const TroubleshootingModel& model, FaultMode mode, int trials, std::uint64_t seed,
                               OracleCheckReport report) {
  ++report.models;
  const CompiledKernel kernel = compile_kernel(model, mode, true);
  const oracle::KernelOracle ko(model, mode, true);
  const VarOrder order = kernel.order();
  const Formula f = kernel_formula(model, mode, true);
  Rng rng(seed);
  auto fail = [&](const std::string& what, const TsEvidence& e) {
    report.failures.push_back(what + " [evidence " + e.to_string() + "]");
  };
  for (int t = 0; t < trials; ++t) {
    const TsEvidence e = rng.coin() || t == 0 ? plausible_evidence(model, ko, rng) : random_evidence(model, rng, 3, 3);
    ++report.evidence_sets;
    const auto& ke = e.kernel_evidence;
    const std::uint64_t engine_card = card_with_evidence(*kernel.bdd, ke);
    const std::uint64_t direct = oracle::brute_kernel_card(model, mode, true, ke.assignments);
    if (order.size() <= oracle::kMaxFormulaVars) {
      const std::uint64_t ast = oracle::brute_card(f, order, ke.assignments);
      if (ast != direct) {
        ++report.count_mismatches;
        fail("formula count " + std::to_string(ast) + " != direct count " + std::to_string(direct), e);
      }
    }
    if (engine_card != direct) {
      ++report.count_mismatches;
      fail("card " + std::to_string(engine_card) + " != oracle " + std::to_string(direct), e);
    }
    const auto counts = cause_counts(kernel, ke);
    const auto expected = oracle::brute_cause_counts(model, mode, true, ke.assignments);
    if (counts != expected) {
      ++report.count_mismatches;
      fail("cause counts differ from oracle", e);
    }
    const auto want = oracle::brute_posteriors(model, ke.assignments, e.action_observations, mode, true);
    for (Strategy s : {Strategy::SinglePass, Strategy::Naive}) {
      const PosteriorResult got = posteriors(model, kernel, e, s);
      if (got.consistent != want.consistent) {
        fail(to_string(s) + ": consistency flag differs from oracle", e);
        report.max_posterior_deviation = std::max(report.max_posterior_deviation, 1.0);
        continue;
      }
      for (std::size_t i = 0; i < got.posteriors.size(); ++i)
        report.max_posterior_deviation =
            std::max(report.max_posterior_deviation, std::fabs(got.posteriors[i] - want.posteriors[i]));
    }
    const PosteriorResult both = posteriors(model, kernel, e, Strategy::Both);
    report.max_strategy_gap = std::max(report.max_strategy_gap, both.strategy_gap);
  }
  return report;
}

OracleCheckReport oracle_check_random(int models, int trials, std::uint64_t seed, FaultMode mode) {
  OracleCheckReport report;
  Rng rng(seed);
  for (int i = 0; i < models; ++i) {
    GenSpec g;
    g.n_system = static_cast<int>(rng.uniform_int(1, 10));
    const int max_causes = std::min(6, oracle::kMaxKernelVars - g.n_system);
    g.n_cause = static_cast<int>(rng.uniform_int(1, max_causes));
    g.n_action = static_cast<int>(rng.uniform_int(0, 3));
    g.max_subsystems_per_node = static_cast<int>(rng.uniform_int(1, 4));
    g.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    const TroubleshootingModel m = generate_model(g);
    FaultMode md = mode;
    if (md.kind != FaultMode::Kind::ExactlyOne) md.m = std::min(md.m, g.n_cause);
    report = oracle_check(m, md, trials, derive_seed(seed ^ 0x5A5A, static_cast<std::uint64_t>(i)), std::move(report));
  }
  return report;
}

std::string freeze_json(const TroubleshootingModel& model, const std::vector<TsEvidence>& evidence,
                        const std::string& command_line) {
  nlohmann::ordered_json doc;
  doc["command"] = command_line;
  doc["model"] = serialize_model(model);
  doc["mode"] = FaultMode{}.to_string();
  doc["card_unforced"] = oracle::brute_kernel_card(model, {}, false);
  doc["card_forced"] = oracle::brute_kernel_card(model, {}, true);
  const auto counts = oracle::brute_cause_counts(model, {}, true);
  for (std::size_t i = 0; i < counts.size(); ++i) doc["cause_counts"][model.cause_vars[i].name] = counts[i];
  doc["cases"] = nlohmann::ordered_json::array();
  for (const auto& e : evidence) {
    const auto p = oracle::brute_posteriors(model, e.kernel_evidence.assignments, e.action_observations);
    nlohmann::ordered_json c;
    c["evidence"] = e.to_string();
    c["consistent"] = p.consistent;
    c["evidence_mass"] = p.evidence_mass;
    for (std::size_t i = 0; i < p.causes.size(); ++i) c["posteriors"][p.causes[i]] = p.posteriors[i];
    c["card_forced"] = oracle::brute_kernel_card(model, {}, true, e.kernel_evidence.assignments);
    doc["cases"].push_back(std::move(c));
  }
  return doc.dump(2) + "\n";
}

}  // namespace tsbdd
