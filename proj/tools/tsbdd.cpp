// Command line front end: model generation, compilation, counting,
// posteriors, benchmarks, oracle comparison, sessions and golden freezing.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsbdd/bench.hpp"
#include "tsbdd/counting.hpp"
#include "tsbdd/errors.hpp"
#include "tsbdd/formula.hpp"
#include "tsbdd/inference.hpp"
#include "tsbdd/kernel.hpp"
#include "tsbdd/oracle.hpp"
#include "tsbdd/robdd.hpp"
#include "tsbdd/ts_model.hpp"

namespace {

using namespace tsbdd;
using json = nlohmann::ordered_json;

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kMismatch = 3 };

struct UsageError : Error {
  using Error::Error;
};

struct Globals {
  std::uint64_t seed = 1;
  std::string mode = "exactly-one";
  std::string format = "csv";
  std::string out;
};

/// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw Error("cannot write '" + path + "'");
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string short_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

bool is_json(const Globals& g) { return g.format == "json"; }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// "a=1,b=0" for formula variables.
Evidence parse_assignment(const std::string& text) {
  Evidence e;
  for (const auto& item : split_list(text)) {
    const auto eq = item.find('=');
    bool value = false;
    if (eq == std::string::npos || !parse_state(std::string_view(item).substr(eq + 1), value))
      throw UsageError("bad evidence item '" + item + "' (expected name=value)");
    e.set(item.substr(0, eq), value);
  }
  return e;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  GenSpec spec;
};

int cmd_gen(const Globals& g, GenArgs a) {
  a.spec.seed = g.seed;
  const auto model = generate_model(a.spec);
  Sink sink(g.out);
  sink.os() << "# generated: seed=" << g.seed << " n_system=" << a.spec.n_system << " n_cause=" << a.spec.n_cause
            << " n_action=" << a.spec.n_action << "\n"
            << serialize_model(model);
  return kOk;
}

struct CompileArgs {
  std::string model;
  bool force = true;
  std::string dot;
};

int cmd_compile(const Globals& g, const CompileArgs& a) {
  const auto model = load_model(a.model);
  const auto mode = FaultMode::parse(g.mode);
  const auto k = compile_kernel(model, mode, a.force);
  const auto card = card_with_evidence(*k.bdd, {});
  const auto bound = size_bound(model, mode);
  if (!a.dot.empty()) {
    std::ofstream dot(a.dot, std::ios::binary);
    if (!dot) throw Error("cannot write '" + a.dot + "'");
    dot << k.bdd->to_dot(k.root);
  }
  Sink sink(g.out);
  auto& os = sink.os();
  std::string order;
  for (const auto& n : k.order().names()) order += (order.empty() ? "" : " ") + n;
  if (is_json(g)) {
    json doc;
    doc["model"] = a.model;
    doc["mode"] = mode.to_string();
    doc["force_faulty"] = a.force;
    doc["order"] = k.order().names();
    doc["n_system"] = model.system_vars.size();
    doc["n_cause"] = model.cause_vars.size();
    doc["nodes"] = k.node_count();
    doc["size_bound"] = bound;
    doc["cause_layer_nodes"] = k.cause_layer_node_count();
    doc["cause_layer_bound"] = cause_layer_bound(model.cause_vars.size(), mode);
    doc["card"] = card;
    os << doc.dump(2) << "\n";
  } else {
    os << "mode,force_faulty,n_system,n_cause,nodes,size_bound,cause_layer_nodes,cause_layer_bound,card,order\n"
       << mode.to_string() << "," << (a.force ? 1 : 0) << "," << model.system_vars.size() << ","
       << model.cause_vars.size() << "," << k.node_count() << "," << bound << "," << k.cause_layer_node_count() << ","
       << cause_layer_bound(model.cause_vars.size(), mode) << "," << card << "," << order << "\n";
  }
  // The size bound is only claimed for single faults.
  return k.node_count() <= bound || mode != FaultMode::exactly_one() ? kOk : kMismatch;
}

struct CountArgs {
  std::string model;
  std::string formula;
  std::string order;
  std::string evidence;
  bool force = true;
  bool verify = false;
};

int count_formula(const Globals& g, const CountArgs& a) {
  const Formula f = parse_formula(a.formula);
  const VarOrder order(a.order.empty() ? f.variables() : split_list(a.order));
  const Evidence e = parse_assignment(a.evidence);
  const Robdd bdd = build(f, order);
  OpCounter ops;
  const auto n = card_with_evidence(bdd, e, &ops);
  if (a.verify) {
    const auto expected = oracle::brute_card(f, order, e.assignments);
    if (expected != n)
      throw VerificationError("card " + std::to_string(n) + " but enumeration gives " + std::to_string(expected));
  }
  Sink sink(g.out);
  if (is_json(g)) {
    json doc;
    doc["formula"] = f.to_string();
    doc["order"] = order.names();
    doc["nodes"] = bdd.node_count();
    doc["card"] = n;
    doc["ops"] = {{"adds", ops.additions}, {"muls", ops.multiplications}, {"divs", ops.divisions}};
    sink.os() << doc.dump(2) << "\n";
  } else {
    sink.os() << "nodes,card,adds,muls,divs\n"
              << bdd.node_count() << "," << n << "," << ops.additions << "," << ops.multiplications << ","
              << ops.divisions << "\n";
  }
  return kOk;
}

int count_model(const Globals& g, const CountArgs& a) {
  const auto model = load_model(a.model);
  const auto mode = FaultMode::parse(g.mode);
  const auto k = compile_kernel(model, mode, a.force);
  const auto ev = TsEvidence::parse(a.evidence, model);
  if (!ev.action_observations.empty()) throw UsageError("count takes kernel evidence only");
  OpCounter ops;
  const auto n = card_with_evidence(*k.bdd, ev.kernel_evidence);
  const auto counts = cause_counts(k, ev.kernel_evidence, &ops);
  if (a.verify) {
    const auto& e = ev.kernel_evidence.assignments;
    if (model.num_kernel_vars() > oracle::kMaxKernelVars)
      throw UsageError("--verify needs at most " + std::to_string(oracle::kMaxKernelVars) + " kernel variables");
    if (oracle::brute_kernel_card(model, mode, a.force, e) != n ||
        oracle::brute_cause_counts(model, mode, a.force, e) != counts)
      throw VerificationError("counts disagree with enumeration");
  }
  Sink sink(g.out);
  if (is_json(g)) {
    json doc;
    doc["mode"] = mode.to_string();
    doc["evidence"] = ev.to_string();
    doc["card"] = n;
    json cc = json::object();
    for (std::size_t i = 0; i < counts.size(); ++i) cc[model.cause_vars[i].name] = counts[i];
    doc["cause_counts"] = cc;
    doc["ops"] = {{"adds", ops.additions}, {"muls", ops.multiplications}, {"divs", ops.divisions}};
    sink.os() << doc.dump(2) << "\n";
  } else {
    auto& os = sink.os();
    os << "item,count\ncard," << n << "\n";
    for (std::size_t i = 0; i < counts.size(); ++i) os << model.cause_vars[i].name << "," << counts[i] << "\n";
  }
  return kOk;
}

int cmd_count(const Globals& g, const CountArgs& a) {
  if (a.model.empty() == a.formula.empty()) throw UsageError("count needs exactly one of --model or --formula");
  return a.formula.empty() ? count_model(g, a) : count_formula(g, a);
}

struct PosteriorArgs {
  std::string model;
  std::string evidence;
  std::string strategy = "single-pass";
  bool force = true;
};

int cmd_posterior(const Globals& g, const PosteriorArgs& a) {
  const auto model = load_model(a.model);
  const auto mode = FaultMode::parse(g.mode);
  const auto strategy = parse_strategy(a.strategy);
  const auto k = compile_kernel(model, mode, a.force);
  const auto ev = TsEvidence::parse(a.evidence, model);
  const auto r = posteriors(model, k, ev, strategy);
  Sink sink(g.out);
  auto& os = sink.os();
  if (is_json(g)) {
    json doc;
    doc["mode"] = mode.to_string();
    doc["strategy"] = to_string(r.strategy);
    doc["evidence"] = ev.to_string();
    doc["consistent"] = r.consistent;
    doc["evidence_probability"] = r.evidence_probability;
    json rows = json::array();
    for (std::size_t i = 0; i < r.causes.size(); ++i)
      rows.push_back({{"cause", r.causes[i]}, {"card", r.cards[i]}, {"mass", r.masses[i]}, {"posterior", r.posteriors[i]}});
    doc["causes"] = rows;
    doc["ops"] = {{"adds", r.ops.additions}, {"muls", r.ops.multiplications}, {"divs", r.ops.divisions}};
    if (strategy != Strategy::SinglePass)
      doc["naive_ops"] = {{"adds", r.naive_ops.additions},
                          {"muls", r.naive_ops.multiplications},
                          {"divs", r.naive_ops.divisions}};
    if (strategy == Strategy::Both) doc["strategy_gap"] = r.strategy_gap;
    os << doc.dump(2) << "\n";
  } else {
    os << "# evidence=" << ev.to_string() << "\n"
       << "# strategy=" << to_string(r.strategy) << "\n"
       << "# consistent=" << (r.consistent ? 1 : 0) << "\n"
       << "# evidence_probability=" << fmt(r.evidence_probability) << "\n"
       << "# ops=" << r.ops.total() << "\n";
    if (strategy != Strategy::SinglePass) os << "# naive_ops=" << r.naive_ops.total() << "\n";
    if (strategy == Strategy::Both) os << "# strategy_gap=" << fmt(r.strategy_gap) << "\n";
    os << "cause,card,posterior\n";
    for (std::size_t i = 0; i < r.causes.size(); ++i)
      os << r.causes[i] << "," << fmt(r.cards[i]) << "," << fmt(r.posteriors[i]) << "\n";
  }
  return kOk;
}

struct BenchArgs {
  int min_total = 21;
  int max_total = 322;
  int points = 15;
  int per_point = 15;
  int observed_min = 1;
  int observed_max = 3;
  bool verify = false;
  bool timing = false;
  std::string svg;
};

int cmd_bench(const Globals& g, const BenchArgs& a) {
  if (a.points < 1 || a.per_point < 1 || a.min_total > a.max_total) throw UsageError("bad suite dimensions");
  if (a.observed_min < 0 || a.observed_min > a.observed_max) throw UsageError("bad observed action range");
  BenchOptions opt;
  opt.mode = FaultMode::parse(g.mode);
  opt.observed_min = a.observed_min;
  opt.observed_max = a.observed_max;
  opt.verify_strategies = a.verify;
  opt.timing = a.timing;
  const auto specs = default_suite(g.seed, a.min_total, a.max_total, a.points, a.per_point);
  const auto records = run_benchmark(specs, opt);
  const GenSpec defaults;
  const std::vector<std::pair<std::string, std::string>> settings = {
      {"seed", std::to_string(g.seed)},
      {"mode", opt.mode.to_string()},
      {"total_range", std::to_string(a.min_total) + ".." + std::to_string(a.max_total)},
      {"points", std::to_string(a.points)},
      {"per_point", std::to_string(a.per_point)},
      {"observed_actions", std::to_string(a.observed_min) + ".." + std::to_string(a.observed_max)},
      {"tree", "uniform random attachment, at most " + std::to_string(defaults.max_subsystems_per_node) +
                   " subsystems per node"},
      {"cause_targets", std::to_string(defaults.targets_min) + ".." + std::to_string(defaults.targets_max) +
                            " uniform among non-root system variables"},
      {"cause_priors", "uniform in [" + short_num(defaults.prior_min) + "," + short_num(defaults.prior_max) + "]"},
      {"action_parents", std::to_string(defaults.parents_min) + ".." + std::to_string(defaults.parents_max)},
      {"cpt_entries", "uniform in [0,1]"},
      {"ops", "one full posterior computation (single-pass)"},
      {"wall_ns", a.timing ? "measured" : "disabled (0)"},
  };
  {
    Sink sink(g.out);
    if (is_json(g))
      write_json(sink.os(), records, settings);
    else
      write_csv(sink.os(), records, settings);
  }
  if (!a.svg.empty()) {
    std::ofstream svg(a.svg, std::ios::binary);
    if (!svg) throw Error("cannot write '" + a.svg + "'");
    write_svg(svg, records);
  }
  std::vector<double> n, ops;
  int violations = 0;
  for (const auto& r : records) {
    n.push_back(r.n_kernel());
    ops.push_back(static_cast<double>(r.ops.total()));
    if (r.nodes > r.size_bound) ++violations;
  }
  std::cerr << records.size() << " models, " << violations << " size bound violations";
  if (records.size() > 1) std::cerr << ", ops ~ n^" << std::setprecision(3) << power_law_exponent(n, ops);
  std::cerr << "\n";
  return violations == 0 || opt.mode != FaultMode::exactly_one() ? kOk : kMismatch;
}

struct OracleArgs {
  std::string model;
  int trials = 5;
  int models = 200;
  double tolerance = 1e-9;
};

int cmd_oracle_check(const Globals& g, const OracleArgs& a) {
  if (a.trials < 1 || a.models < 1) throw UsageError("--trials and --models must be positive");
  const auto mode = FaultMode::parse(g.mode);
  const auto report =
      a.model.empty() ? oracle_check_random(a.models, a.trials, g.seed, mode)
                      : oracle_check(load_model(a.model), mode, a.trials, g.seed);
  const bool ok = report.count_mismatches == 0 && report.max_posterior_deviation <= a.tolerance &&
                  report.max_strategy_gap <= a.tolerance;
  Sink sink(g.out);
  auto& os = sink.os();
  if (is_json(g)) {
    json doc;
    doc["models"] = report.models;
    doc["evidence_sets"] = report.evidence_sets;
    doc["count_mismatches"] = report.count_mismatches;
    doc["max_posterior_deviation"] = report.max_posterior_deviation;
    doc["max_strategy_gap"] = report.max_strategy_gap;
    doc["tolerance"] = a.tolerance;
    doc["ok"] = ok;
    doc["failures"] = report.failures;
    os << doc.dump(2) << "\n";
  } else {
    os << "models,evidence_sets,count_mismatches,max_posterior_deviation,max_strategy_gap,ok\n"
       << report.models << "," << report.evidence_sets << "," << report.count_mismatches << ","
       << fmt(report.max_posterior_deviation) << "," << fmt(report.max_strategy_gap) << "," << (ok ? 1 : 0) << "\n";
  }
  for (const auto& f : report.failures) std::cerr << "mismatch: " << f << "\n";
  return ok ? kOk : kMismatch;
}

struct SessionArgs {
  std::string model;
  std::string input;
  std::string strategy = "single-pass";
  bool force = true;
};

int cmd_session(const Globals& g, const SessionArgs& a) {
  const auto model = load_model(a.model);
  const auto k = compile_kernel(model, FaultMode::parse(g.mode), a.force);
  const auto strategy = parse_strategy(a.strategy);
  Sink sink(g.out);
  if (a.input.empty() || a.input == "-") {
    run_session(model, k, std::cin, sink.os(), strategy);
  } else {
    std::ifstream in(a.input);
    if (!in) throw Error("cannot read '" + a.input + "'");
    run_session(model, k, in, sink.os(), strategy);
  }
  return kOk;
}

struct FreezeArgs {
  std::string model;
  std::vector<std::string> evidence;
};

int cmd_freeze(const Globals& g, const FreezeArgs& a, const std::string& command_line) {
  if (FaultMode::parse(g.mode) != FaultMode::exactly_one()) throw UsageError("freeze records exactly-one values");
  const auto model = load_model(a.model);
  std::vector<TsEvidence> cases;
  for (const auto& text : a.evidence) cases.push_back(TsEvidence::parse(text, model));
  const auto doc = freeze_json(model, cases, command_line);
  Sink sink(g.out);
  sink.os() << doc;
  if (doc.empty() || doc.back() != '\n') sink.os() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ROBDD inference for troubleshooting models"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--mode", g.mode, "exactly-one | exactly-m=<m> | at-most-m=<m>")->capture_default_str();
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--out", g.out, "Output file (default stdout)");

  auto force_flag = [](CLI::App* sub, bool& force) {
    sub->add_flag("--force-faulty,!--no-force-faulty", force, "Condition on the problem variable being faulty")
        ->capture_default_str();
  };

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random model");
  gen_cmd->add_option("--n-system", gen.spec.n_system)->capture_default_str();
  gen_cmd->add_option("--n-cause", gen.spec.n_cause)->capture_default_str();
  gen_cmd->add_option("--n-action", gen.spec.n_action)->capture_default_str();
  gen_cmd->add_option("--max-subsystems", gen.spec.max_subsystems_per_node)->capture_default_str();
  gen_cmd->add_option("--targets-min", gen.spec.targets_min)->capture_default_str();
  gen_cmd->add_option("--targets-max", gen.spec.targets_max)->capture_default_str();
  gen_cmd->add_option("--parents-min", gen.spec.parents_min)->capture_default_str();
  gen_cmd->add_option("--parents-max", gen.spec.parents_max)->capture_default_str();
  gen_cmd->add_option("--prior-min", gen.spec.prior_min)->capture_default_str();
  gen_cmd->add_option("--prior-max", gen.spec.prior_max)->capture_default_str();

  CompileArgs comp;
  auto* comp_cmd = app.add_subcommand("compile", "Compile a model's kernel");
  comp_cmd->add_option("--model", comp.model, "Model file")->required();
  force_flag(comp_cmd, comp.force);
  comp_cmd->add_option("--dump-dot", comp.dot, "Write the diagram in DOT format");

  CountArgs cnt;
  auto* cnt_cmd = app.add_subcommand("count", "Count satisfying configurations");
  cnt_cmd->add_option("--model", cnt.model, "Model file");
  cnt_cmd->add_option("--formula", cnt.formula, "Formula text");
  cnt_cmd->add_option("--order", cnt.order, "Variable order for --formula (comma separated)");
  cnt_cmd->add_option("--evidence", cnt.evidence, "Partial assignment, e.g. \"S3=faulty\" or \"a=1,b=0\"");
  force_flag(cnt_cmd, cnt.force);
  cnt_cmd->add_flag("--verify", cnt.verify, "Cross-check with exhaustive enumeration");

  PosteriorArgs post;
  auto* post_cmd = app.add_subcommand("posterior", "Cause posteriors given evidence");
  post_cmd->add_option("--model", post.model, "Model file")->required();
  post_cmd->add_option("--evidence", post.evidence, "e.g. \"S3=faulty,A=y\"");
  post_cmd->add_option("--strategy", post.strategy, "naive | single-pass | both")->capture_default_str();
  force_flag(post_cmd, post.force);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark over random models");
  bench_cmd->add_option("--min-total", bench.min_total)->capture_default_str();
  bench_cmd->add_option("--max-total", bench.max_total)->capture_default_str();
  bench_cmd->add_option("--points", bench.points)->capture_default_str();
  bench_cmd->add_option("--per-point", bench.per_point)->capture_default_str();
  bench_cmd->add_option("--observed-min", bench.observed_min)->capture_default_str();
  bench_cmd->add_option("--observed-max", bench.observed_max)->capture_default_str();
  bench_cmd->add_flag("--verify-strategies", bench.verify, "Also run the naive strategy and compare");
  bench_cmd->add_flag("--timing", bench.timing, "Record wall time (output is then not reproducible)");
  bench_cmd->add_option("--svg", bench.svg, "Write an ops scatter plot");

  OracleArgs orc;
  auto* orc_cmd = app.add_subcommand("oracle-check", "Compare the engine with exhaustive enumeration");
  orc_cmd->add_option("--model", orc.model, "Model file (random models when omitted)");
  orc_cmd->add_option("--trials", orc.trials, "Evidence sets per model")->capture_default_str();
  orc_cmd->add_option("--models", orc.models, "Random models when --model is omitted")->capture_default_str();
  orc_cmd->add_option("--tolerance", orc.tolerance)->capture_default_str();

  SessionArgs ses;
  auto* ses_cmd = app.add_subcommand("session", "Interactive evidence entry");
  ses_cmd->add_option("--model", ses.model, "Model file")->required();
  ses_cmd->add_option("--input", ses.input, "Statement file (default stdin)");
  ses_cmd->add_option("--strategy", ses.strategy)->capture_default_str();
  force_flag(ses_cmd, ses.force);

  FreezeArgs frz;
  auto* frz_cmd = app.add_subcommand("freeze", "Write oracle reference values as JSON");
  frz_cmd->add_option("--model", frz.model, "Model file")->required();
  frz_cmd->add_option("--evidence", frz.evidence, "Evidence set (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  std::string command_line = "tsbdd";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const bool plain = !arg.empty() && arg.find_first_of(" \t'\"\\$;&|<>*?") == std::string::npos;
    command_line += " " + (plain ? arg : "'" + arg + "'");
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(g, gen);
    if (comp_cmd->parsed()) return cmd_compile(g, comp);
    if (cnt_cmd->parsed()) return cmd_count(g, cnt);
    if (post_cmd->parsed()) return cmd_posterior(g, post);
    if (bench_cmd->parsed()) return cmd_bench(g, bench);
    if (orc_cmd->parsed()) return cmd_oracle_check(g, orc);
    if (ses_cmd->parsed()) return cmd_session(g, ses);
    if (frz_cmd->parsed()) return cmd_freeze(g, frz, command_line);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kValidation;
  } catch (const VerificationError& e) {
    std::cerr << "verification mismatch: " << e.what() << "\n";
    return kMismatch;
  } catch (const Error& e) {
    // Unknown names, oversized oracle inputs and other rejected arguments.
    std::cerr << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
