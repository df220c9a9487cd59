#include "tsbdd/ts_model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "tsbdd/errors.hpp"

namespace tsbdd {

const SystemVar* TroubleshootingModel::find_system(std::string_view name) const {
  for (const auto& s : system_vars)
    if (s.name == name) return &s;
  return nullptr;
}

const CauseVar* TroubleshootingModel::find_cause(std::string_view name) const {
  for (const auto& c : cause_vars)
    if (c.name == name) return &c;
  return nullptr;
}

const ActionVar* TroubleshootingModel::find_action(std::string_view name) const {
  for (const auto& a : action_vars)
    if (a.name == name) return &a;
  return nullptr;
}

// ---------------------------------------------------------------------------
// validate

namespace {

enum class Kind { System, Cause, Action };

bool valid_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

std::vector<ModelIssue> validate(const TroubleshootingModel& model) {
  std::vector<ModelIssue> issues;
  auto error = [&](std::string code, std::string msg, std::vector<std::string> vars) {
    issues.push_back({Severity::Error, std::move(code), std::move(msg), std::move(vars)});
  };
  auto warning = [&](std::string code, std::string msg, std::vector<std::string> vars) {
    issues.push_back({Severity::Warning, std::move(code), std::move(msg), std::move(vars)});
  };

  std::unordered_map<std::string, Kind> kind;
  auto declare = [&](const std::string& name, Kind k) {
    if (!kind.emplace(name, k).second) error("duplicate-name", "duplicate variable '" + name + "'", {name});
  };
  for (const auto& s : model.system_vars) declare(s.name, Kind::System);
  for (const auto& c : model.cause_vars) declare(c.name, Kind::Cause);
  for (const auto& a : model.action_vars) declare(a.name, Kind::Action);

  const bool problem_ok = model.find_system(model.problem_var) != nullptr;
  if (!problem_ok)
    error("missing-problem", "problem variable '" + model.problem_var + "' is not a system variable",
          {model.problem_var});

  auto check_duplicates = [&](const std::string& owner, const std::vector<std::string>& refs) {
    std::set<std::string> seen;
    for (const auto& r : refs)
      if (!seen.insert(r).second)
        error("duplicate-reference", "'" + owner + "' lists '" + r + "' twice", {owner, r});
  };

  for (const auto& s : model.system_vars) {
    check_duplicates(s.name, s.subsystems);
    for (const auto& sub : s.subsystems) {
      auto it = kind.find(sub);
      if (it == kind.end()) {
        error("unknown-reference", "system '" + s.name + "' lists undeclared subsystem '" + sub + "'", {s.name, sub});
      } else if (it->second == Kind::Cause) {
        error("cause-as-subsystem",
              "cause '" + sub + "' listed as a subsystem of '" + s.name + "'; causes act through targets",
              {s.name, sub});
      } else if (it->second == Kind::Action) {
        error("action-has-children", "action '" + sub + "' has a child '" + s.name + "'", {sub, s.name});
      } else if (sub == model.problem_var) {
        error("problem-has-successors", "problem variable '" + sub + "' is a subsystem of '" + s.name + "'",
              {sub, s.name});
      }
    }
  }

  for (const auto& c : model.cause_vars) {
    check_duplicates(c.name, c.targets);
    if (!valid_probability(c.prior_faulty))
      error("probability-out-of-range", "prior of '" + c.name + "' is outside [0,1]", {c.name});
    if (c.targets.empty())
      error("cause-without-targets", "cause '" + c.name + "' is not a parent of any system variable", {c.name});
    for (const auto& t : c.targets) {
      auto it = kind.find(t);
      if (it == kind.end()) {
        error("unknown-reference", "cause '" + c.name + "' targets undeclared '" + t + "'", {c.name, t});
      } else if (it->second == Kind::Cause) {
        error("cause-has-parents", "cause has parents: '" + t + "' is targeted by '" + c.name + "'", {t, c.name});
      } else if (it->second == Kind::Action) {
        error("action-has-children", "action '" + t + "' has a child '" + c.name + "'", {t, c.name});
      }
    }
  }

  for (const auto& a : model.action_vars) {
    check_duplicates(a.name, a.parents);
    for (const auto& p : a.parents) {
      auto it = kind.find(p);
      if (it == kind.end()) {
        error("unknown-reference", "action '" + a.name + "' has undeclared parent '" + p + "'", {a.name, p});
      } else if (it->second == Kind::Action) {
        error("action-has-children", "action '" + p + "' has a child '" + a.name + "'", {p, a.name});
      } else if (it->second == Kind::Cause) {
        error("action-parent-not-system", "action '" + a.name + "' has cause parent '" + p + "'", {a.name, p});
      }
    }
    if (a.parents.size() > 20 || a.cpt.size() != (std::size_t{1} << a.parents.size())) {
      error("incomplete-cpt", "action '" + a.name + "' needs one CPT entry per parent configuration", {a.name});
    } else {
      for (double p : a.cpt)
        if (!valid_probability(p)) {
          error("probability-out-of-range", "CPT of '" + a.name + "' has an entry outside [0,1]", {a.name});
          break;
        }
    }
  }

  // Subsystem graph: edge system -> subsystem. Must be acyclic, and every
  // system variable must be reachable from the problem variable.
  std::unordered_map<std::string, const SystemVar*> sys;
  for (const auto& s : model.system_vars) sys.emplace(s.name, &s);
  std::unordered_map<std::string, int> color;
  std::vector<std::string> cycle_members;
  std::function<void(const SystemVar&)> dfs = [&](const SystemVar& s) {
    color[s.name] = 1;
    for (const auto& sub : s.subsystems) {
      auto it = sys.find(sub);
      if (it == sys.end()) continue;
      const int c = color[sub];
      if (c == 1) cycle_members.push_back(sub);
      else if (c == 0) dfs(*it->second);
    }
    color[s.name] = 2;
  };
  for (const auto& s : model.system_vars)
    if (color[s.name] == 0) dfs(s);
  for (const auto& m : cycle_members) error("cycle", "subsystem decomposition has a cycle through '" + m + "'", {m});

  if (problem_ok) {
    std::unordered_set<std::string> reached{model.problem_var};
    std::vector<std::string> stack{model.problem_var};
    while (!stack.empty()) {
      const std::string cur = stack.back();
      stack.pop_back();
      for (const auto& sub : sys.at(cur)->subsystems)
        if (sys.count(sub) && reached.insert(sub).second) stack.push_back(sub);
    }
    for (const auto& s : model.system_vars)
      if (!reached.count(s.name))
        error("disconnected", "disconnected system variable '" + s.name + "' has no path to '" + model.problem_var + "'",
              {s.name});
  }

  // Leaves that no cause can make faulty are legal but can never fail.
  std::unordered_set<std::string> targeted;
  for (const auto& c : model.cause_vars) targeted.insert(c.targets.begin(), c.targets.end());
  for (const auto& s : model.system_vars)
    if (s.subsystems.empty() && !targeted.count(s.name))
      warning("uncovered-leaf", "no cause targets leaf '" + s.name + "'", {s.name});

  return issues;
}

bool has_errors(const std::vector<ModelIssue>& issues) {
  for (const auto& i : issues)
    if (i.severity == Severity::Error) return true;
  return false;
}

void require_valid(const TroubleshootingModel& model) {
  const auto issues = validate(model);
  if (!has_errors(issues)) return;
  std::string msg = "invalid troubleshooting model:";
  for (const auto& i : issues)
    if (i.severity == Severity::Error) msg += "\n  [" + i.code + "] " + i.message;
  throw ValidationError(msg);
}

// ---------------------------------------------------------------------------
// text format

namespace {

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream is{std::string(line)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_probability(const std::string& tok, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw ParseError("bad number '" + tok + "'", line);
  if (!valid_probability(v)) throw ParseError("probability out of range: " + tok, line);
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

bool parse_state(std::string_view tok, bool& value) {
  static const char* yes[] = {"1", "faulty", "y", "yes", "true", "!ok", "nok"};
  static const char* no[] = {"0", "ok", "n", "no", "false"};
  for (const char* s : yes)
    if (tok == s) return value = true, true;
  for (const char* s : no)
    if (tok == s) return value = false, true;
  return false;
}

TroubleshootingModel parse_model(std::string_view text) {
  TroubleshootingModel m;
  std::unordered_map<std::string, int> declared_at;
  struct Ref {
    std::string name;
    int line;
  };
  std::vector<Ref> refs;
  struct PendingCpt {
    std::size_t action;
    int line;
    std::vector<char> filled;
  };
  std::vector<PendingCpt> cpts;
  bool have_problem = false;

  auto declare = [&](const std::string& name, int line) {
    if (auto [it, ok] = declared_at.emplace(name, line); !ok)
      throw ParseError("duplicate variable '" + name + "' (first declared on line " + std::to_string(it->second) + ")",
                       line);
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto toks = tokenize(raw);
    if (toks.empty()) continue;
    const std::string& kw = toks[0];
    if (kw == "problem") {
      if (toks.size() != 2) throw ParseError("expected 'problem <name>'", line_no);
      if (have_problem) throw ParseError("problem variable declared twice", line_no);
      have_problem = true;
      m.problem_var = toks[1];
      refs.push_back({toks[1], line_no});
    } else if (kw == "system") {
      if (toks.size() < 2 || (toks.size() > 2 && toks[2] != "subsystems"))
        throw ParseError("expected 'system <name> [subsystems <name>...]'", line_no);
      declare(toks[1], line_no);
      SystemVar s{toks[1], {}};
      for (std::size_t i = 3; i < toks.size(); ++i) {
        s.subsystems.push_back(toks[i]);
        refs.push_back({toks[i], line_no});
      }
      m.system_vars.push_back(std::move(s));
    } else if (kw == "cause") {
      if (toks.size() < 3 || toks[2] != "targets")
        throw ParseError("expected 'cause <name> targets <name>... prior <p>'", line_no);
      declare(toks[1], line_no);
      CauseVar c{toks[1], {}, 0.5};
      std::size_t i = 3;
      for (; i < toks.size() && toks[i] != "prior"; ++i) {
        c.targets.push_back(toks[i]);
        refs.push_back({toks[i], line_no});
      }
      if (i + 2 != toks.size()) throw ParseError("cause needs a trailing 'prior <p>'", line_no);
      c.prior_faulty = parse_probability(toks[i + 1], line_no);
      m.cause_vars.push_back(std::move(c));
    } else if (kw == "action") {
      if (toks.size() < 2 || (toks.size() > 2 && toks[2] != "parents"))
        throw ParseError("expected 'action <name> [parents <name>...]'", line_no);
      declare(toks[1], line_no);
      ActionVar a{toks[1], {}, {}};
      for (std::size_t i = 3; i < toks.size(); ++i) {
        a.parents.push_back(toks[i]);
        refs.push_back({toks[i], line_no});
      }
      if (a.parents.size() > 20) throw ParseError("too many action parents", line_no);
      a.cpt.assign(std::size_t{1} << a.parents.size(), 0.0);
      cpts.push_back({m.action_vars.size(), line_no, std::vector<char>(a.cpt.size(), 0)});
      m.action_vars.push_back(std::move(a));
    } else if (kw == "row") {
      if (cpts.empty()) throw ParseError("'row' outside an action", line_no);
      auto& pending = cpts.back();
      ActionVar& a = m.action_vars[pending.action];
      if (toks.size() < 3 || toks[toks.size() - 2] != "p") throw ParseError("expected 'row <var>=<state>... p <prob>'", line_no);
      std::uint64_t idx = 0;
      std::set<std::string> seen;
      for (std::size_t i = 1; i + 2 < toks.size(); ++i) {
        const auto eq = toks[i].find('=');
        if (eq == std::string::npos) throw ParseError("expected <var>=<state>, got '" + toks[i] + "'", line_no);
        const std::string var = toks[i].substr(0, eq);
        bool value = false;
        if (!parse_state(toks[i].substr(eq + 1), value)) throw ParseError("bad state in '" + toks[i] + "'", line_no);
        std::size_t k = 0;
        while (k < a.parents.size() && a.parents[k] != var) ++k;
        if (k == a.parents.size()) throw ParseError("'" + var + "' is not a parent of '" + a.name + "'", line_no);
        if (!seen.insert(var).second) throw ParseError("'" + var + "' assigned twice", line_no);
        if (value) idx |= std::uint64_t{1} << k;
      }
      if (seen.size() != a.parents.size()) throw ParseError("row must assign every parent of '" + a.name + "'", line_no);
      if (pending.filled[idx]) throw ParseError("duplicate CPT row", line_no);
      pending.filled[idx] = 1;
      a.cpt[idx] = parse_probability(toks.back(), line_no);
    } else {
      throw ParseError("unknown section '" + kw + "'", line_no);
    }
  }
  if (!have_problem) throw ParseError("missing 'problem' declaration", 0);
  for (const auto& r : refs)
    if (!declared_at.count(r.name)) throw ParseError("reference to undeclared variable '" + r.name + "'", r.line);
  for (const auto& p : cpts)
    for (char f : p.filled)
      if (!f) throw ParseError("incomplete CPT for action '" + m.action_vars[p.action].name + "'", p.line);
  return m;
}

std::string serialize_model(const TroubleshootingModel& m) {
  std::ostringstream os;
  os << "problem " << m.problem_var << "\n";
  for (const auto& s : m.system_vars) {
    os << "system " << s.name;
    if (!s.subsystems.empty()) {
      os << " subsystems";
      for (const auto& sub : s.subsystems) os << " " << sub;
    }
    os << "\n";
  }
  for (const auto& c : m.cause_vars) {
    os << "cause " << c.name << " targets";
    for (const auto& t : c.targets) os << " " << t;
    os << " prior " << format_double(c.prior_faulty) << "\n";
  }
  for (const auto& a : m.action_vars) {
    os << "action " << a.name;
    if (!a.parents.empty()) {
      os << " parents";
      for (const auto& p : a.parents) os << " " << p;
    }
    os << "\n";
    const std::size_t k = a.parents.size();
    for (std::uint64_t r = (std::uint64_t{1} << k); r-- > 0;) {
      std::uint64_t idx = 0;
      os << "  row";
      for (std::size_t j = 0; j < k; ++j) {
        const bool v = (r >> (k - 1 - j)) & 1U;
        if (v) idx |= std::uint64_t{1} << j;
        os << " " << a.parents[j] << "=" << (v ? 1 : 0);
      }
      os << " p " << format_double(a.cpt.at(idx)) << "\n";
    }
  }
  return os.str();
}

TroubleshootingModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

TroubleshootingModel example_model(double prior_c1, double prior_c2) {
  TroubleshootingModel m;
  m.problem_var = "S";
  m.system_vars = {{"S", {"S1", "S2"}}, {"S1", {"S3", "S4"}}, {"S2", {}}, {"S3", {}}, {"S4", {}}};
  m.cause_vars = {{"C1", {"S3", "S4"}, prior_c1}, {"C2", {"S2", "S4"}, prior_c2}};
  // P(A = y | S2, S4); bit 0 = S2, bit 1 = S4.
  ActionVar a{"A", {"S2", "S4"}, {}};
  a.cpt = {0.4, 0.6, 0.2, 0.3};
  m.action_vars = {std::move(a)};
  return m;
}

}  // namespace tsbdd
