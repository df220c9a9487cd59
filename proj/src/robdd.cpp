#include "tsbdd/robdd.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include "tsbdd/errors.hpp"

namespace tsbdd {

namespace {

std::atomic<std::uint32_t> next_owner{1};

bool eval_op(BinOp op, bool a, bool b) {
  switch (op) {
    case BinOp::And: return a && b;
    case BinOp::Or: return a || b;
    case BinOp::Xor: return a != b;
    case BinOp::Implies: return !a || b;
    case BinOp::Iff: return a == b;
  }
  return false;
}

bool commutative(BinOp op) { return op != BinOp::Implies; }

}  // namespace

Robdd::Robdd(VarOrder order) : order_(std::move(order)), owner_(next_owner++) {
  const int t = terminal_level();
  nodes_.push_back({t, 0, 0});
  nodes_.push_back({t, 1, 1});
}

void Robdd::check(NodeRef r) const {
  if (r.id < 2) {
    if (r.owner != 0) throw InvalidArgument("malformed terminal handle");
    return;
  }
  if (r.owner != owner_) throw InvalidArgument("node handle belongs to a different diagram");
  if (r.id >= nodes_.size()) throw InvalidArgument("invalid node handle");
}

int Robdd::level(NodeRef r) const {
  check(r);
  return nodes_[r.id].level;
}

NodeRef Robdd::lo(NodeRef r) const {
  check(r);
  if (r.id < 2) throw InvalidArgument("terminal has no children");
  return ref(nodes_[r.id].lo);
}

NodeRef Robdd::hi(NodeRef r) const {
  check(r);
  if (r.id < 2) throw InvalidArgument("terminal has no children");
  return ref(nodes_[r.id].hi);
}

void Robdd::set_root(NodeRef r) {
  check(r);
  root_ = r;
}

NodeRef Robdd::mk(int level, NodeRef lo, NodeRef hi) {
  if (level < 1 || level > num_vars())
    throw InvalidArgument("level " + std::to_string(level) + " out of range 1.." +
                          std::to_string(num_vars()));
  check(lo);
  check(hi);
  if (lo == hi) return lo;
  if (level >= nodes_[lo.id].level || level >= nodes_[hi.id].level)
    throw InvalidArgument("mk would violate the variable order");
  const Key key{(static_cast<std::uint64_t>(level) << 32) | lo.id, hi.id};
  auto [it, inserted] = unique_.try_emplace(key, static_cast<std::uint32_t>(nodes_.size()));
  if (inserted) nodes_.push_back({level, lo.id, hi.id});
  return ref(it->second);
}

NodeRef Robdd::literal(int level, bool positive) {
  return positive ? mk(level, kTerm0, kTerm1) : mk(level, kTerm1, kTerm0);
}

NodeRef Robdd::var(std::string_view name) { return literal(order_.level_of(name), true); }

NodeRef Robdd::apply(BinOp op, NodeRef f, NodeRef g) {
  check(f);
  check(g);
  return apply_rec(op, f, g);
}

NodeRef Robdd::apply_rec(BinOp op, NodeRef f, NodeRef g) {
  if (f.id < 2 && g.id < 2) return eval_op(op, f.id == 1, g.id == 1) ? kTerm1 : kTerm0;
  switch (op) {
    case BinOp::And:
      if (f == kTerm0 || g == kTerm0) return kTerm0;
      if (f == kTerm1) return g;
      if (g == kTerm1 || f == g) return f;
      break;
    case BinOp::Or:
      if (f == kTerm1 || g == kTerm1) return kTerm1;
      if (f == kTerm0) return g;
      if (g == kTerm0 || f == g) return f;
      break;
    case BinOp::Xor:
      if (f == kTerm0) return g;
      if (g == kTerm0) return f;
      if (f == g) return kTerm0;
      break;
    case BinOp::Implies:
      if (f == kTerm0 || g == kTerm1 || f == g) return kTerm1;
      if (f == kTerm1) return g;
      break;
    case BinOp::Iff:
      if (f == kTerm1) return g;
      if (g == kTerm1) return f;
      if (f == g) return kTerm1;
      break;
  }
  if (commutative(op) && g.id < f.id) std::swap(f, g);
  const Key key{(static_cast<std::uint64_t>(op) << 32) | f.id, g.id};
  if (auto it = apply_memo_.find(key); it != apply_memo_.end()) return ref(it->second);

  const int lf = nodes_[f.id].level;
  const int lg = nodes_[g.id].level;
  const int top = std::min(lf, lg);
  const NodeRef f0 = lf == top ? ref(nodes_[f.id].lo) : f;
  const NodeRef f1 = lf == top ? ref(nodes_[f.id].hi) : f;
  const NodeRef g0 = lg == top ? ref(nodes_[g.id].lo) : g;
  const NodeRef g1 = lg == top ? ref(nodes_[g.id].hi) : g;
  const NodeRef r0 = apply_rec(op, f0, g0);
  const NodeRef r1 = apply_rec(op, f1, g1);
  const NodeRef r = mk(top, r0, r1);
  apply_memo_.emplace(key, r.id);
  return r;
}

NodeRef Robdd::negate(NodeRef f) { return apply(BinOp::Xor, f, kTerm1); }

NodeRef Robdd::ite(NodeRef c, NodeRef t, NodeRef e) {
  return apply(BinOp::Or, apply(BinOp::And, c, t), apply(BinOp::And, negate(c), e));
}

NodeRef Robdd::from_formula(const Formula& f) {
  switch (f.op()) {
    case FormulaOp::Const: return f.node().value ? kTerm1 : kTerm0;
    case FormulaOp::Var: return var(f.node().name);
    case FormulaOp::Not: return negate(from_formula(f.args()[0]));
    case FormulaOp::And:
    case FormulaOp::Or:
    case FormulaOp::Xor: {
      const BinOp op = f.op() == FormulaOp::And  ? BinOp::And
                       : f.op() == FormulaOp::Or ? BinOp::Or
                                                 : BinOp::Xor;
      NodeRef acc = from_formula(f.args()[0]);
      for (std::size_t i = 1; i < f.args().size(); ++i) acc = apply(op, acc, from_formula(f.args()[i]));
      return acc;
    }
    case FormulaOp::Implies: return apply(BinOp::Implies, from_formula(f.args()[0]), from_formula(f.args()[1]));
    case FormulaOp::Iff: return apply(BinOp::Iff, from_formula(f.args()[0]), from_formula(f.args()[1]));
    case FormulaOp::Ite:
      return ite(from_formula(f.args()[0]), from_formula(f.args()[1]), from_formula(f.args()[2]));
  }
  return kTerm0;
}

NodeRef Robdd::restrict(NodeRef f, std::string_view var, bool value) {
  return restrict_level(f, order_.level_of(var), value);
}

NodeRef Robdd::restrict_level(NodeRef f, int level, bool value) {
  check(f);
  if (level < 1 || level > num_vars()) throw InvalidArgument("restrict level out of range");
  std::unordered_map<std::uint32_t, NodeRef> memo;
  std::function<NodeRef(NodeRef)> rec = [&](NodeRef u) -> NodeRef {
    const int lu = nodes_[u.id].level;
    if (lu > level) return u;
    if (auto it = memo.find(u.id); it != memo.end()) return it->second;
    NodeRef r;
    if (lu == level) {
      r = ref(value ? nodes_[u.id].hi : nodes_[u.id].lo);
    } else {
      const NodeRef l = rec(ref(nodes_[u.id].lo));
      const NodeRef h = rec(ref(nodes_[u.id].hi));
      r = mk(lu, l, h);
    }
    memo.emplace(u.id, r);
    return r;
  };
  return rec(f);
}

NodeRef Robdd::cardinality(std::vector<int> levels, int lo, int hi) {
  std::sort(levels.begin(), levels.end());
  if (std::adjacent_find(levels.begin(), levels.end()) != levels.end())
    throw InvalidArgument("cardinality constraint over repeated variable");
  for (int l : levels)
    if (l < 1 || l > num_vars()) throw InvalidArgument("cardinality level out of range");
  const int k = static_cast<int>(levels.size());
  if (hi < lo || hi < 0 || lo > k) return kTerm0;
  hi = std::min(hi, k);
  const int cap = hi + 1;  // counts above hi are all equivalent
  // next[c]: function of the variables after position i given c trues so far.
  std::vector<NodeRef> next(static_cast<std::size_t>(cap) + 1);
  for (int c = 0; c <= cap; ++c) next[c] = (c >= lo && c <= hi) ? kTerm1 : kTerm0;
  for (int i = k - 1; i >= 0; --i) {
    std::vector<NodeRef> cur(next.size());
    for (int c = 0; c <= cap; ++c) cur[c] = mk(levels[i], next[c], next[std::min(c + 1, cap)]);
    next = std::move(cur);
  }
  return next[0];
}

std::vector<NodeRef> Robdd::reachable(NodeRef from) const {
  check(from);
  std::vector<std::uint32_t> stack{from.id};
  std::vector<char> seen(nodes_.size(), 0);
  seen[from.id] = 1;
  std::vector<NodeRef> out;
  while (!stack.empty()) {
    const std::uint32_t id = stack.back();
    stack.pop_back();
    out.push_back(ref(id));
    if (id < 2) continue;
    for (std::uint32_t c : {nodes_[id].lo, nodes_[id].hi}) {
      if (!seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }
  std::sort(out.begin(), out.end(), [&](NodeRef a, NodeRef b) {
    const int la = nodes_[a.id].level;
    const int lb = nodes_[b.id].level;
    return la != lb ? la < lb : a.id < b.id;
  });
  return out;
}

std::size_t Robdd::node_count(NodeRef from) const { return reachable(from).size(); }

std::vector<NodeRef> Robdd::layer(NodeRef from, int level) const {
  std::vector<NodeRef> out;
  for (NodeRef r : reachable(from))
    if (r.id >= 2 && nodes_[r.id].level == level) out.push_back(r);
  return out;
}

bool Robdd::evaluate(NodeRef from, std::uint64_t assignment) const {
  check(from);
  std::uint32_t id = from.id;
  while (id >= 2) {
    const Node& n = nodes_[id];
    id = ((assignment >> (n.level - 1)) & 1U) ? n.hi : n.lo;
  }
  return id == 1;
}

std::vector<std::string> Robdd::audit() const {
  std::vector<std::string> issues;
  for (std::uint32_t id = 2; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    const std::string tag = "node " + std::to_string(id);
    if (n.lo == n.hi) issues.push_back(tag + ": redundant test (lo == hi)");
    if (n.lo >= id && n.lo >= 2) issues.push_back(tag + ": lo child created later");
    if (n.hi >= id && n.hi >= 2) issues.push_back(tag + ": hi child created later");
    if (n.lo < nodes_.size() && nodes_[n.lo].level <= n.level) issues.push_back(tag + ": lo child not below");
    if (n.hi < nodes_.size() && nodes_[n.hi].level <= n.level) issues.push_back(tag + ": hi child not below");
    const Key key{(static_cast<std::uint64_t>(n.level) << 32) | n.lo, n.hi};
    auto it = unique_.find(key);
    if (it == unique_.end() || it->second != id) issues.push_back(tag + ": duplicate or unregistered triple");
  }
  if (unique_.size() + 2 != nodes_.size()) issues.push_back("unique table size mismatch");
  return issues;
}

std::string Robdd::to_dot(NodeRef from, bool show_zero_terminal) const {
  std::ostringstream os;
  os << "digraph robdd {\n";
  const auto nodes = reachable(from);
  std::map<int, std::vector<std::uint32_t>> ranks;
  for (NodeRef r : nodes) {
    if (r.id == 0 && !show_zero_terminal) continue;
    if (r.id < 2) {
      os << "  n" << r.id << " [shape=box,label=\"" << r.id << "\"];\n";
    } else {
      os << "  n" << r.id << " [shape=circle,label=\"" << order_.name_at(nodes_[r.id].level) << "\"];\n";
      ranks[nodes_[r.id].level].push_back(r.id);
    }
  }
  for (NodeRef r : nodes) {
    if (r.id < 2) continue;
    const Node& n = nodes_[r.id];
    if (n.lo != 0 || show_zero_terminal) os << "  n" << r.id << " -> n" << n.lo << " [style=dashed];\n";
    if (n.hi != 0 || show_zero_terminal) os << "  n" << r.id << " -> n" << n.hi << ";\n";
  }
  for (const auto& [level, ids] : ranks) {
    os << "  { rank=same;";
    for (auto id : ids) os << " n" << id << ";";
    os << " }\n";
  }
  os << "}\n";
  return os.str();
}

Robdd build(const Formula& f, const VarOrder& order) {
  for (const auto& v : f.variables())
    if (!order.contains(v)) throw UnknownVariable(v);
  Robdd bdd(order);
  bdd.set_root(bdd.from_formula(f));
  return bdd;
}

bool structurally_equal(const Robdd& a, NodeRef ra, const Robdd& b, NodeRef rb) {
  if (!(a.order() == b.order())) return false;
  std::unordered_map<std::uint32_t, std::uint32_t> pairing;
  std::function<bool(NodeRef, NodeRef)> rec = [&](NodeRef x, NodeRef y) -> bool {
    if (a.is_terminal(x) || b.is_terminal(y)) return x == y;
    if (auto it = pairing.find(x.id); it != pairing.end()) return it->second == y.id;
    if (a.level(x) != b.level(y)) return false;
    pairing.emplace(x.id, y.id);
    return rec(a.lo(x), b.lo(y)) && rec(a.hi(x), b.hi(y));
  };
  return rec(ra, rb);
}

}  // namespace tsbdd
