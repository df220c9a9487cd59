#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsbdd/robdd.hpp"

namespace tsbdd {

/// Partial assignment over diagram variables.
struct Evidence {
  std::map<std::string, bool> assignments;

  Evidence() = default;
  Evidence(std::initializer_list<std::pair<const std::string, bool>> init) : assignments(init) {}

  void set(const std::string& var, bool value) { assignments[var] = value; }
  bool empty() const { return assignments.empty(); }
};

/// Tally of arithmetic performed by a propagation.
///
/// Convention: one addition per contribution accumulated into a node value,
/// one division per halving, one multiplication per skipped-evidence factor,
/// per weight application and per band-mean factor.
struct OpCounter {
  std::uint64_t additions = 0;
  std::uint64_t multiplications = 0;
  std::uint64_t divisions = 0;

  std::uint64_t total() const { return additions + multiplications + divisions; }
  void reset() { *this = OpCounter{}; }
  OpCounter& operator+=(const OpCounter& o) {
    additions += o.additions;
    multiplications += o.multiplications;
    divisions += o.divisions;
    return *this;
  }
};

/// Real-valued function over the configurations of a set of variables.
/// Table index: bit k holds the value of domain()[k].
class WeightFunction {
 public:
  WeightFunction() = default;
  /// Throws InvalidArgument on duplicate names, a table of the wrong size or
  /// non-finite weights.
  WeightFunction(std::vector<std::string> domain, std::vector<double> table);

  static WeightFunction constant(double value) { return WeightFunction({}, {value}); }

  const std::vector<std::string>& domain() const { return domain_; }
  const std::vector<double>& table() const { return table_; }
  double at(std::uint64_t config) const { return table_.at(config); }
  /// Value under a named assignment covering the domain.
  double at(const std::map<std::string, bool>& assignment) const;

  /// Same function with the domain permuted into level order.
  WeightFunction sorted_by(const VarOrder& order) const;
  /// Fixes the domain variables that appear in `fixed`.
  WeightFunction restricted(const std::map<std::string, bool>& fixed) const;
  /// Pointwise product over the union of the domains (union sorted by level).
  static WeightFunction product(const WeightFunction& f, const WeightFunction& g,
                                const VarOrder& order, OpCounter* ops = nullptr);

  /// Smallest and largest level of the domain; requires a non-empty domain.
  std::pair<int, int> band(const VarOrder& order) const;

 private:
  std::vector<std::string> domain_;
  std::vector<double> table_;
};

/// Replaces functions whose level bands intersect by their product until all
/// bands are pairwise disjoint. Output sorted by band. Constant functions
/// (empty domain) are folded into a single leading constant.
std::vector<WeightFunction> merge_overlapping(std::vector<WeightFunction> fns,
                                              const VarOrder& order,
                                              OpCounter* ops = nullptr);

/// Dense, level-sorted snapshot of the nodes reachable from a root. Shared by
/// every propagation over the same diagram.
class DiagramView {
 public:
  DiagramView(const Robdd& bdd, NodeRef root);
  explicit DiagramView(const Robdd& bdd) : DiagramView(bdd, bdd.root()) {}

  const VarOrder& order() const { return *order_; }
  int num_vars() const { return num_vars_; }
  int size() const { return static_cast<int>(level_.size()); }
  int root() const { return root_; }
  /// Dense index of the 1-terminal, -1 if unreachable.
  int term1() const { return term1_; }
  int term0() const { return term0_; }

  int level(int i) const { return level_[i]; }
  /// Dense child index, -1 for the 0-terminal.
  int child(int i, bool b) const { return b ? hi_[i] : lo_[i]; }
  bool is_terminal(int i) const { return level_[i] == num_vars_ + 1; }
  NodeRef ref(int i) const { return refs_[i]; }
  int index(NodeRef r) const;
  /// Dense indices [level_begin(l), level_begin(l+1)) are the nodes at level l;
  /// l ranges over 1..n+1.
  int level_begin(int l) const { return offsets_[l]; }

 private:
  std::shared_ptr<const VarOrder> order_;
  int num_vars_ = 0;
  int root_ = -1;
  int term1_ = -1;
  int term0_ = -1;
  std::vector<int> level_;
  std::vector<int> lo_;
  std::vector<int> hi_;
  std::vector<NodeRef> refs_;
  std::vector<int> offsets_;
  std::unordered_map<std::uint32_t, int> index_;
};

/// Values produced by one top-down propagation.
struct NodeValues {
  std::shared_ptr<const DiagramView> view;
  /// v(u) per dense index. Inside a weight band this is the value that
  /// entered the band, before conditioning.
  std::vector<double> v;
  /// Contributions that arrived at nodes at or below `cut_level` from arcs
  /// leaving nodes above it (the root injection counts as such an arc).
  std::vector<double> entry;
  int cut_level = 0;

  double at(NodeRef r) const { return v[static_cast<std::size_t>(view->index(r))]; }
  /// v of the 1-terminal (0 if unreachable).
  double terminal() const { return view->term1() < 0 ? 0.0 : v[static_cast<std::size_t>(view->term1())]; }
};

/// Top-down propagation v(u)_e with root value 2^n. On arcs that skip
/// levels, every skipped evidence variable contributes a factor 1/2.
///
/// `fns` must have pairwise-disjoint bands, domains disjoint from `e`, and
/// sorted by band (merge_overlapping output); constant functions scale the
/// result. When cut_level > 0 the `entry` vector is filled for that cut.
NodeValues propagate(std::shared_ptr<const DiagramView> view, const Evidence& e,
                     std::span<const WeightFunction> fns = {}, OpCounter* ops = nullptr,
                     int cut_level = 0);

NodeValues node_values(const Robdd& bdd, const Evidence& e, OpCounter* ops = nullptr);

/// Number of satisfying assignments over all order variables. Throws
/// std::overflow_error above 2^64 - 1.
std::uint64_t card(const Robdd& bdd, OpCounter* ops = nullptr);
/// Satisfying assignments consistent with e.
std::uint64_t card_with_evidence(const Robdd& bdd, const Evidence& e, OpCounter* ops = nullptr);

/// sum over w of (prod_k f_k(w_k)) * Card_B(w, e), computed in one weighted
/// propagation. Functions are merged automatically; domain variables fixed
/// by `e` are restricted away first.
double weighted_card(const Robdd& bdd, std::span<const WeightFunction> fns, const Evidence& e,
                     OpCounter* ops = nullptr);

/// Rounds a count that must be integral. Throws VerificationError when it is
/// not, std::overflow_error when it does not fit.
std::uint64_t checked_count(double v);

}  // namespace tsbdd
