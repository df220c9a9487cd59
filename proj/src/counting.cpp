#include "tsbdd/counting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

#include "tsbdd/errors.hpp"

namespace tsbdd {

// ---------------------------------------------------------------------------
// WeightFunction

WeightFunction::WeightFunction(std::vector<std::string> domain, std::vector<double> table)
    : domain_(std::move(domain)), table_(std::move(table)) {
  if (domain_.size() > 30) throw InvalidArgument("weight function domain too large");
  std::set<std::string> seen(domain_.begin(), domain_.end());
  if (seen.size() != domain_.size()) throw InvalidArgument("weight function domain has duplicates");
  if (table_.size() != (std::size_t{1} << domain_.size()))
    throw InvalidArgument("weight table must have 2^|domain| entries");
  for (double w : table_)
    if (!std::isfinite(w)) throw InvalidArgument("weight table entries must be finite");
}

double WeightFunction::at(const std::map<std::string, bool>& assignment) const {
  std::uint64_t idx = 0;
  for (std::size_t k = 0; k < domain_.size(); ++k) {
    auto it = assignment.find(domain_[k]);
    if (it == assignment.end()) throw InvalidArgument("assignment misses '" + domain_[k] + "'");
    if (it->second) idx |= std::uint64_t{1} << k;
  }
  return table_[idx];
}

WeightFunction WeightFunction::sorted_by(const VarOrder& order) const {
  std::vector<std::size_t> perm(domain_.size());
  for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
  std::vector<int> levels;
  for (const auto& v : domain_) levels.push_back(order.level_of(v));
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
  std::vector<std::string> dom;
  for (auto k : perm) dom.push_back(domain_[k]);
  std::vector<double> tab(table_.size());
  for (std::uint64_t idx = 0; idx < tab.size(); ++idx) {
    std::uint64_t src = 0;
    for (std::size_t k = 0; k < perm.size(); ++k)
      if ((idx >> k) & 1U) src |= std::uint64_t{1} << perm[k];
    tab[idx] = table_[src];
  }
  return WeightFunction(std::move(dom), std::move(tab));
}

WeightFunction WeightFunction::restricted(const std::map<std::string, bool>& fixed) const {
  std::vector<std::string> dom;
  std::vector<std::size_t> kept;
  std::uint64_t base = 0;
  for (std::size_t k = 0; k < domain_.size(); ++k) {
    auto it = fixed.find(domain_[k]);
    if (it == fixed.end()) {
      dom.push_back(domain_[k]);
      kept.push_back(k);
    } else if (it->second) {
      base |= std::uint64_t{1} << k;
    }
  }
  if (kept.size() == domain_.size()) return *this;
  std::vector<double> tab(std::size_t{1} << kept.size());
  for (std::uint64_t idx = 0; idx < tab.size(); ++idx) {
    std::uint64_t src = base;
    for (std::size_t k = 0; k < kept.size(); ++k)
      if ((idx >> k) & 1U) src |= std::uint64_t{1} << kept[k];
    tab[idx] = table_[src];
  }
  return WeightFunction(std::move(dom), std::move(tab));
}

WeightFunction WeightFunction::product(const WeightFunction& f, const WeightFunction& g,
                                       const VarOrder& order, OpCounter* ops) {
  std::vector<std::string> dom = f.domain_;
  for (const auto& v : g.domain_)
    if (std::find(dom.begin(), dom.end(), v) == dom.end()) dom.push_back(v);
  std::sort(dom.begin(), dom.end(),
            [&](const std::string& a, const std::string& b) { return order.level_of(a) < order.level_of(b); });
  auto positions = [&](const WeightFunction& h) {
    std::vector<std::size_t> pos;
    for (const auto& v : h.domain_) pos.push_back(static_cast<std::size_t>(std::find(dom.begin(), dom.end(), v) - dom.begin()));
    return pos;
  };
  const auto pf = positions(f);
  const auto pg = positions(g);
  auto project = [](std::uint64_t idx, const std::vector<std::size_t>& pos) {
    std::uint64_t out = 0;
    for (std::size_t k = 0; k < pos.size(); ++k)
      if ((idx >> pos[k]) & 1U) out |= std::uint64_t{1} << k;
    return out;
  };
  std::vector<double> tab(std::size_t{1} << dom.size());
  for (std::uint64_t idx = 0; idx < tab.size(); ++idx)
    tab[idx] = f.table_[project(idx, pf)] * g.table_[project(idx, pg)];
  if (ops) ops->multiplications += tab.size();
  return WeightFunction(std::move(dom), std::move(tab));
}

std::pair<int, int> WeightFunction::band(const VarOrder& order) const {
  if (domain_.empty()) throw InvalidArgument("constant function has no band");
  int lo = order.size() + 1;
  int hi = 0;
  for (const auto& v : domain_) {
    const int l = order.level_of(v);
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  return {lo, hi};
}

std::vector<WeightFunction> merge_overlapping(std::vector<WeightFunction> fns, const VarOrder& order,
                                              OpCounter* ops) {
  double scale = 1.0;
  bool has_constant = false;
  std::vector<WeightFunction> work;
  for (auto& f : fns) {
    if (f.domain().empty()) {
      if (has_constant && ops) ++ops->multiplications;
      scale *= f.table()[0];
      has_constant = true;
    } else {
      work.push_back(f.sorted_by(order));
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < work.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < work.size() && !changed; ++j) {
        const auto [a0, a1] = work[i].band(order);
        const auto [b0, b1] = work[j].band(order);
        if (a0 <= b1 && b0 <= a1) {
          work[i] = WeightFunction::product(work[i], work[j], order, ops);
          work.erase(work.begin() + static_cast<std::ptrdiff_t>(j));
          changed = true;
        }
      }
    }
  }
  std::sort(work.begin(), work.end(), [&](const WeightFunction& a, const WeightFunction& b) {
    return a.band(order).first < b.band(order).first;
  });
  if (has_constant) work.insert(work.begin(), WeightFunction::constant(scale));
  return work;
}

// ---------------------------------------------------------------------------
// DiagramView

DiagramView::DiagramView(const Robdd& bdd, NodeRef root)
    : order_(std::make_shared<const VarOrder>(bdd.order())), num_vars_(bdd.num_vars()) {
  refs_ = bdd.reachable(root);
  const int n = static_cast<int>(refs_.size());
  level_.resize(refs_.size());
  lo_.assign(refs_.size(), -1);
  hi_.assign(refs_.size(), -1);
  for (int i = 0; i < n; ++i) {
    index_.emplace(refs_[i].id, i);
    level_[i] = bdd.level(refs_[i]);
    if (refs_[i] == kTerm1) term1_ = i;
    if (refs_[i] == kTerm0) term0_ = i;
  }
  for (int i = 0; i < n; ++i) {
    if (bdd.is_terminal(refs_[i])) continue;
    const NodeRef l = bdd.lo(refs_[i]);
    const NodeRef h = bdd.hi(refs_[i]);
    lo_[i] = l == kTerm0 ? -1 : index_.at(l.id);
    hi_[i] = h == kTerm0 ? -1 : index_.at(h.id);
  }
  root_ = index_.at(root.id);
  offsets_.assign(static_cast<std::size_t>(num_vars_) + 3, n);
  for (int l = num_vars_ + 1; l >= 1; --l) {
    int begin = offsets_[l + 1];
    while (begin > 0 && level_[begin - 1] >= l) --begin;
    offsets_[l] = begin;
  }
  offsets_[0] = 0;
}

int DiagramView::index(NodeRef r) const {
  auto it = index_.find(r.id);
  if (it == index_.end()) throw InvalidArgument("node not reachable in this view");
  return it->second;
}

// ---------------------------------------------------------------------------
// Propagation

namespace {

/// One weight band prepared for conditioned propagation.
struct Band {
  int first = 0;
  int last = 0;
  std::vector<int> w_levels;
  /// mean[t][prefix]: average of f over the domain variables after position t
  /// given the first t values; mean[k] is f itself.
  std::vector<std::vector<double>> mean;
};

class Propagator {
 public:
  Propagator(const DiagramView& view, const Evidence& e, std::span<const WeightFunction> fns,
             OpCounter* ops, int cut)
      : view_(view), n_(view.num_vars()), cut_(cut), ops_(ops ? ops : &scratch_) {
    ev_.assign(static_cast<std::size_t>(n_) + 2, -1);
    for (const auto& [name, value] : e.assignments) ev_[view.order().level_of(name)] = value ? 1 : 0;
    ev_prefix_.assign(static_cast<std::size_t>(n_) + 2, 0);
    for (int l = 1; l <= n_ + 1; ++l) ev_prefix_[l] = ev_prefix_[l - 1] + (ev_[l] >= 0 ? 1 : 0);

    for (const auto& f : fns) {
      if (f.domain().empty()) {
        scale_ *= f.table()[0];
        continue;
      }
      prepare_band(f.sorted_by(view.order()));
    }
    next_band_.assign(static_cast<std::size_t>(n_) + 2, static_cast<int>(bands_.size()));
    for (int l = n_ + 1, b = static_cast<int>(bands_.size()); l >= 0; --l) {
      while (b > 0 && bands_[b - 1].first > l) --b;
      next_band_[l] = b;
    }
  }

  NodeValues run() {
    NodeValues out;
    val_.assign(static_cast<std::size_t>(view_.size()), 0.0);
    if (cut_ > 0) entry_.assign(val_.size(), 0.0);

    const int root = view_.root();
    if (root != view_.term0()) {
      double x = std::ldexp(1.0, n_);
      if (scale_ != 1.0) {
        x *= scale_;
        ++ops_->multiplications;
      }
      deliver(0, root, x * factor(0, view_.level(root)));
    }
    int cursor = 1;
    for (const Band& b : bands_) {
      sweep(cursor, b.first - 1);
      run_band(b);
      cursor = b.last + 1;
    }
    sweep(cursor, n_);
    out.v = std::move(val_);
    out.entry = std::move(entry_);
    out.cut_level = cut_;
    return out;
  }

 private:
  void prepare_band(const WeightFunction& f) {
    Band b;
    for (const auto& v : f.domain()) {
      const int l = view_.order().level_of(v);
      if (ev_[l] >= 0) throw InvalidArgument("weight function domain overlaps evidence on '" + v + "'");
      b.w_levels.push_back(l);
    }
    b.first = b.w_levels.front();
    b.last = b.w_levels.back();
    if (!bands_.empty() && bands_.back().last >= b.first)
      throw InvalidArgument("weight functions overlap or are unsorted; merge them first");
    const std::size_t k = b.w_levels.size();
    b.mean.resize(k + 1);
    b.mean[k] = f.table();
    for (std::size_t t = k; t-- > 0;) {
      b.mean[t].resize(std::size_t{1} << t);
      for (std::size_t p = 0; p < b.mean[t].size(); ++p) {
        b.mean[t][p] = (b.mean[t + 1][p] + b.mean[t + 1][p | (std::size_t{1} << t)]) / 2.0;
        ++ops_->additions;
        ++ops_->divisions;
      }
    }
    bands_.push_back(std::move(b));
  }

  /// Multiplier for an arc from level lp to level lc: 1/2 per skipped
  /// evidence variable, the mean of every band skipped entirely.
  double factor(int lp, int lc) {
    double f = 1.0;
    const int k = ev_prefix_[lc - 1] - ev_prefix_[lp];
    if (k > 0) {
      f = std::ldexp(1.0, -k);
      ++ops_->multiplications;
    }
    for (int b = next_band_[lp]; b < static_cast<int>(bands_.size()) && bands_[b].last < lc; ++b) {
      f *= bands_[b].mean[0][0];
      ++ops_->multiplications;
    }
    return f;
  }

  void deliver(int lp, int c, double x) {
    val_[c] += x;
    ++ops_->additions;
    if (cut_ > 0 && lp < cut_ && view_.level(c) >= cut_) {
      entry_[c] += x;
      ++ops_->additions;
    }
  }

  bool blocked(int level, bool b) const { return ev_[level] >= 0 && ev_[level] != (b ? 1 : 0); }

  void sweep(int from, int to) {
    for (int l = from; l <= to; ++l) {
      for (int i = view_.level_begin(l); i < view_.level_begin(l + 1); ++i) {
        const double x = val_[i];
        if (x == 0.0) continue;
        for (bool b : {false, true}) {
          if (blocked(l, b)) continue;
          const int c = view_.child(i, b);
          if (c < 0) continue;
          ++ops_->divisions;
          deliver(l, c, x / 2.0 * factor(l, view_.level(c)));
        }
      }
    }
  }

  void run_band(const Band& band) {
    const int lo = view_.level_begin(band.first);
    const int hi = view_.level_begin(band.last + 1);
    std::vector<double> state(val_.begin() + lo, val_.begin() + hi);
    conditioned(band, lo, 0, 0, std::move(state));
  }

  /// Propagation inside a band with the first t domain variables fixed to
  /// `prefix`. Work before the next domain variable is shared by both of its
  /// values.
  void conditioned(const Band& band, int lo, std::size_t t, std::size_t prefix, std::vector<double> state) {
    const std::size_t k = band.w_levels.size();
    const int q = band.w_levels[t];
    const int from = t == 0 ? band.first : band.w_levels[t - 1] + 1;
    for (int l = from; l < q; ++l) {
      for (int i = view_.level_begin(l); i < view_.level_begin(l + 1); ++i) {
        const double x = state[i - lo];
        if (x == 0.0) continue;
        for (bool b : {false, true}) {
          if (blocked(l, b)) continue;
          const int c = view_.child(i, b);
          if (c < 0) continue;
          const int lc = view_.level(c);
          ++ops_->divisions;
          double y = x / 2.0 * factor(l, lc);
          if (lc <= band.last) {
            state[c - lo] += y;
            ++ops_->additions;
          } else {
            y *= band.mean[t][prefix];
            ++ops_->multiplications;
            deliver(l, c, y);
          }
        }
      }
    }
    const int q_begin = view_.level_begin(q);
    const int q_end = view_.level_begin(q + 1);
    for (bool b : {false, true}) {
      const std::size_t next = prefix | (static_cast<std::size_t>(b) << t);
      if (t + 1 == k) {
        for (int i = q_begin; i < q_end; ++i) {
          const double x = state[i - lo];
          if (x == 0.0) continue;
          const int c = view_.child(i, b);
          if (c < 0) continue;
          ++ops_->divisions;
          ++ops_->multiplications;
          deliver(q, c, x / 2.0 * factor(q, view_.level(c)) * band.mean[k][next]);
        }
        continue;
      }
      std::vector<double> branch = state;
      // Pending values below q reached it over arcs that skip q: each value
      // of q receives half.
      for (std::size_t j = static_cast<std::size_t>(q_end - lo); j < branch.size(); ++j) {
        if (branch[j] != 0.0) {
          branch[j] /= 2.0;
          ++ops_->divisions;
        }
      }
      for (int i = q_begin; i < q_end; ++i) {
        const double x = state[i - lo];
        if (x == 0.0) continue;
        const int c = view_.child(i, b);
        if (c < 0) continue;
        const int lc = view_.level(c);
        ++ops_->divisions;
        double y = x / 2.0 * factor(q, lc);
        if (lc <= band.last) {
          branch[c - lo] += y;
          ++ops_->additions;
        } else {
          y *= band.mean[t + 1][next];
          ++ops_->multiplications;
          deliver(q, c, y);
        }
      }
      conditioned(band, lo, t + 1, next, std::move(branch));
    }
  }

  const DiagramView& view_;
  int n_;
  int cut_;
  OpCounter scratch_;
  OpCounter* ops_;
  double scale_ = 1.0;
  std::vector<int> ev_;
  std::vector<int> ev_prefix_;
  std::vector<Band> bands_;
  std::vector<int> next_band_;
  std::vector<double> val_;
  std::vector<double> entry_;
};

void check_evidence(const VarOrder& order, const Evidence& e) {
  for (const auto& [name, value] : e.assignments)
    if (!order.contains(name)) throw UnknownVariable(name);
}

}  // namespace

NodeValues propagate(std::shared_ptr<const DiagramView> view, const Evidence& e,
                     std::span<const WeightFunction> fns, OpCounter* ops, int cut_level) {
  check_evidence(view->order(), e);
  Propagator p(*view, e, fns, ops, cut_level);
  NodeValues out = p.run();
  out.view = std::move(view);
  return out;
}

NodeValues node_values(const Robdd& bdd, const Evidence& e, OpCounter* ops) {
  return propagate(std::make_shared<const DiagramView>(bdd), e, {}, ops);
}

std::uint64_t checked_count(double v) {
  if (!std::isfinite(v) || v < -0.5) throw VerificationError("count is not a finite non-negative value");
  const double r = std::round(v);
  if (std::fabs(v - r) >= 1e-6) throw VerificationError("count is not integral: " + std::to_string(v));
  if (r >= 18446744073709551616.0) throw std::overflow_error("count exceeds 64 bits");
  return static_cast<std::uint64_t>(r);
}

std::uint64_t card(const Robdd& bdd, OpCounter* ops) {
  return checked_count(node_values(bdd, {}, ops).terminal());
}

std::uint64_t card_with_evidence(const Robdd& bdd, const Evidence& e, OpCounter* ops) {
  return checked_count(node_values(bdd, e, ops).terminal());
}

double weighted_card(const Robdd& bdd, std::span<const WeightFunction> fns, const Evidence& e,
                     OpCounter* ops) {
  check_evidence(bdd.order(), e);
  std::vector<WeightFunction> prepared;
  for (const auto& f : fns) {
    for (const auto& v : f.domain())
      if (!bdd.order().contains(v)) throw UnknownVariable(v);
    prepared.push_back(f.restricted(e.assignments));
  }
  const auto merged = merge_overlapping(std::move(prepared), bdd.order(), ops);
  return propagate(std::make_shared<const DiagramView>(bdd), e, merged, ops).terminal();
}

}  // namespace tsbdd
