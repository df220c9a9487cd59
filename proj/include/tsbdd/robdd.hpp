#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "tsbdd/formula.hpp"
#include "tsbdd/var_order.hpp"

namespace tsbdd {

/// Handle to a node of one Robdd. Terminals carry owner 0 and are valid in
/// every diagram.
struct NodeRef {
  std::uint32_t id = 0;
  std::uint32_t owner = 0;

  bool operator==(const NodeRef&) const = default;
};

inline constexpr NodeRef kTerm0{0, 0};
inline constexpr NodeRef kTerm1{1, 0};

enum class BinOp { And, Or, Xor, Implies, Iff };

/// Reduced ordered BDD manager over a fixed VarOrder: a hash-consed node table
/// plus a distinguished root. Two terminals, no complement edges.
///
/// Construction is single-writer. Once built, const access is thread-safe.
class Robdd {
 public:
  explicit Robdd(VarOrder order);

  const VarOrder& order() const { return order_; }
  int num_vars() const { return order_.size(); }
  /// Level used for terminals in level arithmetic.
  int terminal_level() const { return order_.size() + 1; }

  // -- construction -------------------------------------------------------

  /// Returns lo if lo == hi, otherwise the unique node (level, lo, hi).
  NodeRef mk(int level, NodeRef lo, NodeRef hi);
  NodeRef var(std::string_view name);
  NodeRef literal(int level, bool positive);
  NodeRef apply(BinOp op, NodeRef f, NodeRef g);
  NodeRef negate(NodeRef f);
  NodeRef ite(NodeRef c, NodeRef t, NodeRef e);
  NodeRef from_formula(const Formula& f);
  NodeRef restrict(NodeRef f, std::string_view var, bool value);
  NodeRef restrict_level(NodeRef f, int level, bool value);
  /// lo <= (number of true variables among `levels`) <= hi.
  NodeRef cardinality(std::vector<int> levels, int lo, int hi);

  NodeRef root() const { return root_; }
  void set_root(NodeRef r);

  // -- inspection ---------------------------------------------------------

  bool is_terminal(NodeRef r) const { return r.id < 2; }
  int level(NodeRef r) const;
  NodeRef lo(NodeRef r) const;
  NodeRef hi(NodeRef r) const;
  /// Child along the b-arc.
  NodeRef child(NodeRef r, bool b) const { return b ? hi(r) : lo(r); }

  /// Nodes reachable from `from`, terminals included, sorted by (level, id).
  std::vector<NodeRef> reachable(NodeRef from) const;
  /// Reachable internal nodes plus reachable terminals.
  std::size_t node_count() const { return node_count(root_); }
  std::size_t node_count(NodeRef from) const;
  /// Reachable nodes testing the variable at `level`.
  std::vector<NodeRef> layer(int level) const { return layer(root_, level); }
  std::vector<NodeRef> layer(NodeRef from, int level) const;

  /// Evaluates the function rooted at `from`; bit (level-1) holds the value.
  bool evaluate(NodeRef from, std::uint64_t assignment) const;

  /// Total entries in the node table, dead nodes included.
  std::size_t table_size() const { return nodes_.size(); }

  /// Full-table scan of the ORDERED and REDUCED invariants. Empty when clean.
  std::vector<std::string> audit() const;

  /// Graphviz rendering: 0-arcs dashed, 1-arcs solid.
  std::string to_dot(NodeRef from, bool show_zero_terminal = true) const;
  std::string to_dot() const { return to_dot(root_); }

 private:
  struct Node {
    int level;
    std::uint32_t lo;
    std::uint32_t hi;
  };
  struct Key {
    std::uint64_t a;
    std::uint32_t b;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = k.a * 0x9E3779B97F4A7C15ULL;
      h ^= (static_cast<std::uint64_t>(k.b) + 0x7F4A7C15ULL + (h << 6) + (h >> 2));
      return static_cast<std::size_t>(h);
    }
  };

  void check(NodeRef r) const;
  NodeRef ref(std::uint32_t id) const { return id < 2 ? NodeRef{id, 0} : NodeRef{id, owner_}; }
  NodeRef apply_rec(BinOp op, NodeRef f, NodeRef g);

  VarOrder order_;
  std::uint32_t owner_;
  std::vector<Node> nodes_;
  absl::flat_hash_map<Key, std::uint32_t, KeyHash> unique_;
  absl::flat_hash_map<Key, std::uint32_t, KeyHash> apply_memo_;
  NodeRef root_ = kTerm0;
};

/// Builds the canonical diagram of `f` under `order`; root() is set.
Robdd build(const Formula& f, const VarOrder& order);

/// True when the two rooted diagrams are isomorphic (same levels, same shape).
bool structurally_equal(const Robdd& a, NodeRef ra, const Robdd& b, NodeRef rb);

}  // namespace tsbdd
