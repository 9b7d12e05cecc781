#pragma once

#include <string>
#include <vector>

#include "cpe/action.hpp"
#include "cpe/graph.hpp"

namespace cpe {

// Sequence Z_1..Z_k licensing sequential back-door identification of
// E[Y | do(X_1 = x_1, ..., X_k = x_k)] from observational data.
struct AdmissibleSequence {
  std::vector<NodeId> intervened;  // mirrors Action::ordered_nodes()
  std::vector<NodeSet> blocks;

  NodeSet union_nodes() const {
    NodeSet u;
    for (const auto& b : blocks) u = set_union(u, normalize(b));
    return u;
  }
  std::size_t union_size() const { return union_nodes().size(); }

  friend bool operator==(const AdmissibleSequence&, const AdmissibleSequence&) = default;
};

enum class SequenceCondition {
  well_formed,    // shape/membership invariants
  nondescendant,  // condition (1)
  independence,   // condition (2)
};

inline const char* to_string(SequenceCondition c) {
  switch (c) {
    case SequenceCondition::well_formed: return "well_formed";
    case SequenceCondition::nondescendant: return "nondescendant";
    case SequenceCondition::independence: return "independence";
  }
  return "?";
}

struct SequenceVerdict {
  bool valid = true;
  SequenceCondition condition = SequenceCondition::well_formed;
  std::size_t index = 0;  // 1-based block index of the first violation
  std::string detail;

  static SequenceVerdict ok() { return {}; }
  static SequenceVerdict violation(SequenceCondition c, std::size_t i, std::string why) {
    return {false, c, i, std::move(why)};
  }
  explicit operator bool() const noexcept { return valid; }
};

inline SequenceVerdict verify_admissible_sequence(const CausalGraph& graph, const Action& action,
                                                  const AdmissibleSequence& seq) {
  const std::vector<NodeId> xs = action.ordered_nodes();
  const std::size_t k = xs.size();
  if (seq.intervened != xs) {
    return SequenceVerdict::violation(SequenceCondition::well_formed, 0,
                                      "intervened nodes do not match the action targets");
  }
  if (seq.blocks.size() != k) {
    return SequenceVerdict::violation(SequenceCondition::well_formed, 0,
                                      "block count differs from the number of targets");
  }
  const NodeSet targets = action.node_set();
  for (std::size_t i = 0; i < k; ++i) {
    for (NodeId z : seq.blocks[i]) {
      graph.check_node(z);
      const NodeKind kind = graph.kind(z);
      if (kind != NodeKind::observed || contains(targets, z)) {
        return SequenceVerdict::violation(SequenceCondition::well_formed, i + 1,
                                          "block contains hidden, reward or intervened node " +
                                              graph.name(z));
      }
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    const NodeSet tail(xs.begin() + static_cast<std::ptrdiff_t>(i), xs.end());
    const NodeSet desc = graph.descendants(normalize(tail));
    const NodeSet block = normalize(seq.blocks[i]);
    if (intersects(block, desc)) {
      return SequenceVerdict::violation(SequenceCondition::nondescendant, i + 1,
                                        "block holds a descendant of the remaining targets");
    }

    const NodeSet later(xs.begin() + static_cast<std::ptrdiff_t>(i) + 1, xs.end());
    const CausalGraph cut = surgery(graph, normalize(later), NodeSet{xs[i]});
    NodeSet given(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(i));
    for (std::size_t j = 0; j <= i; ++j) given = set_union(given, normalize(seq.blocks[j]));
    given = normalize(given);
    if (!d_separated(cut, NodeSet{graph.reward()}, NodeSet{xs[i]}, given)) {
      return SequenceVerdict::violation(SequenceCondition::independence, i + 1,
                                        "reward not separated from " + graph.name(xs[i]));
    }
  }
  return SequenceVerdict::ok();
}

// Parent-based construction for graphs without hidden nodes:
// Z_i = Pa(X_i) \ (Z_1 u ... u Z_{i-1} u {X_1, ..., X_{i-1}}), targets taken in
// topological order.
inline AdmissibleSequence construct_admissible_sequence_no_hidden(const CausalGraph& graph,
                                                                  const Action& action) {
  if (graph.has_hidden()) {
    throw HiddenNodesError("parent-based construction requires a graph without hidden nodes");
  }
  AdmissibleSequence seq;
  seq.intervened = action.ordered_nodes();
  NodeSet used;
  for (NodeId x : seq.intervened) {
    NodeSet block = set_difference(graph.parents(x), used);
    used = set_union(used, block);
    used = set_union(used, NodeSet{x});
    seq.blocks.push_back(std::move(block));
  }
  return seq;
}

}  // namespace cpe
