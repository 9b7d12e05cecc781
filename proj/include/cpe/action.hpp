#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "cpe/errors.hpp"
#include "cpe/graph.hpp"

namespace cpe {

struct Assignment {
  NodeId node = 0;
  bool value = false;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// An intervention do(S = s). The empty target list is the null intervention
// do(). Targets are stored in the graph's topological order.
class Action {
 public:
  Action() = default;

  static Action null() { return Action{}; }

  // Validates the targets against `graph` and stores them canonically.
  static Action make(const CausalGraph& graph, std::vector<Assignment> targets) {
    for (const auto& t : targets) {
      graph.check_node(t.node);
      const NodeKind k = graph.kind(t.node);
      if (k == NodeKind::hidden) {
        throw ActionDomainError("cannot intervene on hidden node " + graph.name(t.node));
      }
      if (k == NodeKind::reward) {
        throw ActionDomainError("cannot intervene on the reward node");
      }
      if (graph.global() && *graph.global() == t.node) {
        throw ActionDomainError("cannot intervene on the global node");
      }
    }
    std::sort(targets.begin(), targets.end(), [&](const Assignment& a, const Assignment& b) {
      return graph.position(a.node) < graph.position(b.node);
    });
    for (std::size_t i = 1; i < targets.size(); ++i) {
      if (targets[i].node == targets[i - 1].node) {
        throw ActionDomainError("duplicate target " + graph.name(targets[i].node));
      }
    }
    Action a;
    a.targets_ = std::move(targets);
    return a;
  }

  // Same value for every node in `nodes`.
  static Action uniform(const CausalGraph& graph, const NodeSet& nodes, bool value) {
    std::vector<Assignment> ts;
    for (NodeId v : nodes) ts.push_back({v, value});
    return make(graph, std::move(ts));
  }

  bool is_null() const noexcept { return targets_.empty(); }
  std::size_t size() const noexcept { return targets_.size(); }
  const std::vector<Assignment>& targets() const noexcept { return targets_; }

  // Intervened nodes in stored (topological) order.
  std::vector<NodeId> ordered_nodes() const {
    std::vector<NodeId> out;
    for (const auto& t : targets_) out.push_back(t.node);
    return out;
  }

  NodeSet node_set() const { return normalize(ordered_nodes()); }

  std::string label(const CausalGraph& graph) const {
    std::string s = "do(";
    for (std::size_t i = 0; i < targets_.size(); ++i) {
      if (i) s += ",";
      s += graph.name(targets_[i].node);
      s += targets_[i].value ? "=1" : "=0";
    }
    return s + ")";
  }

  friend bool operator==(const Action&, const Action&) = default;

 private:
  std::vector<Assignment> targets_;
};

}  // namespace cpe
