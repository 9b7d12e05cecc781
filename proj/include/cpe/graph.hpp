#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "cpe/errors.hpp"

namespace cpe {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;  // parent -> child

// Ascending, duplicate-free node indices.
using NodeSet = std::vector<NodeId>;

enum class NodeKind { observed, hidden, reward };

inline const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::observed: return "observed";
    case NodeKind::hidden: return "hidden";
    case NodeKind::reward: return "reward";
  }
  return "?";
}

struct Node {
  std::string name;
  NodeKind kind = NodeKind::observed;

  friend bool operator==(const Node&, const Node&) = default;
};

inline NodeSet normalize(NodeSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline bool contains(const NodeSet& s, NodeId v) {
  return std::binary_search(s.begin(), s.end(), v);
}

inline NodeSet set_union(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline NodeSet set_difference(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool intersects(const NodeSet& a, const NodeSet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

// A DAG over observed, hidden and exactly one reward node. Immutable after
// construction; every structural invariant is checked in the constructor.
class CausalGraph {
 public:
  CausalGraph(std::vector<Node> nodes, std::vector<Edge> edges,
              std::optional<NodeId> global = std::nullopt)
      : nodes_(std::move(nodes)), edges_(std::move(edges)), global_(global) {
    if (nodes_.empty()) throw GraphError("graph has no nodes (a reward node is required)");
    std::optional<NodeId> reward;
    for (NodeId v = 0; v < nodes_.size(); ++v) {
      if (nodes_[v].kind != NodeKind::reward) continue;
      if (reward) throw GraphError("more than one reward node");
      reward = v;
    }
    if (!reward) throw GraphError("graph has no reward node");
    reward_ = *reward;

    for (const auto& [p, c] : edges_) {
      if (p >= nodes_.size() || c >= nodes_.size()) {
        throw DanglingEdgeError("edge references unknown node index");
      }
      if (p == c) throw CycleError("self loop on node " + nodes_[p].name);
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

    parents_.assign(nodes_.size(), {});
    children_.assign(nodes_.size(), {});
    for (const auto& [p, c] : edges_) {
      parents_[c].push_back(p);
      children_[p].push_back(c);
    }
    // edges_ is sorted by (parent, child), so children_ is already ascending.
    for (auto& ps : parents_) std::sort(ps.begin(), ps.end());

    if (!children_[reward_].empty()) throw GraphError("reward node has outgoing edges");
    if (global_) {
      if (*global_ >= nodes_.size()) throw UnknownNodeError("global node index out of range");
      if (nodes_[*global_].kind != NodeKind::observed) {
        throw GraphError("global node must be an observed node");
      }
      if (!parents_[*global_].empty()) throw GraphError("global node has parents");
    }
    compute_order();
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(NodeId v) const { return nodes_.at(v); }
  const std::string& name(NodeId v) const { return nodes_.at(v).name; }
  NodeKind kind(NodeId v) const { return nodes_.at(v).kind; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const NodeSet& parents(NodeId v) const { return parents_.at(v); }
  const NodeSet& children(NodeId v) const { return children_.at(v); }
  NodeId reward() const noexcept { return reward_; }
  const std::optional<NodeId>& global() const noexcept { return global_; }

  // Topological order over all nodes, ties broken by ascending index.
  const std::vector<NodeId>& topological_order() const noexcept { return order_; }
  std::size_t position(NodeId v) const { return position_.at(v); }

  bool has_edge(NodeId p, NodeId c) const {
    return std::binary_search(edges_.begin(), edges_.end(), Edge{p, c});
  }

  std::optional<NodeId> find(const std::string& name) const {
    for (NodeId v = 0; v < nodes_.size(); ++v) {
      if (nodes_[v].name == name) return v;
    }
    return std::nullopt;
  }

  NodeId index_of(const std::string& name) const {
    if (auto v = find(name)) return *v;
    throw UnknownNodeError("unknown node '" + name + "'");
  }

  void check_node(NodeId v) const {
    if (v >= nodes_.size()) throw UnknownNodeError("node index " + std::to_string(v) + " out of range");
  }

  // Observed nodes other than the reward, ascending.
  NodeSet observed_nodes() const { return nodes_of_kind(NodeKind::observed); }
  NodeSet hidden_nodes() const { return nodes_of_kind(NodeKind::hidden); }
  bool has_hidden() const { return !hidden_nodes().empty(); }

  std::size_t max_in_degree() const {
    std::size_t d = 0;
    for (const auto& ps : parents_) d = std::max(d, ps.size());
    return d;
  }

  // Descendants of `from`, including the nodes of `from` themselves.
  NodeSet descendants(const NodeSet& from) const { return reach(from, children_); }
  // Ancestors of `from`, including the nodes of `from` themselves.
  NodeSet ancestors(const NodeSet& from) const { return reach(from, parents_); }

  friend bool operator==(const CausalGraph& a, const CausalGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.global_ == b.global_;
  }

 private:
  NodeSet nodes_of_kind(NodeKind k) const {
    NodeSet out;
    for (NodeId v = 0; v < nodes_.size(); ++v) {
      if (nodes_[v].kind == k) out.push_back(v);
    }
    return out;
  }

  NodeSet reach(const NodeSet& from, const std::vector<NodeSet>& adj) const {
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack;
    for (NodeId v : from) {
      check_node(v);
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (NodeId w : adj[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    NodeSet out;
    for (NodeId v = 0; v < nodes_.size(); ++v) {
      if (seen[v]) out.push_back(v);
    }
    return out;
  }

  void compute_order() {
    std::vector<std::size_t> indeg(nodes_.size());
    for (NodeId v = 0; v < nodes_.size(); ++v) indeg[v] = parents_[v].size();
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (NodeId v = 0; v < nodes_.size(); ++v) {
      if (indeg[v] == 0) ready.push(v);
    }
    order_.clear();
    while (!ready.empty()) {
      NodeId v = ready.top();
      ready.pop();
      order_.push_back(v);
      for (NodeId c : children_[v]) {
        if (--indeg[c] == 0) ready.push(c);
      }
    }
    if (order_.size() != nodes_.size()) throw CycleError("edge relation contains a cycle");
    position_.assign(nodes_.size(), 0);
    for (std::size_t i = 0; i < order_.size(); ++i) position_[order_[i]] = i;
  }

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::optional<NodeId> global_;
  NodeId reward_ = 0;
  std::vector<NodeSet> parents_;
  std::vector<NodeSet> children_;
  std::vector<NodeId> order_;
  std::vector<std::size_t> position_;
};

// Validates a raw node/edge description and returns its topological order.
inline std::vector<NodeId> validate_and_order(const CausalGraph& graph) {
  return graph.topological_order();
}

inline std::vector<NodeId> validate_and_order(std::vector<Node> nodes, std::vector<Edge> edges) {
  return CausalGraph(std::move(nodes), std::move(edges)).topological_order();
}

// Copy of `graph` with the in-edges of `remove_incoming` and the out-edges of
// `remove_outgoing` deleted.
inline CausalGraph surgery(const CausalGraph& graph, const NodeSet& remove_incoming,
                           const NodeSet& remove_outgoing) {
  for (NodeId v : remove_incoming) graph.check_node(v);
  for (NodeId v : remove_outgoing) graph.check_node(v);
  const NodeSet in = normalize(remove_incoming);
  const NodeSet out = normalize(remove_outgoing);
  std::vector<Edge> kept;
  kept.reserve(graph.edges().size());
  for (const auto& e : graph.edges()) {
    if (contains(in, e.second) || contains(out, e.first)) continue;
    kept.push_back(e);
  }
  return CausalGraph(graph.nodes(), std::move(kept), graph.global());
}

// Reachability ("Bayes-ball") d-separation test, O(|V| + |E|).
inline bool d_separated(const CausalGraph& graph, const NodeSet& set_a, const NodeSet& set_b,
                        const NodeSet& given) {
  const NodeSet a = normalize(set_a);
  const NodeSet b = normalize(set_b);
  const NodeSet z = normalize(given);
  for (const NodeSet* s : {&a, &b, &z}) {
    for (NodeId v : *s) graph.check_node(v);
  }
  if (intersects(a, b) || intersects(a, z) || intersects(b, z)) {
    throw OverlapError("d-separation sets must be pairwise disjoint");
  }
  for (NodeId v : z) {
    if (graph.kind(v) == NodeKind::hidden) {
      throw GraphError("hidden node " + graph.name(v) + " cannot be conditioned on");
    }
  }

  const std::size_t n = graph.size();
  std::vector<char> in_z(n, 0);
  for (NodeId v : z) in_z[v] = 1;
  std::vector<char> anc_z(n, 0);
  for (NodeId v : graph.ancestors(z)) anc_z[v] = 1;
  std::vector<char> in_b(n, 0);
  for (NodeId v : b) in_b[v] = 1;

  // visited[2v] : reached v travelling up (from a child)
  // visited[2v+1] : reached v travelling down (from a parent)
  std::vector<char> visited(2 * n, 0);
  std::vector<std::pair<NodeId, bool>> stack;
  for (NodeId v : a) stack.emplace_back(v, true);
  while (!stack.empty()) {
    auto [v, up] = stack.back();
    stack.pop_back();
    const std::size_t slot = 2 * v + (up ? 0 : 1);
    if (visited[slot]) continue;
    visited[slot] = 1;
    if (!in_z[v] && in_b[v]) return false;
    if (up) {
      if (in_z[v]) continue;
      for (NodeId p : graph.parents(v)) stack.emplace_back(p, true);
      for (NodeId c : graph.children(v)) stack.emplace_back(c, false);
    } else {
      if (!in_z[v]) {
        for (NodeId c : graph.children(v)) stack.emplace_back(c, false);
      }
      if (anc_z[v]) {
        for (NodeId p : graph.parents(v)) stack.emplace_back(p, true);
      }
    }
  }
  return true;
}

// Every node on at least one directed path from the global node to the reward
// that avoids `excluded` (both endpoints included). Empty when no such path
// survives.
inline NodeSet path_nodes_to_reward(const CausalGraph& graph, const NodeSet& excluded) {
  if (!graph.global()) throw NoGlobalNodeError("graph has no global node");
  const NodeId source = *graph.global();
  const NodeId sink = graph.reward();
  for (NodeId v : excluded) graph.check_node(v);
  const NodeSet ex = normalize(excluded);
  if (contains(ex, source) || contains(ex, sink)) return {};

  const std::size_t n = graph.size();
  auto sweep = [&](NodeId start, bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<NodeId> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (NodeId w : forward ? graph.children(v) : graph.parents(v)) {
        if (seen[w] || contains(ex, w)) continue;
        seen[w] = 1;
        stack.push_back(w);
      }
    }
    return seen;
  };
  const auto from_source = sweep(source, true);
  const auto to_sink = sweep(sink, false);
  NodeSet out;
  for (NodeId v = 0; v < n; ++v) {
    if (from_source[v] && to_sink[v]) out.push_back(v);
  }
  return out;
}

}  // namespace cpe
