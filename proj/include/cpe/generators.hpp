#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpe/admissible.hpp"
#include "cpe/complexity.hpp"
#include "cpe/errors.hpp"
#include "cpe/instance.hpp"
#include "cpe/rng.hpp"
#include "cpe/scm.hpp"

namespace cpe {

namespace gen {

using nlohmann::json;

// Incremental node/edge list.
struct GraphBuilder {
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  NodeId add(std::string name, NodeKind kind = NodeKind::observed) {
    nodes.push_back({std::move(name), kind});
    return nodes.size() - 1;
  }
  void edge(NodeId p, NodeId c) { edges.emplace_back(p, c); }
  CausalGraph build(std::optional<NodeId> global = std::nullopt) const {
    return CausalGraph(nodes, edges, global);
  }
};

// Table of P(v = 1 | parents) from a function of the parent values.
inline std::vector<double> table(const CausalGraph& g, NodeId v,
                                 const std::function<double(const std::function<bool(NodeId)>&)>& f) {
  const NodeSet& pa = g.parents(v);
  std::vector<double> out(std::size_t{1} << pa.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    auto val = [&](NodeId u) {
      for (std::size_t j = 0; j < pa.size(); ++j) {
        if (pa[j] == u) return static_cast<bool>((r >> j) & 1U);
      }
      throw ParamError("node " + g.name(u) + " is not a parent of " + g.name(v));
    };
    out[r] = f(val);
  }
  return out;
}

inline std::vector<double> random_table(const CausalGraph& g, NodeId v, CounterRng& rng,
                                        double lo = 0.2, double hi = 0.8) {
  std::vector<double> out(std::size_t{1} << g.parents(v).size());
  for (double& p : out) p = lo + (hi - lo) * rng.uniform();
  return out;
}

// k distinct indices from [0, n), uniform without replacement, ascending.
inline std::vector<std::size_t> choose(std::size_t n, std::size_t k, CounterRng& rng) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

inline void combinations(const std::vector<NodeId>& items, std::size_t k,
                         const std::function<void(const std::vector<NodeId>&)>& fn) {
  std::vector<NodeId> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (cur.size() == k) {
      fn(cur);
      return;
    }
    for (std::size_t i = start; i < items.size(); ++i) {
      cur.push_back(items[i]);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

// Every assignment of bits to `nodes`, in binary counting order.
inline void all_assignments(const CausalGraph& g, const std::vector<NodeId>& nodes,
                            std::vector<Action>& out) {
  for (std::size_t bits = 0; bits < (std::size_t{1} << nodes.size()); ++bits) {
    std::vector<Assignment> ts;
    for (std::size_t j = 0; j < nodes.size(); ++j) ts.push_back({nodes[j], ((bits >> j) & 1U) != 0});
    out.push_back(Action::make(g, std::move(ts)));
  }
}

inline double num(const json& p, const std::string& key, double dflt) {
  if (!p.contains(key)) return dflt;
  if (!p[key].is_number()) throw ParamError("parameter '" + key + "' must be a number");
  return p[key].get<double>();
}

inline std::size_t count(const json& p, const std::string& key, std::size_t dflt, std::size_t lo,
                         std::size_t hi) {
  if (!p.contains(key)) return dflt;
  if (!p[key].is_number_integer()) throw ParamError("parameter '" + key + "' must be an integer");
  const auto v = p[key].get<long long>();
  if (v < static_cast<long long>(lo) || v > static_cast<long long>(hi)) {
    throw ParamError("parameter '" + key + "' must lie in [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
  }
  return static_cast<std::size_t>(v);
}

inline bool flag(const json& p, const std::string& key, bool dflt) {
  if (!p.contains(key)) return dflt;
  if (!p[key].is_boolean()) throw ParamError("parameter '" + key + "' must be a boolean");
  return p[key].get<bool>();
}

inline void check_prob(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ParamError(what + " must lie in [0,1]");
}

inline std::vector<std::optional<AdmissibleSequence>> constructed_sequences(
    const CausalGraph& g, const std::vector<Action>& actions) {
  std::vector<std::optional<AdmissibleSequence>> out;
  for (const auto& a : actions) out.push_back(construct_admissible_sequence_no_hidden(g, a));
  return out;
}

// Sequence with `first` as block 1 and empty later blocks, kept only if it
// verifies.
inline std::optional<AdmissibleSequence> single_block(const CausalGraph& g, const Action& a,
                                                      NodeSet first) {
  AdmissibleSequence s;
  s.intervened = a.ordered_nodes();
  s.blocks.assign(a.size(), {});
  if (!a.is_null()) s.blocks[0] = normalize(std::move(first));
  if (verify_admissible_sequence(g, a, s)) return s;
  return std::nullopt;
}

// Nodes joined to `from` through hidden common parents.
inline NodeSet c_component(const CausalGraph& g, const NodeSet& from) {
  NodeSet comp = from;
  for (bool grew = true; grew;) {
    grew = false;
    for (NodeId h : g.hidden_nodes()) {
      if (!intersects(g.children(h), comp)) continue;
      const NodeSet next = set_union(comp, g.children(h));
      if (next.size() != comp.size()) {
        comp = next;
        grew = true;
      }
    }
  }
  return comp;
}

// Layered construction for trees with same-layer confounders: the block of
// the first target in layer i is C(S_i) u Pa(C(S_i)) minus everything used
// before, restricted to observed nodes.
inline std::optional<AdmissibleSequence> layered_sequence(const CausalGraph& g, const Action& a,
                                                          const std::vector<std::size_t>& layer) {
  AdmissibleSequence s;
  s.intervened = a.ordered_nodes();
  s.blocks.assign(a.size(), {});
  NodeSet used;
  std::vector<NodeId> xs = s.intervened;
  std::vector<std::size_t> idx(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t p, std::size_t q) { return layer[xs[p]] < layer[xs[q]]; });
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    NodeSet si;
    while (j < idx.size() && layer[xs[idx[j]]] == layer[xs[idx[i]]]) si.push_back(xs[idx[j++]]);
    si = normalize(si);
    const NodeSet comp = c_component(g, si);
    NodeSet block = comp;
    for (NodeId c : comp) block = set_union(block, g.parents(c));
    NodeSet keep;
    for (NodeId v : block) {
      if (g.kind(v) == NodeKind::observed && !contains(used, v) && !contains(a.node_set(), v)) {
        keep.push_back(v);
      }
    }
    const std::size_t first = *std::min_element(idx.begin() + static_cast<std::ptrdiff_t>(i),
                                                idx.begin() + static_cast<std::ptrdiff_t>(j));
    s.blocks[first] = keep;
    used = set_union(used, keep);
    used = set_union(used, si);
    i = j;
  }
  if (verify_admissible_sequence(g, a, s)) return s;
  return std::nullopt;
}

// Exact P(Y = 1 | x) range over full assignments of a parallel graph's
// causes, plus the gap extremes, for class membership checks.
inline XiInstance xi_summary(const ScmModel& m, const std::vector<double>& delta, double eps) {
  XiInstance x;
  const auto& cy = m.cpt()[m.graph().reward()];
  x.p_min = *std::min_element(cy.begin(), cy.end());
  x.p_max = *std::max_element(cy.begin(), cy.end());
  x.delta_min = *std::min_element(delta.begin(), delta.end());
  x.delta_max = *std::max_element(delta.begin(), delta.end());
  x.epsilon = eps;
  return x;
}

// ---------------------------------------------------------------------------
// Families

inline Instance experiment1(const json& p, std::uint64_t seed) {
  const std::size_t n = count(p, "nodes", 8, 2, 16);
  const std::size_t k = count(p, "action_size", 3, 1, n);
  const std::size_t ry = count(p, "reward_parents", 4, 1, n);
  const double base = num(p, "base", 0.4);
  const double w = num(p, "weight", 0.1);
  std::vector<double> wy{0.3, 0.3, 0.3, 0.05};
  if (p.contains("reward_weights")) wy = p["reward_weights"].get<std::vector<double>>();
  if (wy.size() < ry) throw ParamError("reward_weights needs one weight per reward parent");
  CounterRng rng(derive_key(seed, 1));

  GraphBuilder b;
  const NodeId x0 = b.add("X0");
  std::vector<NodeId> xs;
  for (std::size_t i = 1; i <= n; ++i) xs.push_back(b.add("X" + std::to_string(i)));
  const NodeId y = b.add("Y", NodeKind::reward);
  std::vector<std::vector<NodeId>> pa(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.edge(x0, xs[i]);
    for (std::size_t j : choose(i, std::min<std::size_t>(2, i), rng)) {
      b.edge(xs[j], xs[i]);
      pa[i].push_back(xs[j]);
    }
  }
  b.edge(x0, y);
  const auto ypa = choose(n, ry, rng);
  // Reward parents shuffled before weights are assigned.
  std::vector<std::size_t> yorder = ypa;
  for (std::size_t i = yorder.size(); i > 1; --i) {
    std::swap(yorder[i - 1], yorder[static_cast<std::size_t>(rng.below(i))]);
  }
  for (std::size_t j : ypa) b.edge(xs[j], y);
  CausalGraph g = b.build(x0);

  BglmParams params;
  params.theta.assign(g.size(), {});
  params.link.assign(g.size(), Link::identity);
  for (std::size_t i = 0; i < n; ++i) {
    for (NodeId u : g.parents(xs[i])) params.theta[xs[i]].push_back(u == x0 ? base : w);
  }
  for (NodeId u : g.parents(y)) {
    double t = 0.0;
    for (std::size_t r = 0; r < yorder.size(); ++r) {
      if (xs[yorder[r]] == u) t = wy[r];
    }
    params.theta[y].push_back(t);
  }
  params.noise_width = num(p, "noise_width", 0.0);
  ScmModel model = [&] {
    try {
      return ScmModel::bglm(std::move(g), std::move(params));
    } catch (const ModelError& e) {
      throw ParamError(e.what());
    }
  }();
  std::vector<Action> actions;
  combinations(xs, k, [&](const std::vector<NodeId>& s) {
    actions.push_back(Action::uniform(model.graph(), normalize(s), true));
  });
  if (flag(p, "include_do", false)) actions.insert(actions.begin(), Action::null());
  auto seqs = constructed_sequences(model.graph(), actions);
  return Instance{"experiment1", std::move(model), std::move(actions), std::move(seqs), std::nullopt};
}

inline Instance experiment2(const json& p, std::uint64_t seed) {
  const std::size_t n = count(p, "nodes", 7, 4, 12);
  const std::size_t k = count(p, "action_size", 2, 1, 3);
  const double hi = num(p, "high", 0.55);
  const double lo = num(p, "low", 0.45);
  check_prob(hi, "high");
  check_prob(lo, "low");
  CounterRng rng(derive_key(seed, 2));

  GraphBuilder b;
  std::vector<NodeId> xs;
  for (std::size_t i = 1; i <= n; ++i) xs.push_back(b.add("X" + std::to_string(i)));
  const NodeId y = b.add("Y", NodeKind::reward);
  b.edge(xs[0], xs[1]);
  for (std::size_t i = 2; i < n; ++i) {
    for (std::size_t j : choose(i, 2, rng)) b.edge(xs[j], xs[i]);
  }
  // The last five nodes feed the reward; the first two drive the top branch.
  std::vector<NodeId> yp(xs.end() - 5, xs.end());
  for (NodeId u : yp) b.edge(u, y);
  CausalGraph g = b.build();

  std::vector<std::vector<double>> cpt(g.size());
  cpt[xs[0]] = {0.5};
  cpt[xs[1]] = table(g, xs[1], [&](const auto& v) { return v(xs[0]) ? hi : lo; });
  for (std::size_t i = 2; i < n; ++i) {
    const NodeSet& pa = g.parents(xs[i]);
    cpt[xs[i]] = table(g, xs[i], [&](const auto& v) { return v(pa[0]) == v(pa[1]) ? hi : lo; });
  }
  cpt[y] = table(g, y, [&](const auto& v) {
    if (v(yp[0]) && v(yp[1])) return 0.9;
    if (v(yp[2]) && v(yp[3])) return 0.7 + 0.05 * v(yp[0]) + 0.05 * v(yp[1]);
    return 0.0;
  });
  ScmModel model = ScmModel::tabular(std::move(g), std::move(cpt));
  std::vector<Action> actions;
  combinations(xs, k, [&](const std::vector<NodeId>& s) { all_assignments(model.graph(), s, actions); });
  if (flag(p, "include_do", false)) actions.insert(actions.begin(), Action::null());
  auto seqs = constructed_sequences(model.graph(), actions);
  return Instance{"experiment2", std::move(model), std::move(actions), std::move(seqs), std::nullopt};
}

inline Instance experiment3(const json& p, std::uint64_t) {
  const std::size_t n = count(p, "n", 5, 3, 8);
  GraphBuilder b;
  std::vector<NodeId> x;
  for (std::size_t i = 0; i <= n + 1; ++i) x.push_back(b.add("X" + std::to_string(i)));
  std::vector<NodeId> u;
  for (std::size_t i = 0; i < n; ++i) u.push_back(b.add("U" + std::to_string(i), NodeKind::hidden));
  const NodeId y = b.add("Y", NodeKind::reward);
  b.edge(x[1], x[0]);
  for (std::size_t i = 2; i <= n + 1; ++i) {
    b.edge(x[1], x[i]);
    b.edge(u[i - 2], x[i]);
    b.edge(x[i], y);
  }
  for (NodeId h : u) b.edge(h, x[0]);
  CausalGraph g = b.build();

  std::vector<std::vector<double>> cpt(g.size());
  for (NodeId h : u) cpt[h] = {0.5};
  cpt[x[1]] = {0.5};
  cpt[x[0]] = table(g, x[0], [&](const auto& v) {
    double s = 0.0;
    for (NodeId h : u) s += v(h);
    return std::min(s / static_cast<double>(n) + 0.1 * v(x[1]), 1.0);
  });
  for (std::size_t i = 2; i <= n + 1; ++i) {
    cpt[x[i]] = table(g, x[i], [&](const auto& v) { return v(x[1]) && v(u[i - 2]) ? 0.5 : 0.4; });
  }
  cpt[y] = table(g, y, [&](const auto& v) {
    double s = 0.4 * v(x[2]) + 0.4 * v(x[3]);
    for (std::size_t i = 4; i <= n + 1; ++i) s += 0.2 / static_cast<double>(n) * v(x[i]);
    return s;
  });
  ScmModel model = ScmModel::tabular(std::move(g), std::move(cpt));
  std::vector<NodeId> pool(x.begin() + 2, x.end());
  std::vector<Action> actions;
  combinations(pool, 2, [&](const std::vector<NodeId>& s) { all_assignments(model.graph(), s, actions); });
  if (flag(p, "include_do", false)) actions.insert(actions.begin(), Action::null());
  std::vector<std::optional<AdmissibleSequence>> seqs;
  for (const auto& a : actions) seqs.push_back(single_block(model.graph(), a, {x[1]}));
  return Instance{"experiment3", std::move(model), std::move(actions), std::move(seqs), std::nullopt};
}

// Parallel graph X_1..X_n -> Y with P(Y = 1 | x) = base + scale * sum_i w_i x_i.
inline Instance parallel_family(const std::string& kind, const json& p, double base_default,
                                double scale_default) {
  const std::size_t n = count(p, "n", 3, 1, 12);
  std::vector<double> probs(n, 0.5);
  if (p.contains("p")) {
    if (p["p"].is_array()) probs = p["p"].get<std::vector<double>>();
    else probs.assign(n, num(p, "p", 0.5));
  }
  if (probs.size() != n) throw ParamError("p must have n entries");
  for (double v : probs) check_prob(v, "p");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 2.0 * static_cast<double>(i + 1) / static_cast<double>(n * (n + 1));
  }
  if (p.contains("weights")) w = p["weights"].get<std::vector<double>>();
  if (w.size() != n) throw ParamError("weights must have n entries");
  const double base = num(p, "base", base_default);
  const double scale = num(p, "scale", scale_default);

  GraphBuilder b;
  std::vector<NodeId> xs;
  for (std::size_t i = 1; i <= n; ++i) xs.push_back(b.add("X" + std::to_string(i)));
  const NodeId y = b.add("Y", NodeKind::reward);
  for (NodeId v : xs) b.edge(v, y);
  CausalGraph g = b.build();
  std::vector<std::vector<double>> cpt(g.size());
  for (std::size_t i = 0; i < n; ++i) cpt[xs[i]] = {probs[i]};
  cpt[y] = table(g, y, [&](const auto& v) {
    double s = base;
    for (std::size_t i = 0; i < n; ++i) s += scale * w[i] * v(xs[i]);
    return s;
  });
  for (double v : cpt[y]) check_prob(v, "P(Y = 1 | x)");
  ScmModel model = ScmModel::tabular(std::move(g), std::move(cpt));
  std::vector<Action> actions;
  if (flag(p, "include_do", true)) actions.push_back(Action::null());
  for (NodeId v : xs) {
    actions.push_back(Action::make(model.graph(), {{v, false}}));
    actions.push_back(Action::make(model.graph(), {{v, true}}));
  }
  auto seqs = constructed_sequences(model.graph(), actions);
  return Instance{kind, std::move(model), std::move(actions), std::move(seqs), std::nullopt};
}

inline Instance parallel(const json& p, std::uint64_t) {
  return parallel_family("parallel", p, 0.1, 0.8);
}

inline Instance lower_bound_xi(const json& p, std::uint64_t) {
  Instance inst = parallel_family("lower_bound_xi", p, 0.3, 0.3);
  if (!inst.actions.front().is_null()) throw ParamError("class xi requires do() in the catalog");
  const double eps = num(p, "epsilon", 0.0);
  const GapReport gr = gaps(inst.model, inst.actions, eps);
  const XiInstance xi = xi_summary(inst.model, gr.delta, eps);
  try {
    check_xi(xi);
  } catch (const InstanceClassError& e) {
    throw ParamError(e.what());
  }
  inst.xi = xi;
  return inst;
}

// Key layer A (with optional confounders) feeding a layer B that feeds Y.
inline Instance two_layer(const json& p, std::uint64_t seed) {
  const std::size_t k = count(p, "key", 2, 1, 4);
  const std::size_t nb = count(p, "rest", 4, 1, 8);
  const std::size_t l = count(p, "max_size", 2, 1, nb);
  const bool confounded = flag(p, "confounded", true);
  const double density = num(p, "density", 0.6);
  check_prob(density, "density");
  CounterRng rng(derive_key(seed, 3));

  GraphBuilder b;
  std::vector<NodeId> as, bs;
  for (std::size_t i = 1; i <= k; ++i) as.push_back(b.add("A" + std::to_string(i)));
  for (std::size_t i = 1; i <= nb; ++i) bs.push_back(b.add("B" + std::to_string(i)));
  const NodeId y = b.add("Y", NodeKind::reward);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (rng.bernoulli(density)) b.edge(as[i], as[j]);
    }
  }
  std::optional<NodeId> conf;
  if (confounded && k >= 2) {
    conf = b.add("U1", NodeKind::hidden);
    b.edge(*conf, as[0]);
    b.edge(*conf, as[1]);
  }
  for (NodeId v : bs) {
    bool any = false;
    for (NodeId a : as) {
      if (rng.bernoulli(density)) {
        b.edge(a, v);
        any = true;
      }
    }
    if (!any) b.edge(as[static_cast<std::size_t>(rng.below(k))], v);
    b.edge(v, y);
  }
  CausalGraph g = b.build();
  std::vector<double> w(nb);
  double tot = 0.0;
  for (double& x : w) tot += (x = 0.2 + rng.uniform());
  std::vector<std::vector<double>> cpt(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    if (v != y) cpt[v] = random_table(g, v, rng);
  }
  cpt[y] = table(g, y, [&](const auto& v) {
    double s = 0.1;
    for (std::size_t i = 0; i < nb; ++i) s += 0.8 * w[i] / tot * v(bs[i]);
    return s;
  });
  ScmModel model = ScmModel::tabular(std::move(g), std::move(cpt));
  std::vector<Action> actions;
  actions.push_back(Action::null());
  for (std::size_t sz = 1; sz <= l; ++sz) {
    combinations(bs, sz, [&](const std::vector<NodeId>& s) { all_assignments(model.graph(), s, actions); });
  }
  std::vector<std::optional<AdmissibleSequence>> seqs;
  for (const auto& a : actions) {
    seqs.push_back(a.is_null() ? std::nullopt : single_block(model.graph(), a, as));
  }
  return Instance{"two_layer", std::move(model), std::move(actions), std::move(seqs), std::nullopt};
}

// Groups of nodes with in-group edges and confounders, every node feeding Y.
// The adjustment set of an action is the rest of its groups, minus any
// descendants of the targets.
inline Instance collaborative(const json& p, std::uint64_t seed) {
  const std::size_t groups = count(p, "groups", 3, 1, 4);
  const std::size_t size = count(p, "group_size", 2, 1, 3);
  const std::size_t d = count(p, "max_size", 2, 1, groups);
  const bool confounded = flag(p, "confounded", true);
  const double density = num(p, "density", 0.5);
  check_prob(density, "density");
  CounterRng rng(derive_key(seed, 4));

  GraphBuilder b;
  std::vector<std::vector<NodeId>> gs(groups);
  for (std::size_t i = 0; i < groups; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      gs[i].push_back(b.add("G" + std::to_string(i + 1) + "_" + std::to_string(j + 1)));
    }
  }
  const NodeId y = b.add("Y", NodeKind::reward);
  for (std::size_t i = 0; i < groups; ++i) {
    for (std::size_t a = 0; a < size; ++a) {
      for (std::size_t c = a + 1; c < size; ++c) {
        if (rng.bernoulli(density)) b.edge(gs[i][a], gs[i][c]);
      }
    }
    if (confounded && size >= 2) {
      const NodeId h = b.add("U" + std::to_string(i + 1), NodeKind::hidden);
      b.edge(h, gs[i][0]);
      b.edge(h, gs[i][1]);
    }
    for (NodeId v : gs[i]) b.edge(v, y);
  }
  CausalGraph g = b.build();
  std::vector<NodeId> all;
  for (const auto& grp : gs) all.insert(all.end(), grp.begin(), grp.end());
  std::vector<double> w(all.size());
  double tot = 0.0;
  for (double& x : w) tot += (x = 0.2 + rng.uniform());
  std::vector<std::vector<double>> cpt(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    if (v != y) cpt[v] = random_table(g, v, rng);
  }
  cpt[y] = table(g, y, [&](const auto& v) {
    double s = 0.1;
    for (std::size_t i = 0; i < all.size(); ++i) s += 0.8 * w[i] / tot * v(all[i]);
    return s;
  });
  ScmModel model = ScmModel::tabular(std::move(g), std::move(cpt));
  const CausalGraph& mg = model.graph();

  std::vector<Action> actions{Action::null()};
  std::vector<std::size_t> group_ids(groups);
  for (std::size_t i = 0; i < groups; ++i) group_ids[i] = i;
  for (std::size_t sz = 1; sz <= d; ++sz) {
    combinations(group_ids, sz, [&](const std::vector<std::size_t>& chosen) {
      std::function<void(std::size_t, std::vector<NodeId>&)> pick = [&](std::size_t i,
                                                                        std::vector<NodeId>& cur) {
        if (i == chosen.size()) {
          all_assignments(mg, cur, actions);
          return;
        }
        for (NodeId v : gs[chosen[i]]) {
          cur.push_back(v);
          pick(i + 1, cur);
          cur.pop_back();
        }
      };
      std::vector<NodeId> cur;
      pick(0, cur);
    });
  }
  std::vector<std::optional<AdmissibleSequence>> seqs;
  for (const auto& a : actions) {
    if (a.is_null()) {
      seqs.push_back(std::nullopt);
      continue;
    }
    NodeSet t;
    for (const auto& grp : gs) {
      const NodeSet gn = normalize(grp);
      if (intersects(gn, a.node_set())) t = set_union(t, gn);
    }
    t = set_difference(t, mg.descendants(a.node_set()));
    seqs.push_back(single_block(mg, a, t));
  }
  return Instance{"collaborative", std::move(model), std::move(actions), std::move(seqs), std::nullopt};
}

// Directed tree X1 -> {X2, X3}, X2 -> {X4, X5}, X3 -> X6, X4 -> {X7, X8}
// with confounders U1 on (X2, X3) and U2 on (X7, X8); leaves X5..X8 feed Y.
inline Instance causal_tree(const json& p, std::uint64_t seed) {
  CounterRng rng(derive_key(seed, 5));
  GraphBuilder b;
  std::vector<NodeId> x{0};
  for (std::size_t i = 1; i <= 8; ++i) x.push_back(b.add("X" + std::to_string(i)));
  const NodeId u1 = b.add("U1", NodeKind::hidden);
  const NodeId u2 = b.add("U2", NodeKind::hidden);
  const NodeId y = b.add("Y", NodeKind::reward);
  const std::vector<std::pair<int, int>> tree{{1, 2}, {1, 3}, {2, 4}, {2, 5}, {3, 6}, {4, 7}, {4, 8}};
  for (auto [a, c] : tree) b.edge(x[static_cast<std::size_t>(a)], x[static_cast<std::size_t>(c)]);
  b.edge(u1, x[2]);
  b.edge(u1, x[3]);
  b.edge(u2, x[7]);
  b.edge(u2, x[8]);
  for (int leaf : {5, 6, 7, 8}) b.edge(x[static_cast<std::size_t>(leaf)], y);
  CausalGraph g = b.build();
  std::vector<std::vector<double>> cpt(g.size());
  for (NodeId v = 0; v < g.size(); ++v) cpt[v] = random_table(g, v, rng, 0.15, 0.85);
  ScmModel model = ScmModel::tabular(std::move(g), std::move(cpt));
  const CausalGraph& mg = model.graph();

  std::vector<std::size_t> layer(mg.size(), 0);
  for (NodeId v : mg.topological_order()) {
    for (NodeId pa : mg.parents(v)) {
      if (mg.kind(pa) == NodeKind::observed) layer[v] = std::max(layer[v], layer[pa] + 1);
    }
  }
  std::vector<std::vector<NodeId>> targets;
  if (p.contains("targets")) {
    for (const auto& t : p["targets"]) {
      std::vector<NodeId> s;
      for (const auto& nm : t) {
        const auto v = mg.find(nm.get<std::string>());
        if (!v || mg.kind(*v) != NodeKind::observed) throw ParamError("unknown target " + nm.dump());
        s.push_back(*v);
      }
      targets.push_back(s);
    }
  } else {
    const std::size_t max_size = count(p, "max_size", 1, 1, 3);
    std::vector<NodeId> obs(x.begin() + 1, x.end());
    for (std::size_t sz = 1; sz <= max_size; ++sz) {
      combinations(obs, sz, [&](const std::vector<NodeId>& s) { targets.push_back(s); });
    }
    if (max_size < 3) targets.push_back({x[3], x[4], x[8]});
  }
  std::vector<Action> actions{Action::null()};
  for (const auto& s : targets) all_assignments(mg, s, actions);
  std::vector<std::optional<AdmissibleSequence>> seqs;
  for (const auto& a : actions) {
    seqs.push_back(a.is_null() ? std::nullopt : layered_sequence(mg, a, layer));
  }
  return Instance{"causal_tree", std::move(model), std::move(actions), std::move(seqs), std::nullopt};
}

}  // namespace gen

inline const std::vector<std::string>& instance_kinds() {
  static const std::vector<std::string> kinds{"experiment1", "experiment2", "experiment3",
                                              "parallel",    "two_layer",   "collaborative",
                                              "causal_tree", "lower_bound_xi"};
  return kinds;
}

inline Instance generate_instance(const std::string& kind, const nlohmann::json& params,
                                  std::uint64_t seed) {
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  if (!p.is_object()) throw ParamError("instance params must be an object");
  try {
    if (kind == "experiment1") return gen::experiment1(p, seed);
    if (kind == "experiment2") return gen::experiment2(p, seed);
    if (kind == "experiment3") return gen::experiment3(p, seed);
    if (kind == "parallel") return gen::parallel(p, seed);
    if (kind == "two_layer") return gen::two_layer(p, seed);
    if (kind == "collaborative") return gen::collaborative(p, seed);
    if (kind == "causal_tree") return gen::causal_tree(p, seed);
    if (kind == "lower_bound_xi") return gen::lower_bound_xi(p, seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParamError(std::string("bad parameter: ") + e.what());
  }
  throw ParamError("unknown instance kind '" + kind + "'");
}

}  // namespace cpe
