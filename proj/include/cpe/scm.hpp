#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cpe/action.hpp"
#include "cpe/admissible.hpp"
#include "cpe/errors.hpp"
#include "cpe/graph.hpp"
#include "cpe/rng.hpp"

namespace cpe {

// Exact oracles refuse models above this many nodes rather than approximate.
inline constexpr std::size_t kEnumerationLimit = 20;
// Node values are packed into one 64-bit word.
inline constexpr std::size_t kMaxModelNodes = 64;

using Bits = std::uint64_t;

inline bool bit(Bits b, NodeId v) noexcept { return (b >> v) & 1U; }

// ---------------------------------------------------------------------------
// Links

enum class Link { identity, logistic };

inline const char* to_string(Link l) { return l == Link::identity ? "identity" : "logistic"; }

inline Link parse_link(const std::string& s) {
  if (s == "identity") return Link::identity;
  if (s == "logistic") return Link::logistic;
  throw ModelError("unknown link '" + s + "'");
}

inline double link_value(Link l, double x) {
  if (l == Link::identity) return x;
  return 1.0 / (1.0 + std::exp(-x));
}

inline double link_derivative(Link l, double x) {
  if (l == Link::identity) return 1.0;
  const double s = link_value(Link::logistic, x);
  return s * (1.0 - s);
}

// Per-link sup |f'| and sup |f''|. For the logistic these are 1/4 and
// 1/(6 sqrt 3), attained at 0 and at +-ln(2 + sqrt 3).
inline double link_m1(Link l) { return l == Link::identity ? 1.0 : 0.25; }
inline double link_m2(Link l) { return l == Link::identity ? 0.0 : 1.0 / (6.0 * std::sqrt(3.0)); }

// Constants the BGLM radii and theory-mode stopping rule depend on.
struct AssumptionConstants {
  double m1 = 1.0;
  double m2 = 0.0;
  double kappa = 1.0;
  double eta = 1.0;
  double c = 1.0;
  std::size_t d_max = 1;

  void validate() const {
    if (!(m1 > 0 && m2 >= 0 && kappa > 0 && eta > 0 && c > 0 && d_max >= 1)) {
      throw ModelError("assumption constants must be positive");
    }
  }
};

struct BglmParams {
  // theta[v][j] weights the j-th parent of v (parents ascending by index).
  std::vector<std::vector<double>> theta;
  std::vector<Link> link;
  // Half-width of optional zero-mean uniform noise on each node's success
  // probability, truncated to [0, 1].
  double noise_width = 0.0;
};

struct Observation {
  Bits values = 0;  // observed non-reward nodes; hidden bits are cleared
  bool y = false;

  bool value(NodeId v) const noexcept { return bit(values, v); }
};

// ---------------------------------------------------------------------------
// Model

// Executable SCM over binary nodes. Both tabular models and BGLMs are stored
// as per-node tables P(V = 1 | pa(V)); a BGLM additionally keeps its weights.
// Table index: bit j is the value of the j-th parent in ascending index order.
class ScmModel {
 public:
  static ScmModel tabular(CausalGraph graph, std::vector<std::vector<double>> cpt) {
    ScmModel m(std::move(graph));
    if (cpt.size() != m.graph_.size()) throw ModelError("cpt list must cover every node");
    for (NodeId v = 0; v < m.graph_.size(); ++v) {
      const std::size_t want = std::size_t{1} << m.graph_.parents(v).size();
      if (m.graph_.global() && *m.graph_.global() == v) {
        if (cpt[v].empty()) cpt[v] = {1.0};
        if (cpt[v].size() != 1 || cpt[v][0] != 1.0) {
          throw ModelError("global node must have P(=1) = 1");
        }
        continue;
      }
      if (cpt[v].size() != want) {
        throw ModelError("cpt for " + m.graph_.name(v) + " must have " + std::to_string(want) +
                         " entries");
      }
      for (double p : cpt[v]) {
        if (!(p >= 0.0 && p <= 1.0)) {
          throw ModelError("probability out of [0,1] in cpt of " + m.graph_.name(v));
        }
      }
    }
    m.cpt_ = std::move(cpt);
    return m;
  }

  // `strict` rejects weights whose link value leaves [0,1] for some parent
  // assignment; fitted weights are built with strict = false and clamped.
  static ScmModel bglm(CausalGraph graph, BglmParams params, bool strict = true) {
    ScmModel m(std::move(graph));
    const CausalGraph& g = m.graph_;
    if (g.has_hidden()) throw ModelError("BGLM does not allow hidden nodes");
    if (!g.global()) throw ModelError("BGLM requires a global node");
    if (params.theta.size() != g.size() || params.link.size() != g.size()) {
      throw ModelError("theta/link must cover every node");
    }
    if (params.noise_width < 0.0) throw ModelError("noise width must be non-negative");
    m.cpt_.assign(g.size(), {});
    const NodeId global = *g.global();
    for (NodeId v = 0; v < g.size(); ++v) {
      if (v == global) {
        m.cpt_[v] = {1.0};
        continue;
      }
      const NodeSet& pa = g.parents(v);
      if (params.theta[v].size() != pa.size()) {
        throw ModelError("theta for " + g.name(v) + " must have one weight per parent");
      }
      const std::size_t rows = std::size_t{1} << pa.size();
      m.cpt_[v].assign(rows, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        bool global_off = false;
        for (std::size_t j = 0; j < pa.size(); ++j) {
          const bool on = (r >> j) & 1U;
          if (pa[j] == global && !on) global_off = true;
          if (on) dot += params.theta[v][j];
        }
        double p = link_value(params.link[v], dot);
        if (strict && !global_off && !(p >= -1e-12 && p <= 1.0 + 1e-12)) {
          throw ModelError("link value out of [0,1] for node " + g.name(v));
        }
        m.cpt_[v][r] = std::clamp(p, 0.0, 1.0);
      }
    }
    m.bglm_ = std::move(params);
    return m;
  }

  const CausalGraph& graph() const noexcept { return graph_; }
  const std::vector<std::vector<double>>& cpt() const noexcept { return cpt_; }
  bool is_bglm() const noexcept { return bglm_.has_value(); }
  const BglmParams& bglm_params() const {
    if (!bglm_) throw ModelError("not a BGLM");
    return *bglm_;
  }

  std::size_t row(NodeId v, Bits values) const noexcept {
    std::size_t r = 0;
    const NodeSet& pa = graph_.parents(v);
    for (std::size_t j = 0; j < pa.size(); ++j) {
      r |= static_cast<std::size_t>(bit(values, pa[j])) << j;
    }
    return r;
  }

  double prob_one(NodeId v, Bits values) const { return cpt_[v][row(v, values)]; }

  // Truncated-factorization sampling under `action`.
  Observation sample(const Action& action, CounterRng& rng) const {
    check_action(action);
    Bits forced_mask = 0;
    Bits forced_vals = 0;
    for (const auto& t : action.targets()) {
      forced_mask |= Bits{1} << t.node;
      if (t.value) forced_vals |= Bits{1} << t.node;
    }
    const double width = bglm_ ? bglm_->noise_width : 0.0;
    Bits values = 0;
    for (NodeId v : graph_.topological_order()) {
      const Bits m = Bits{1} << v;
      if (forced_mask & m) {
        values |= forced_vals & m;
        continue;
      }
      double p = prob_one(v, values);
      if (width > 0.0) {
        const double w = std::min({width, p, 1.0 - p});
        p += (2.0 * rng.uniform() - 1.0) * w;
      }
      if (rng.bernoulli(p)) values |= m;
    }
    Observation obs;
    obs.y = bit(values, graph_.reward());
    obs.values = values & observed_mask_;
    return obs;
  }

  void check_action(const Action& action) const {
    for (const auto& t : action.targets()) {
      graph_.check_node(t.node);
      if (graph_.kind(t.node) != NodeKind::observed ||
          (graph_.global() && *graph_.global() == t.node)) {
        throw ActionDomainError("action targets a hidden, reward or global node");
      }
    }
  }

  // Visits every full assignment with positive probability under `action`,
  // reward node excluded: fn(values, probability, P(Y = 1 | values)).
  template <class Fn>
  void enumerate(const Action& action, Fn&& fn) const {
    if (graph_.size() > kEnumerationLimit) {
      throw TooLargeError("exact enumeration limited to " + std::to_string(kEnumerationLimit) +
                          " nodes");
    }
    check_action(action);
    std::vector<NodeId> order;
    for (NodeId v : graph_.topological_order()) {
      if (v != graph_.reward()) order.push_back(v);
    }
    Bits forced_mask = 0;
    Bits forced_vals = 0;
    for (const auto& t : action.targets()) {
      forced_mask |= Bits{1} << t.node;
      if (t.value) forced_vals |= Bits{1} << t.node;
    }
    walk(order, 0, forced_vals, 1.0, forced_mask, fn);
  }

  Bits observed_mask() const noexcept { return observed_mask_; }

 private:
  explicit ScmModel(CausalGraph graph) : graph_(std::move(graph)) {
    if (graph_.size() > kMaxModelNodes) {
      throw TooLargeError("models are limited to " + std::to_string(kMaxModelNodes) + " nodes");
    }
    for (NodeId v : graph_.observed_nodes()) observed_mask_ |= Bits{1} << v;
  }

  template <class Fn>
  void walk(const std::vector<NodeId>& order, std::size_t i, Bits values, double prob,
            Bits forced_mask, Fn& fn) const {
    if (i == order.size()) {
      fn(values, prob, prob_one(graph_.reward(), values));
      return;
    }
    const NodeId v = order[i];
    if (forced_mask & (Bits{1} << v)) {
      walk(order, i + 1, values, prob, forced_mask, fn);
      return;
    }
    const double p = prob_one(v, values);
    if (p > 0.0) walk(order, i + 1, values | (Bits{1} << v), prob * p, forced_mask, fn);
    if (p < 1.0) walk(order, i + 1, values, prob * (1.0 - p), forced_mask, fn);
  }

  CausalGraph graph_;
  std::vector<std::vector<double>> cpt_;
  std::optional<BglmParams> bglm_;
  Bits observed_mask_ = 0;
};

// ---------------------------------------------------------------------------
// Exact oracles

inline double exact_mu(const ScmModel& model, const Action& action) {
  double mu = 0.0;
  model.enumerate(action, [&](Bits, double p, double py) { mu += p * py; });
  return std::clamp(mu, 0.0, 1.0);
}

// Joint distribution of the observed nodes (reward last) under an action,
// hidden nodes marginalized. Index bit j <-> nodes[j].
struct JointTable {
  std::vector<NodeId> nodes;
  std::vector<double> prob;

  std::size_t slot(NodeId v) const {
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (nodes[j] == v) return j;
    }
    throw UnknownNodeError("node not in joint table");
  }

  // Probability that every (node, value) pair holds.
  double probability(const std::vector<Assignment>& event) const {
    std::size_t mask = 0, want = 0;
    for (const auto& a : event) {
      const std::size_t j = slot(a.node);
      mask |= std::size_t{1} << j;
      if (a.value) want |= std::size_t{1} << j;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
      if ((i & mask) == want) s += prob[i];
    }
    return s;
  }
};

inline JointTable exact_joint(const ScmModel& model, const Action& action = Action::null()) {
  const CausalGraph& g = model.graph();
  JointTable t;
  t.nodes = g.observed_nodes();
  t.nodes.push_back(g.reward());
  if (t.nodes.size() > kEnumerationLimit) throw TooLargeError("joint table too large");
  t.prob.assign(std::size_t{1} << t.nodes.size(), 0.0);
  const std::size_t y_bit = std::size_t{1} << (t.nodes.size() - 1);
  model.enumerate(action, [&](Bits values, double p, double py) {
    std::size_t idx = 0;
    for (std::size_t j = 0; j + 1 < t.nodes.size(); ++j) {
      idx |= static_cast<std::size_t>(bit(values, t.nodes[j])) << j;
    }
    t.prob[idx | y_bit] += p * py;
    t.prob[idx] += p * (1.0 - py);
  });
  return t;
}

// ---------------------------------------------------------------------------
// Gaps

struct GapReport {
  std::vector<double> mu;
  std::vector<double> delta;
  std::vector<double> clamped;  // max{delta, eps/2}
  std::size_t best = 0;
  double delta_min = 0.0;
  std::vector<std::size_t> ranking;  // by mean, descending; ties by index
};

inline GapReport gaps_from_means(const std::vector<double>& mu, double epsilon) {
  if (mu.empty()) throw EmptyError("gap computation needs at least one action");
  GapReport r;
  r.mu = mu;
  r.ranking.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) r.ranking[i] = i;
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return mu[a] > mu[b]; });
  r.best = r.ranking.front();
  const double top = mu[r.best];
  const double second = mu.size() > 1 ? mu[r.ranking[1]] : top;
  r.delta.resize(mu.size());
  r.clamped.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    r.delta[i] = i == r.best ? top - second : top - mu[i];
    r.clamped[i] = std::max(r.delta[i], epsilon / 2.0);
  }
  r.delta_min = *std::min_element(r.delta.begin(), r.delta.end());
  return r;
}

inline GapReport gaps(const ScmModel& model, const std::vector<Action>& actions, double epsilon) {
  std::vector<double> mu;
  mu.reserve(actions.size());
  for (const auto& a : actions) mu.push_back(exact_mu(model, a));
  return gaps_from_means(mu, epsilon);
}

// ---------------------------------------------------------------------------
// Ease-of-observation scores

// min_z P(S = s, Z_a = z) under do(). A global node inside Z_a is pinned to 1:
// it is constant, so assignments with it off carry no mass and are skipped.
inline double q_general(const ScmModel& model, const Action& action,
                        const std::optional<AdmissibleSequence>& seq) {
  if (action.is_null()) return 1.0;
  if (!seq) return 0.0;
  const JointTable joint = exact_joint(model);
  const NodeSet zs = seq->union_nodes();
  std::vector<std::size_t> zslot;
  for (NodeId z : zs) zslot.push_back(joint.slot(z));
  std::size_t smask = 0, swant = 0;
  for (const auto& t : action.targets()) {
    const std::size_t j = joint.slot(t.node);
    smask |= std::size_t{1} << j;
    if (t.value) swant |= std::size_t{1} << j;
  }
  std::vector<double> bucket(std::size_t{1} << zs.size(), 0.0);
  for (std::size_t i = 0; i < joint.prob.size(); ++i) {
    if ((i & smask) != swant) continue;
    std::size_t z = 0;
    for (std::size_t j = 0; j < zslot.size(); ++j) z |= ((i >> zslot[j]) & 1U) << j;
    bucket[z] += joint.prob[i];
  }
  const auto& global = model.graph().global();
  double q = 1.0;
  for (std::size_t z = 0; z < bucket.size(); ++z) {
    bool skip = false;
    for (std::size_t j = 0; j < zs.size(); ++j) {
      if (global && zs[j] == *global && !((z >> j) & 1U)) skip = true;
    }
    if (!skip) q = std::min(q, bucket[z]);
  }
  return q;
}

// Structural score 1 / (l_S^2 D^3) with l_S = |N_{S,Y}|. An action that cuts
// every global-to-reward path has a constant reward and gets q = 1.
inline double q_bglm(const CausalGraph& graph, const Action& action, std::size_t d_max) {
  if (!graph.global()) throw NoGlobalNodeError("BGLM score needs a global node");
  if (action.is_null()) return 1.0;
  if (d_max == 0) throw DomainError("D must be positive");
  const double ell = static_cast<double>(path_nodes_to_reward(graph, action.node_set()).size());
  if (ell == 0.0) return 1.0;
  const double d = static_cast<double>(d_max);
  return 1.0 / (ell * ell * d * d * d);
}

// ---------------------------------------------------------------------------
// Assumption constants of a BGLM

// kappa: f'(v.theta) is minimized where |v.theta| is largest; over
// v in [0,1]^Pa and ||theta - theta*|| <= 1 that is max_v |v.theta*| + sqrt|Pa|.
// eta: smallest P(X' = x | other non-global parents = v) over positive-mass v,
// read off the exact observational joint.
inline AssumptionConstants derive_constants(const ScmModel& model, double c = 1.0) {
  const CausalGraph& g = model.graph();
  const BglmParams& params = model.bglm_params();
  AssumptionConstants k;
  k.c = c;
  k.d_max = std::max<std::size_t>(1, g.max_in_degree());
  k.m1 = 0.0;
  k.m2 = 0.0;
  k.kappa = std::numeric_limits<double>::infinity();
  const NodeId global = *g.global();
  for (NodeId v = 0; v < g.size(); ++v) {
    if (v == global) continue;
    const Link l = params.link[v];
    k.m1 = std::max(k.m1, link_m1(l));
    k.m2 = std::max(k.m2, link_m2(l));
    if (l == Link::identity) {
      k.kappa = std::min(k.kappa, 1.0);
      continue;
    }
    const auto& th = params.theta[v];
    double pos = 0.0, neg = 0.0;
    for (double w : th) (w > 0 ? pos : neg) += w;
    const double reach = std::max(pos, -neg) + std::sqrt(static_cast<double>(th.size()));
    k.kappa = std::min(k.kappa, link_derivative(Link::logistic, reach));
  }
  if (!std::isfinite(k.kappa)) k.kappa = 1.0;
  if (k.m1 == 0.0) k.m1 = 1.0;

  const JointTable joint = exact_joint(model);
  double eta = 1.0;
  for (NodeId v = 0; v < g.size(); ++v) {
    NodeSet pa;
    for (NodeId p : g.parents(v)) {
      if (p != global) pa.push_back(p);
    }
    for (NodeId target : pa) {
      const std::size_t tj = joint.slot(target);
      std::vector<std::size_t> others;
      for (NodeId p : pa) {
        if (p != target) others.push_back(joint.slot(p));
      }
      std::vector<double> total(std::size_t{1} << others.size(), 0.0);
      std::vector<double> ones(total.size(), 0.0);
      for (std::size_t i = 0; i < joint.prob.size(); ++i) {
        std::size_t key = 0;
        for (std::size_t j = 0; j < others.size(); ++j) key |= ((i >> others[j]) & 1U) << j;
        total[key] += joint.prob[i];
        if ((i >> tj) & 1U) ones[key] += joint.prob[i];
      }
      for (std::size_t key = 0; key < total.size(); ++key) {
        if (total[key] <= 1e-15) continue;
        const double p1 = ones[key] / total[key];
        eta = std::min({eta, p1, 1.0 - p1});
      }
    }
  }
  k.eta = eta > 0.0 ? eta : std::numeric_limits<double>::min();
  return k;
}

}  // namespace cpe
