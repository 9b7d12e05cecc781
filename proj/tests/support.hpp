#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cpe/experiment.hpp"

namespace cpe::oracle {

// Random DAG over `n_obs` observed nodes, `n_hidden` hidden nodes and a reward
// node appended last. Edges go forward in a random permutation of the
// non-reward nodes; each observed node feeds the reward with probability p.
inline CausalGraph random_dag(CounterRng& rng, std::size_t n_obs, std::size_t n_hidden, double p) {
  gen::GraphBuilder b;
  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < n_obs; ++i) ids.push_back(b.add("X" + std::to_string(i + 1)));
  for (std::size_t i = 0; i < n_hidden; ++i) {
    ids.push_back(b.add("U" + std::to_string(i + 1), NodeKind::hidden));
  }
  const NodeId y = b.add("Y", NodeKind::reward);
  std::vector<NodeId> perm = ids;
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.below(i))]);
  }
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t j = i + 1; j < perm.size(); ++j) {
      if (rng.bernoulli(p)) b.edge(perm[i], perm[j]);
    }
  }
  for (NodeId v : ids) {
    if (b.nodes[v].kind == NodeKind::observed && rng.bernoulli(p)) b.edge(v, y);
  }
  return b.build();
}

inline ScmModel random_model(CausalGraph g, CounterRng& rng, double lo = 0.05, double hi = 0.95) {
  std::vector<std::vector<double>> cpt(g.size());
  for (NodeId v = 0; v < g.size(); ++v) cpt[v] = gen::random_table(g, v, rng, lo, hi);
  return ScmModel::tabular(std::move(g), std::move(cpt));
}

// Probability of an event over the joint table given as (node, value) pairs.
inline double prob(const JointTable& t, const std::vector<Assignment>& event) {
  return t.probability(event);
}

// All bit assignments of `nodes`.
inline std::vector<std::vector<Assignment>> assignments(const NodeSet& nodes) {
  std::vector<std::vector<Assignment>> out;
  for (std::size_t bits = 0; bits < (std::size_t{1} << nodes.size()); ++bits) {
    std::vector<Assignment> a;
    for (std::size_t j = 0; j < nodes.size(); ++j) a.push_back({nodes[j], ((bits >> j) & 1U) != 0});
    out.push_back(a);
  }
  return out;
}

inline std::vector<Assignment> concat(std::vector<Assignment> a, const std::vector<Assignment>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// max over assignments of |P(a,b|c) - P(a|c) P(b|c)|, c ranging over
// positive-mass assignments.
inline double ci_distance(const JointTable& t, const NodeSet& a, const NodeSet& b, const NodeSet& c) {
  double worst = 0.0;
  for (const auto& zc : assignments(c)) {
    const double pc = prob(t, zc);
    if (pc <= 0.0) continue;
    for (const auto& za : assignments(a)) {
      const double pac = prob(t, concat(za, zc)) / pc;
      for (const auto& zb : assignments(b)) {
        const double pbc = prob(t, concat(zb, zc)) / pc;
        const double pabc = prob(t, concat(concat(za, zb), zc)) / pc;
        worst = std::max(worst, std::abs(pabc - pac * pbc));
      }
    }
  }
  return worst;
}

// Sequential back-door formula evaluated on the exact observational joint:
// sum_z P(Y=1 | s, z) prod_l P(z_l | z_<l, s_<l). Zero-weight z terms are
// skipped; any other zero-mass conditioning event gives NaN.
inline double sequential_backdoor(const JointTable& t, const CausalGraph& g, const Action& a,
                                  const AdmissibleSequence& seq) {
  const NodeSet zs = seq.union_nodes();
  const auto& ts = a.targets();
  if (ts.empty()) return prob(t, {{g.reward(), true}});
  double mu = 0.0;
  for (const auto& z : assignments(zs)) {
    auto zval = [&](const NodeSet& block) {
      std::vector<Assignment> out;
      for (const auto& x : z) {
        if (contains(block, x.node)) out.push_back(x);
      }
      return out;
    };
    std::vector<Assignment> cond;
    double w = 1.0;
    for (std::size_t l = 0; l < ts.size() && w > 0.0; ++l) {
      if (l > 0) cond.push_back(ts[l - 1]);
      const auto zl = zval(normalize(seq.blocks[l]));
      const double den = prob(t, cond);
      if (den <= 0.0) return std::nan("");
      w *= prob(t, concat(cond, zl)) / den;
      cond = concat(cond, zl);
    }
    if (w <= 0.0) continue;
    cond.push_back(ts.back());
    const double den = prob(t, cond);
    if (den <= 0.0) return std::nan("");
    mu += w * prob(t, concat(cond, {{g.reward(), true}})) / den;
  }
  return mu;
}

}  // namespace cpe::oracle
