#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cpe/admissible.hpp"
#include "cpe/errors.hpp"
#include "cpe/scm.hpp"

namespace cpe {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Natural log floored at 1: arguments below e never drive a radius imaginary
// or to zero at tiny sample counts.
inline double clamped_log(double x) { return x < std::numbers::e ? 1.0 : std::log(x); }

// ---------------------------------------------------------------------------
// Intervals

struct IntervalEstimate {
  double mean = 0.0;
  double lower = -kInf;
  double upper = kInf;

  static IntervalEstimate around(double mean, double radius) {
    return {mean, mean - radius, mean + radius};
  }
  static IntervalEstimate unbounded(double mean = 0.0) { return {mean, -kInf, kInf}; }

  double width() const { return upper - lower; }
  bool bounded() const { return std::isfinite(lower) && std::isfinite(upper); }

  friend bool operator==(const IntervalEstimate&, const IntervalEstimate&) = default;
};

struct MergeResult {
  IntervalEstimate interval;
  bool empty_intersection = false;
};

// [L, U] = [L_O, U_O] n [L_I, U_I] with the midpoint as the estimate. A
// disjoint pair falls back to the interventional interval and is flagged.
inline MergeResult merge_intervals(const IntervalEstimate& obs, const IntervalEstimate& intv) {
  const double lo = std::max(obs.lower, intv.lower);
  const double hi = std::min(obs.upper, intv.upper);
  if (lo > hi) return {intv, true};
  IntervalEstimate out{0.0, lo, hi};
  if (std::isfinite(lo) && std::isfinite(hi)) {
    out.mean = 0.5 * (lo + hi);
  } else if (!std::isfinite(obs.lower) && !std::isfinite(obs.upper)) {
    out.mean = intv.mean;
  } else {
    out.mean = obs.mean;
  }
  return {out, false};
}

// ---------------------------------------------------------------------------
// Confidence radii

// alpha_I sqrt(log(|A| log(2t) / delta) / t)
inline double beta_interventional(std::uint64_t n_pulls, std::size_t n_actions, double delta,
                                  double alpha_i) {
  if (n_pulls == 0) return kInf;
  const double t = static_cast<double>(n_pulls);
  const double inner = clamped_log(2.0 * t);
  return alpha_i * std::sqrt(clamped_log(static_cast<double>(n_actions) * inner / delta) / t);
}

// alpha_O M1 D^1.5 / (kappa sqrt(eta)) * sqrt(log(3 n t^2 / delta) / (q t)),
// n = number of observed non-reward nodes.
inline double beta_observational_bglm(std::uint64_t t, double q, const AssumptionConstants& k,
                                      std::size_t n_nodes, double delta, double alpha_o) {
  if (t == 0 || !(q > 0.0)) return kInf;
  const double tt = static_cast<double>(t);
  const double d = static_cast<double>(k.d_max);
  const double scale = alpha_o * k.m1 * std::pow(d, 1.5) / (k.kappa * std::sqrt(k.eta));
  const double lg = clamped_log(3.0 * static_cast<double>(n_nodes) * tt * tt / delta);
  return scale * std::sqrt(lg / (q * tt));
}

// alpha_O sqrt(log(20 k |A| Z_a I_a log(2t) / delta) / t), I_a = 2^{Z_a};
// Z_a I_a is replaced by 1 for an empty sequence.
inline double beta_observational_general(std::uint64_t t_a, std::size_t k, std::size_t z_a,
                                         std::size_t n_actions, double delta, double alpha_o) {
  if (t_a == 0) return kInf;
  const double t = static_cast<double>(t_a);
  const double zi = z_a == 0 ? 1.0 : static_cast<double>(z_a) * std::ldexp(1.0, static_cast<int>(z_a));
  const double arg = 20.0 * static_cast<double>(std::max<std::size_t>(k, 1)) *
                     static_cast<double>(n_actions) * zi * clamped_log(2.0 * t) / delta;
  return alpha_o * std::sqrt(clamped_log(arg) / t);
}

// Observational interval for a BGLM action from the fitted model's reward.
// q <= 0 means "no usable observational estimate": radius +inf.
inline IntervalEstimate bglm_obs_interval(double fitted_mean, std::uint64_t t, double q,
                                          const AssumptionConstants& k, std::size_t n_nodes,
                                          double delta, double alpha_o) {
  return IntervalEstimate::around(fitted_mean,
                                  beta_observational_bglm(t, q, k, n_nodes, delta, alpha_o));
}

inline IntervalEstimate bglm_obs_interval(const ScmModel& fitted, const Action& action,
                                          std::uint64_t t, double q,
                                          const AssumptionConstants& k, std::size_t n_nodes,
                                          double delta, double alpha_o) {
  return bglm_obs_interval(exact_mu(fitted, action), t, q, k, n_nodes, delta, alpha_o);
}

inline IntervalEstimate general_obs_interval(double estimate, std::uint64_t t_a, std::size_t k,
                                             std::size_t z_a, std::size_t n_actions,
                                             double delta, double alpha_o) {
  return IntervalEstimate::around(
      estimate, beta_observational_general(t_a, k, z_a, n_actions, delta, alpha_o));
}

// ---------------------------------------------------------------------------
// BGLM maximum likelihood

// Sufficient statistics of one node's regression: per parent configuration,
// how many rows were seen and how many had outcome 1.
struct NodeData {
  std::size_t dim = 0;
  std::vector<std::uint64_t> total;
  std::vector<std::uint64_t> ones;

  std::uint64_t rows() const {
    std::uint64_t s = 0;
    for (auto c : total) s += c;
    return s;
  }
};

// Per-node data for Algorithm-2-style MLE. The gram matrix
// M_t = I + sum_i V_i V_i^T is kept implicitly in the configuration counts.
class MleAccumulator {
 public:
  explicit MleAccumulator(const CausalGraph& graph) : graph_(&graph) {
    data_.resize(graph.size());
    for (NodeId v = 0; v < graph.size(); ++v) {
      if (!has_mechanism(v)) continue;
      const std::size_t d = graph.parents(v).size();
      data_[v].dim = d;
      data_[v].total.assign(std::size_t{1} << d, 0);
      data_[v].ones.assign(std::size_t{1} << d, 0);
    }
  }

  bool has_mechanism(NodeId v) const {
    const auto& g = *graph_;
    if (g.kind(v) == NodeKind::hidden) return false;
    return !(g.global() && *g.global() == v);
  }

  void add(const Observation& obs) {
    const auto& g = *graph_;
    for (NodeId v = 0; v < g.size(); ++v) {
      if (!has_mechanism(v)) continue;
      const NodeSet& pa = g.parents(v);
      std::size_t r = 0;
      for (std::size_t j = 0; j < pa.size(); ++j) {
        r |= static_cast<std::size_t>(obs.value(pa[j])) << j;
      }
      const bool x = v == g.reward() ? obs.y : obs.value(v);
      ++data_[v].total[r];
      if (x) ++data_[v].ones[r];
    }
    ++rows_;
  }

  std::uint64_t rows() const noexcept { return rows_; }
  const NodeData& data(NodeId v) const { return data_.at(v); }
  const CausalGraph& graph() const noexcept { return *graph_; }

  Eigen::MatrixXd gram(NodeId v) const {
    const NodeData& nd = data_.at(v);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(nd.dim, nd.dim);
    for (std::size_t r = 0; r < nd.total.size(); ++r) {
      if (nd.total[r] == 0) continue;
      const Eigen::VectorXd x = config_vector(r, nd.dim);
      m += static_cast<double>(nd.total[r]) * x * x.transpose();
    }
    return m;
  }

  static Eigen::VectorXd config_vector(std::size_t r, std::size_t dim) {
    Eigen::VectorXd x(dim);
    for (std::size_t j = 0; j < dim; ++j) x[static_cast<Eigen::Index>(j)] = (r >> j) & 1U;
    return x;
  }

 private:
  const CausalGraph* graph_;
  std::vector<NodeData> data_;
  std::uint64_t rows_ = 0;
};

struct NewtonOptions {
  double ridge = 1e-8;
  double tolerance = 1e-8;
  int max_iterations = 100;
  int max_halvings = 40;
};

namespace detail {

inline double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Penalized objective whose gradient is the identity-seeded score
// sum_c (ones_c - n_c f(v_c.theta)) v_c - theta.
inline double objective(const NodeData& nd, Link link, const Eigen::VectorXd& theta) {
  double s = -0.5 * theta.squaredNorm();
  for (std::size_t r = 0; r < nd.total.size(); ++r) {
    if (nd.total[r] == 0) continue;
    const double n = static_cast<double>(nd.total[r]);
    const double k = static_cast<double>(nd.ones[r]);
    const double eta = MleAccumulator::config_vector(r, nd.dim).dot(theta);
    if (link == Link::identity) {
      s -= 0.5 * (k * (1.0 - eta) * (1.0 - eta) + (n - k) * eta * eta);
    } else {
      s += k * eta - n * log1pexp(eta);
    }
  }
  return s;
}

}  // namespace detail

// Root of the identity-seeded score equation by damped Newton-Raphson.
inline std::vector<double> fit_node(const NodeData& nd, Link link, const NewtonOptions& opt = {}) {
  const auto dim = static_cast<Eigen::Index>(nd.dim);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  if (dim == 0) return {};
  std::vector<Eigen::VectorXd> cfg(nd.total.size());
  for (std::size_t r = 0; r < nd.total.size(); ++r) cfg[r] = MleAccumulator::config_vector(r, nd.dim);

  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::VectorXd g = -theta;
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(dim, dim) * (1.0 + opt.ridge);
    for (std::size_t r = 0; r < nd.total.size(); ++r) {
      if (nd.total[r] == 0) continue;
      const double n = static_cast<double>(nd.total[r]);
      const double eta = cfg[r].dot(theta);
      g += (static_cast<double>(nd.ones[r]) - n * link_value(link, eta)) * cfg[r];
      h += n * link_derivative(link, eta) * cfg[r] * cfg[r].transpose();
    }
    if (g.lpNorm<Eigen::Infinity>() <= opt.tolerance) {
      return {theta.data(), theta.data() + dim};
    }
    const Eigen::VectorXd step = h.ldlt().solve(g);
    const double base = detail::objective(nd, link, theta);
    double scale = 1.0;
    int halvings = 0;
    while (detail::objective(nd, link, theta + scale * step) < base) {
      if (++halvings > opt.max_halvings) {
        throw NonConvergenceError("line search exhausted in MLE fit");
      }
      scale *= 0.5;
    }
    theta += scale * step;
  }
  throw NonConvergenceError("MLE fit did not converge within the iteration limit");
}

// Fitted weights for every node with a mechanism (empty for the global node).
inline std::vector<std::vector<double>> mle_fit(const MleAccumulator& acc,
                                                const std::vector<Link>& links,
                                                const NewtonOptions& opt = {}) {
  const CausalGraph& g = acc.graph();
  std::vector<std::vector<double>> theta(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    if (!acc.has_mechanism(v)) continue;
    theta[v] = fit_node(acc.data(v), links.at(v), opt);
  }
  return theta;
}

// ---------------------------------------------------------------------------
// Admissible-sequence plug-in estimation

// Counters T_{a,z}, r_{a,z}, n_{a,z,l}, p_{a,z,l} for one action and its
// admissible sequence. Block assignments z are bit masks over union_nodes.
class SequenceCounter {
 public:
  SequenceCounter(const CausalGraph& graph, const Action& action, const AdmissibleSequence& seq)
      : zs_(seq.union_nodes()) {
    if (seq.intervened != action.ordered_nodes() || seq.blocks.size() != action.size()) {
      throw SequenceError("sequence does not match action " + action.label(graph));
    }
    for (const auto& t : action.targets()) targets_.push_back(t);
    const std::size_t space = std::size_t{1} << zs_.size();
    t_.assign(space, 0);
    ysum_.assign(space, 0);
    std::size_t prefix = 0;
    for (const auto& block : seq.blocks) {
      std::size_t cur = prefix;
      for (NodeId z : block) cur |= std::size_t{1} << slot(z);
      before_.push_back(prefix);
      through_.push_back(cur);
      n_.emplace_back(space, 0);
      num_.emplace_back(space, 0);
      prefix = cur;
    }
    if (graph.global()) {
      for (std::size_t j = 0; j < zs_.size(); ++j) {
        if (zs_[j] == *graph.global()) pinned_ |= std::size_t{1} << j;
      }
    }
  }

  void update(const Observation& obs) {
    std::size_t z = 0;
    for (std::size_t j = 0; j < zs_.size(); ++j) z |= static_cast<std::size_t>(obs.value(zs_[j])) << j;
    const std::size_t k = targets_.size();
    for (std::size_t l = 0; l < k; ++l) {
      if (l > 0 && obs.value(targets_[l - 1].node) != targets_[l - 1].value) return;
      ++n_[l][z & before_[l]];
      ++num_[l][z & through_[l]];
    }
    if (k > 0 && obs.value(targets_[k - 1].node) != targets_[k - 1].value) return;
    ++t_[z];
    if (obs.y) ++ysum_[z];
  }

  std::size_t levels() const noexcept { return targets_.size(); }
  std::size_t union_size() const noexcept { return zs_.size(); }
  const NodeSet& union_nodes() const noexcept { return zs_; }

  // Assignments that can carry mass (global node pinned on).
  bool live(std::size_t z) const noexcept { return (z & pinned_) == pinned_; }

  std::uint64_t t(std::size_t z) const { return t_.at(z); }
  double r(std::size_t z) const {
    return t_.at(z) ? static_cast<double>(ysum_[z]) / static_cast<double>(t_[z]) : 0.0;
  }
  std::uint64_t n(std::size_t z, std::size_t l) const { return n_.at(l).at(z & before_[l]); }
  double p(std::size_t z, std::size_t l) const {
    const std::uint64_t den = n(z, l);
    return den ? static_cast<double>(num_[l][z & through_[l]]) / static_cast<double>(den) : 0.0;
  }

  // T_a = min over live z of T_{a,z}.
  std::uint64_t t_min() const {
    std::uint64_t m = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t z = 0; z < t_.size(); ++z) {
      if (live(z)) m = std::min(m, t_[z]);
    }
    return m;
  }

  // sum_z r_{a,z} prod_l p_{a,z,l}; unseen assignments contribute 0.
  double estimate() const {
    double s = 0.0;
    for (std::size_t z = 0; z < t_.size(); ++z) {
      if (!live(z) || t_[z] == 0) continue;
      double w = r(z);
      for (std::size_t l = 0; l < levels() && w > 0.0; ++l) w *= p(z, l);
      s += w;
    }
    return s;
  }

  // sum_z prod_l p_{a,z,l}, the total weight the estimator distributes.
  double weight_mass() const {
    double s = 0.0;
    for (std::size_t z = 0; z < t_.size(); ++z) {
      if (!live(z)) continue;
      double w = 1.0;
      for (std::size_t l = 0; l < levels(); ++l) w *= p(z, l);
      s += w;
    }
    return s;
  }

 private:
  std::size_t slot(NodeId v) const {
    return static_cast<std::size_t>(std::lower_bound(zs_.begin(), zs_.end(), v) - zs_.begin());
  }

  NodeSet zs_;
  std::vector<Assignment> targets_;
  std::size_t pinned_ = 0;
  std::vector<std::uint64_t> t_;
  std::vector<std::uint64_t> ysum_;
  std::vector<std::size_t> before_;   // U_{l-1} mask
  std::vector<std::size_t> through_;  // U_l mask
  std::vector<std::vector<std::uint64_t>> n_;
  std::vector<std::vector<std::uint64_t>> num_;
};

// Counters for a whole action catalog; actions without a sequence have none.
class ObsCounters {
 public:
  ObsCounters(const CausalGraph& graph, const std::vector<Action>& actions,
              const std::vector<std::optional<AdmissibleSequence>>& sequences) {
    if (sequences.size() != actions.size()) {
      throw SequenceError("one (optional) sequence per action is required");
    }
    counters_.reserve(actions.size());
    for (std::size_t a = 0; a < actions.size(); ++a) {
      if (sequences[a]) {
        counters_.emplace_back(SequenceCounter(graph, actions[a], *sequences[a]));
      } else {
        counters_.emplace_back(std::nullopt);
      }
    }
  }

  void update(const Observation& obs) {
    for (auto& c : counters_) {
      if (c) c->update(obs);
    }
    ++observations_;
  }

  bool has_sequence(std::size_t a) const { return counters_.at(a).has_value(); }
  const SequenceCounter& counter(std::size_t a) const {
    if (!counters_.at(a)) throw NoSequenceError("action has no admissible sequence");
    return *counters_[a];
  }
  std::uint64_t t_a(std::size_t a) const { return counters_.at(a) ? counters_[a]->t_min() : 0; }
  std::uint64_t observations() const noexcept { return observations_; }
  std::size_t size() const noexcept { return counters_.size(); }

 private:
  std::vector<std::optional<SequenceCounter>> counters_;
  std::uint64_t observations_ = 0;
};

inline void update_obs_counters(ObsCounters& counters, const Observation& obs) {
  counters.update(obs);
}

inline double plugin_estimate(const ObsCounters& counters, std::size_t action) {
  return counters.counter(action).estimate();
}

}  // namespace cpe
