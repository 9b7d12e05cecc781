#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "cpe/errors.hpp"

namespace cpe {

// Strict comparison that ignores last-bit noise from summed probabilities.
inline bool below_cut(double v, double cut) { return v < cut * (1.0 - 1e-12); }

// Smallest tau in 1..|A| with #{a : q_a < 1/tau} <= tau.
inline std::size_t observation_threshold(const std::vector<double>& q) {
  if (q.empty()) throw EmptyError("observation threshold of an empty action set");
  for (std::size_t tau = 1; tau <= q.size(); ++tau) {
    const double cut = 1.0 / static_cast<double>(tau);
    const auto below = static_cast<std::size_t>(
        std::count_if(q.begin(), q.end(), [&](double v) { return below_cut(v, cut); }));
    if (below <= tau) return tau;
  }
  return q.size();
}

// Per-arm ease-of-observation score and clamped gap max{Delta, eps/2}, plus
// the arm order by q * clamp^2 ascending (ties by index).
struct HardnessProfile {
  std::vector<double> q;
  std::vector<double> clamped;
  std::vector<std::size_t> order;
  double epsilon = 0.0;

  static HardnessProfile make(std::vector<double> q, const std::vector<double>& delta,
                              double epsilon) {
    if (q.empty()) throw EmptyError("hardness profile of an empty action set");
    if (q.size() != delta.size()) throw RangeError("q and gap vectors differ in length");
    HardnessProfile p;
    p.q = std::move(q);
    p.epsilon = epsilon;
    for (double d : delta) p.clamped.push_back(std::max(d, epsilon / 2.0));
    for (double c : p.clamped) {
      if (!(c > 0.0)) throw RangeError("clamped gap must be positive (use epsilon > 0 or a unique optimum)");
    }
    p.order.resize(p.q.size());
    std::iota(p.order.begin(), p.order.end(), std::size_t{0});
    std::stable_sort(p.order.begin(), p.order.end(), [&](std::size_t a, std::size_t b) {
      return p.key(a) < p.key(b);
    });
    return p;
  }

  std::size_t size() const noexcept { return q.size(); }
  double key(std::size_t a) const { return q[a] * clamped[a] * clamped[a]; }
  double inv_sq(std::size_t a) const { return 1.0 / (clamped[a] * clamped[a]); }
};

// H_r = sum over the first r arms of the sorted order of 1/clamp^2.
inline double h_r(const HardnessProfile& p, std::size_t r) {
  if (r < 1 || r > p.size()) throw RangeError("r must lie in 1..|A|");
  double s = 0.0;
  for (std::size_t i = 0; i < r; ++i) s += p.inv_sq(p.order[i]);
  return s;
}

// Smallest tau with #{a : q_a clamp_a^2 < 1/H_tau} <= tau.
inline std::size_t gap_threshold(const HardnessProfile& p) {
  double h = 0.0;
  for (std::size_t tau = 1; tau <= p.size(); ++tau) {
    h += p.inv_sq(p.order[tau - 1]);
    std::size_t below = 0;
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (below_cut(p.key(a), 1.0 / h)) ++below;
    }
    if (below <= tau) return tau;
  }
  return p.size();
}

enum class PredictorKind { bglm, general };

// H_{m_{eps,Delta}} ln(|A| H_{m_{eps,Delta}} / delta). An order-of-growth
// diagnostic with all constants dropped; it ranks instances and does not
// bound rounds. Both algorithms share the shape; `which` only documents
// which q definition the profile was built with.
inline double predict_sample_complexity(const HardnessProfile& p, std::size_t n_actions,
                                        double delta, PredictorKind = PredictorKind::general) {
  const double h = h_r(p, gap_threshold(p));
  return h * std::log(static_cast<double>(n_actions) * h / delta);
}

// Sum of 1/clamp^2 over every arm: the LUCB-style hardness.
inline double naive_hardness(const HardnessProfile& p) { return h_r(p, p.size()); }

// 1/2 + sum_{i=2}^{N} 1/i.
inline double log_bar_n(std::size_t n) {
  double s = 0.5;
  for (std::size_t i = 2; i <= n; ++i) s += 1.0 / static_cast<double>(i);
  return s;
}

struct FixedBudgetConstants {
  std::vector<double> alpha;  // alpha_1..alpha_N
  double h3 = 0.0;
  std::size_t n = 0;

  // 4 I N^2 exp(-(T/2 - N) / (128 log_bar(N) H_3)).
  double error_bound(double budget, double i_factor) const {
    const double nn = static_cast<double>(n);
    return 4.0 * i_factor * nn * nn *
           std::exp(-(budget / 2.0 - nn) / (128.0 * log_bar_n(n) * h3));
  }
};

// alpha_k = (1 + sum_{i=k+1}^{N} 1/i) / m for k > m, and
// 1/k + (sum_{i=m+1}^{N} 1/i) / m for k <= m. H_3 = max_k max{Delta^(k), eps}^-2 / alpha_k
// with Delta^(k) the k-th smallest gap.
inline FixedBudgetConstants fixed_budget_constants(const std::vector<double>& gaps, double epsilon,
                                                   std::size_t m) {
  const std::size_t n = gaps.size();
  if (n == 0) throw EmptyError("no arms");
  if (m < 1 || m > n) throw RangeError("m must lie in 1..N");
  auto tail = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i <= n; ++i) s += 1.0 / static_cast<double>(i);
    return s;
  };
  FixedBudgetConstants out;
  out.n = n;
  const double md = static_cast<double>(m);
  for (std::size_t k = 1; k <= n; ++k) {
    out.alpha.push_back(k > m ? (1.0 + tail(k + 1)) / md
                              : 1.0 / static_cast<double>(k) + tail(m + 1) / md);
  }
  std::vector<double> sorted = gaps;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 1; k <= n; ++k) {
    const double g = std::max(sorted[k - 1], epsilon);
    if (!(g > 0.0)) throw RangeError("gap and epsilon are both zero");
    out.h3 = std::max(out.h3, 1.0 / (out.alpha[k - 1] * g * g));
  }
  return out;
}

// Parameters of a parallel-graph instance used to check class membership.
struct XiInstance {
  double p_min = 0.0;
  double p_max = 0.0;
  double delta_min = 0.0;
  double delta_max = 0.0;
  double epsilon = 0.0;
};

inline void check_xi(const XiInstance& x) {
  if (!(x.p_min + x.delta_min >= 0.1 - 1e-12)) {
    throw InstanceClassError("instance violates p_min + Delta_min >= 0.1");
  }
  if (!(x.p_max + 2.0 * x.delta_max + 2.0 * x.epsilon <= 0.9 + 1e-12)) {
    throw InstanceClassError("instance violates p_max + 2 Delta_max + 2 eps <= 0.9");
  }
}

// (H_{m-1} - 1/min_{i<m} clamp_i^2 - 1/clamp_do^2) ln(1/delta), clamped at 0,
// with m = m_{eps,Delta}. Constants dropped.
inline double lower_bound_value(const HardnessProfile& p, std::size_t do_arm, double delta,
                                const XiInstance& xi) {
  check_xi(xi);
  if (do_arm >= p.size()) throw RangeError("do() arm out of range");
  const std::size_t m = gap_threshold(p);
  if (m <= 1) return 0.0;
  const double h = h_r(p, m - 1);
  double min_clamp = p.clamped[p.order[0]];
  for (std::size_t i = 0; i + 1 < m; ++i) min_clamp = std::min(min_clamp, p.clamped[p.order[i]]);
  const double c_do = p.clamped[do_arm];
  const double v = (h - 1.0 / (min_clamp * min_clamp) - 1.0 / (c_do * c_do)) * std::log(1.0 / delta);
  return std::max(0.0, v);
}

}  // namespace cpe
