#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cpe/admissible.hpp"
#include "cpe/environment.hpp"
#include "cpe/errors.hpp"
#include "cpe/estimation.hpp"
#include "cpe/scm.hpp"

namespace cpe {

inline constexpr double kAlphaOBglmTheory = 6.0 * std::numbers::sqrt2;
inline constexpr double kAlphaOGeneralTheory = 8.0;
inline constexpr double kAlphaITheory = 2.0;

struct AlgoConfig {
  double epsilon = 0.0;
  double delta = 0.1;
  // Unset means the theory value of the algorithm (6 sqrt 2 for BGLM, 8 for
  // general graphs).
  std::optional<double> alpha_o;
  double alpha_i = kAlphaITheory;
  // Adds the minimum-round clause to the BGLM stopping rule.
  bool theory_mode = false;
  std::size_t obs_refresh_period = 50;
  // Fixed-budget T, or the censoring point of a fixed-confidence run.
  std::optional<std::uint64_t> budget;
  std::optional<AssumptionConstants> constants;
  // Passive do() rounds also feed the interventional estimate of do().
  bool count_obs_rounds_for_do = true;
  // LUCB pulls every arm once before its main loop.
  bool lucb_initial_pulls = true;
  std::uint64_t round_cap = 1'000'000;

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in [0,1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (obs_refresh_period < 1) throw ConfigError("refresh period must be >= 1");
    if (alpha_o && !(*alpha_o > 0.0)) throw ConfigError("alpha_o must be positive");
    if (!(alpha_i > 0.0)) throw ConfigError("alpha_i must be positive");
    if (round_cap == 0) throw ConfigError("round cap must be positive");
  }
};

// Fixed-confidence run censored at T plays: it reports its current leader
// if it has not stopped by then.
inline AlgoConfig censor_at(AlgoConfig cfg, std::uint64_t t) {
  cfg.budget = t;
  return cfg;
}

enum class StopReason { confidence, budget, round_cap };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::confidence: return "confidence";
    case StopReason::budget: return "budget";
    case StopReason::round_cap: return "round_cap";
  }
  return "?";
}

inline StopReason parse_stop_reason(const std::string& s) {
  if (s == "confidence") return StopReason::confidence;
  if (s == "budget") return StopReason::budget;
  if (s == "round_cap") return StopReason::round_cap;
  throw ParseError("stop_reason", "unknown value '" + s + "'");
}

struct TrialRecord {
  std::size_t chosen = 0;
  std::uint64_t rounds = 0;
  std::uint64_t observations = 0;
  std::vector<std::uint64_t> pulls;
  StopReason stop_reason = StopReason::confidence;
  std::uint64_t empty_merge_events = 0;
  std::uint64_t iterations = 0;
  // U of the challenger and L of the leader at the last stopping check.
  double final_upper = std::numeric_limits<double>::quiet_NaN();
  double final_lower = std::numeric_limits<double>::quiet_NaN();

  std::uint64_t pull_total() const {
    std::uint64_t s = 0;
    for (auto p : pulls) s += p;
    return s;
  }
};

inline std::optional<std::size_t> find_null_action(const std::vector<Action>& actions) {
  for (std::size_t a = 0; a < actions.size(); ++a) {
    if (actions[a].is_null()) return a;
  }
  return std::nullopt;
}

namespace detail {

// argmax with ties to the lowest index; `skip` excluded.
inline std::size_t argmax(const std::vector<double>& v, std::optional<std::size_t> skip = {}) {
  std::size_t best = v.size();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (skip && *skip == i) continue;
    if (best == v.size() || v[i] > v[best]) best = i;
  }
  return best;
}

// Interventional bookkeeping shared by every algorithm.
struct InterventionBook {
  std::vector<std::uint64_t> pulls;
  std::vector<std::uint64_t> ysum;
  std::optional<std::size_t> null_arm;
  bool count_obs = true;
  std::uint64_t obs_count = 0;
  std::uint64_t obs_ysum = 0;

  InterventionBook(std::size_t n, std::optional<std::size_t> null, bool count)
      : pulls(n, 0), ysum(n, 0), null_arm(null), count_obs(count) {}

  void record(std::size_t a, bool y) {
    ++pulls[a];
    if (y) ++ysum[a];
  }
  void record_observation(bool y) {
    ++obs_count;
    if (y) ++obs_ysum;
  }

  std::uint64_t samples(std::size_t a) const {
    return pulls[a] + (count_obs && null_arm == a ? obs_count : 0);
  }

  IntervalEstimate interval(std::size_t a, std::size_t n_actions, double delta,
                            double alpha_i) const {
    const std::uint64_t n = samples(a);
    if (n == 0) return IntervalEstimate::unbounded(0.0);
    const std::uint64_t s = ysum[a] + (count_obs && null_arm == a ? obs_ysum : 0);
    const double mean = static_cast<double>(s) / static_cast<double>(n);
    return IntervalEstimate::around(mean, beta_interventional(n, n_actions, delta, alpha_i));
  }
};

// LUCB-shaped loop shared by the two fixed-confidence causal algorithms. Each
// iteration: one passive observation, two interventions, merge.
template <Environment Env, class Observer, class ExtraStop>
TrialRecord run_ccpe(Env& env, std::optional<std::size_t> null_arm, const AlgoConfig& cfg,
                     double alpha_o, Observer& observer, ExtraStop&& extra_stop) {
  const std::size_t n = env.num_actions();
  if (n == 0) throw ConfigError("empty action set");
  TrialRecord rec;
  rec.pulls.assign(n, 0);
  if (n == 1) return rec;

  InterventionBook book(n, null_arm, cfg.count_obs_rounds_for_do);
  std::vector<IntervalEstimate> obs(n, IntervalEstimate::unbounded());
  std::vector<double> mu(n, 0.0), lower(n, -kInf), upper(n, kInf);
  const std::uint64_t limit = std::min(cfg.round_cap, cfg.budget.value_or(cfg.round_cap));

  for (std::uint64_t t = 1;; ++t) {
    const std::size_t h = argmax(mu);
    const std::size_t l = argmax(upper, h);
    rec.chosen = h;
    rec.final_upper = upper[l];
    rec.final_lower = lower[h];
    if (upper[l] <= lower[h] + cfg.epsilon && extra_stop(t)) {
      rec.stop_reason = StopReason::confidence;
      break;
    }
    if (rec.rounds + 3 > limit) {
      rec.stop_reason = cfg.budget && *cfg.budget <= cfg.round_cap ? StopReason::budget
                                                                    : StopReason::round_cap;
      break;
    }
    rec.iterations = t;

    // Step 1: passive observation.
    const Observation o = env.observe();
    ++rec.observations;
    book.record_observation(o.y);
    observer.add(o);
    if ((t - 1) % cfg.obs_refresh_period == 0) observer.refresh(t, alpha_o, obs);

    // Step 2: the two candidate interventions.
    book.record(l, env.play(l).y);
    book.record(h, env.play(h).y);
    rec.rounds += 3;

    // Step 3: merge.
    for (std::size_t a = 0; a < n; ++a) {
      const MergeResult m = merge_intervals(obs[a], book.interval(a, n, cfg.delta, cfg.alpha_i));
      if (m.empty_intersection) ++rec.empty_merge_events;
      mu[a] = m.interval.mean;
      lower[a] = m.interval.lower;
      upper[a] = m.interval.upper;
    }
  }
  rec.pulls = book.pulls;
  return rec;
}

class BglmObserver {
 public:
  BglmObserver(const CausalGraph& graph, const std::vector<Action>& actions,
               std::vector<Link> links, const AssumptionConstants& k, double delta)
      : graph_(&graph), actions_(&actions), links_(std::move(links)), acc_(graph), k_(k),
        delta_(delta) {
    n_nodes_ = graph.observed_nodes().size();
    for (const auto& a : actions) q_.push_back(q_bglm(graph, a, k.d_max));
  }

  void add(const Observation& o) { acc_.add(o); }

  void refresh(std::uint64_t t, double alpha_o, std::vector<IntervalEstimate>& obs) {
    BglmParams fitted{mle_fit(acc_, links_), links_, 0.0};
    const ScmModel model = ScmModel::bglm(*graph_, std::move(fitted), false);
    for (std::size_t a = 0; a < actions_->size(); ++a) {
      obs[a] = bglm_obs_interval(model, (*actions_)[a], t, q_[a], k_, n_nodes_, delta_, alpha_o);
    }
  }

  const std::vector<double>& q() const noexcept { return q_; }
  std::size_t n_nodes() const noexcept { return n_nodes_; }

 private:
  const CausalGraph* graph_;
  const std::vector<Action>* actions_;
  std::vector<Link> links_;
  MleAccumulator acc_;
  AssumptionConstants k_;
  double delta_;
  std::size_t n_nodes_ = 0;
  std::vector<double> q_;
};

class GeneralObserver {
 public:
  GeneralObserver(const CausalGraph& graph, const std::vector<Action>& actions,
                  const std::vector<std::optional<AdmissibleSequence>>& sequences, double delta)
      : counters_(graph, actions, sequences), actions_(&actions), delta_(delta) {}

  void add(const Observation& o) { counters_.update(o); }

  void refresh(std::uint64_t, double alpha_o, std::vector<IntervalEstimate>& obs) {
    const std::size_t n = actions_->size();
    for (std::size_t a = 0; a < n; ++a) {
      if ((*actions_)[a].is_null() || !counters_.has_sequence(a)) continue;
      const SequenceCounter& c = counters_.counter(a);
      obs[a] = general_obs_interval(c.estimate(), c.t_min(), c.levels(), c.union_size(), n,
                                    delta_, alpha_o);
    }
  }

  const ObsCounters& counters() const noexcept { return counters_; }

 private:
  ObsCounters counters_;
  const std::vector<Action>* actions_;
  double delta_;
};

inline void check_sequences(const CausalGraph& graph, const std::vector<Action>& actions,
                            const std::vector<std::optional<AdmissibleSequence>>& sequences) {
  if (sequences.size() != actions.size()) {
    throw SequenceError("one (optional) sequence per action is required");
  }
  for (std::size_t a = 0; a < actions.size(); ++a) {
    if (!sequences[a]) continue;
    const SequenceVerdict v = verify_admissible_sequence(graph, actions[a], *sequences[a]);
    if (!v) {
      throw SequenceError("sequence for " + actions[a].label(graph) + " violates " +
                          to_string(v.condition) + " at block " + std::to_string(v.index));
    }
  }
}

}  // namespace detail

// Fixed-confidence best-intervention search on a BGLM: observational
// estimates come from the MLE-fitted model, interventional ones from LUCB.
template <Environment Env>
TrialRecord ccpe_bglm(Env& env, const CausalGraph& graph, const std::vector<Action>& actions,
                      const std::vector<Link>& links, const AlgoConfig& cfg) {
  cfg.validate();
  if (!graph.global() || graph.has_hidden()) {
    throw ConfigError("CCPE-BGLM needs a global node and no hidden nodes");
  }
  if (!cfg.constants) throw ConfigError("CCPE-BGLM needs assumption constants");
  if (links.size() != graph.size()) throw ConfigError("one link per node is required");
  if (env.num_actions() != actions.size()) throw ConfigError("environment/catalog mismatch");
  const AssumptionConstants& k = *cfg.constants;
  k.validate();

  detail::BglmObserver observer(graph, actions, links, k, cfg.delta);
  const double n = static_cast<double>(observer.n_nodes());
  const double d = static_cast<double>(k.d_max);
  auto theory_clause = [&](std::uint64_t t) {
    if (!cfg.theory_mode) return true;
    const double tt = static_cast<double>(t);
    const double first = k.c * d / (k.eta * k.eta) * clamped_log(n * tt * tt / cfg.delta);
    const double second = 1024.0 * k.m2 * k.m2 * (4.0 * d * d - 3.0) * d /
                          (std::pow(k.kappa, 4) * k.eta) *
                          (d * d + clamped_log(3.0 * n * tt * tt / cfg.delta));
    return tt >= std::max(first, second);
  };
  return detail::run_ccpe(env, find_null_action(actions), cfg,
                          cfg.alpha_o.value_or(kAlphaOBglmTheory), observer, theory_clause);
}

// Fixed-confidence search on a general graph (hidden nodes allowed). Actions
// with a sequence get plug-in observational estimates; the rest rely on
// interventions alone.
template <Environment Env>
TrialRecord ccpe_general(Env& env, const CausalGraph& graph, const std::vector<Action>& actions,
                         const std::vector<std::optional<AdmissibleSequence>>& sequences,
                         const AlgoConfig& cfg) {
  cfg.validate();
  if (env.num_actions() != actions.size()) throw ConfigError("environment/catalog mismatch");
  detail::check_sequences(graph, actions, sequences);
  detail::GeneralObserver observer(graph, actions, sequences, cfg.delta);
  return detail::run_ccpe(env, find_null_action(actions), cfg,
                          cfg.alpha_o.value_or(kAlphaOGeneralTheory), observer,
                          [](std::uint64_t) { return true; });
}

// LUCB with the interventional radius; one initial pull of every arm unless
// disabled.
template <Environment Env>
TrialRecord lucb(Env& env, const AlgoConfig& cfg) {
  cfg.validate();
  const std::size_t n = env.num_actions();
  if (n == 0) throw ConfigError("empty action set");
  const std::uint64_t limit = std::min(cfg.round_cap, cfg.budget.value_or(cfg.round_cap));
  const StopReason cut = cfg.budget && *cfg.budget <= cfg.round_cap ? StopReason::budget
                                                                    : StopReason::round_cap;
  detail::InterventionBook book(n, std::nullopt, false);
  TrialRecord rec;
  std::vector<double> mu(n, 0.0), lower(n, -kInf), upper(n, kInf);
  auto refresh = [&](std::size_t a) {
    const IntervalEstimate iv = book.interval(a, n, cfg.delta, cfg.alpha_i);
    mu[a] = iv.mean;
    lower[a] = iv.lower;
    upper[a] = iv.upper;
  };

  if (cfg.lucb_initial_pulls) {
    for (std::size_t a = 0; a < n; ++a) {
      if (rec.rounds + 1 > limit) {
        rec.stop_reason = cut;
        rec.chosen = detail::argmax(mu);
        rec.pulls = book.pulls;
        return rec;
      }
      book.record(a, env.play(a).y);
      ++rec.rounds;
      refresh(a);
    }
  }
  if (n == 1) {
    rec.pulls = book.pulls;
    return rec;
  }
  for (std::uint64_t t = 1;; ++t) {
    const std::size_t h = detail::argmax(mu);
    const std::size_t l = detail::argmax(upper, h);
    rec.chosen = h;
    rec.final_upper = upper[l];
    rec.final_lower = lower[h];
    if (upper[l] <= lower[h] + cfg.epsilon) {
      rec.stop_reason = StopReason::confidence;
      break;
    }
    if (rec.rounds + 2 > limit) {
      rec.stop_reason = cut;
      break;
    }
    rec.iterations = t;
    book.record(l, env.play(l).y);
    book.record(h, env.play(h).y);
    rec.rounds += 2;
    refresh(l);
    refresh(h);
  }
  rec.pulls = book.pulls;
  return rec;
}

// lil'UCB with the heuristic parameterization: beta = 1/2, epsilon = 0,
// lambda = 1 + 10/|A|, delta/5, radius scaled by alpha_i. Stops when one arm
// holds more than lambda times the pulls of all others; when cut short it
// recommends the most pulled arm.
template <Environment Env>
TrialRecord lil_ucb_heuristic(Env& env, const AlgoConfig& cfg) {
  cfg.validate();
  const std::size_t n = env.num_actions();
  if (n == 0) throw ConfigError("empty action set");
  TrialRecord rec;
  rec.pulls.assign(n, 0);
  if (n == 1) return rec;

  const std::uint64_t limit = std::min(cfg.round_cap, cfg.budget.value_or(cfg.round_cap));
  const StopReason cut = cfg.budget && *cfg.budget <= cfg.round_cap ? StopReason::budget
                                                                    : StopReason::round_cap;
  const double lambda = 1.0 + 10.0 / static_cast<double>(n);
  const double beta = 0.5;
  const double sigma2 = 0.25;
  const double dlt = cfg.delta / 5.0;
  std::vector<std::uint64_t> ysum(n, 0);
  auto radius = [&](std::uint64_t pulls) {
    const double t = static_cast<double>(pulls);
    return cfg.alpha_i * (1.0 + beta) *
           std::sqrt(2.0 * sigma2 * clamped_log(clamped_log(t) / dlt) / t);
  };
  auto most_pulled = [&] {
    std::size_t best = 0;
    for (std::size_t a = 1; a < n; ++a) {
      if (rec.pulls[a] > rec.pulls[best]) best = a;
    }
    return best;
  };
  auto pull = [&](std::size_t a) {
    ++rec.pulls[a];
    if (env.play(a).y) ++ysum[a];
    ++rec.rounds;
  };

  for (std::size_t a = 0; a < n; ++a) {
    if (rec.rounds + 1 > limit) {
      rec.stop_reason = cut;
      rec.chosen = most_pulled();
      return rec;
    }
    pull(a);
  }
  for (std::uint64_t t = 1;; ++t) {
    const std::uint64_t total = rec.pull_total();
    for (std::size_t a = 0; a < n; ++a) {
      const double others = static_cast<double>(total - rec.pulls[a]);
      if (static_cast<double>(rec.pulls[a]) >= 1.0 + lambda * others) {
        rec.chosen = a;
        rec.stop_reason = StopReason::confidence;
        return rec;
      }
    }
    if (rec.rounds + 1 > limit) {
      rec.chosen = most_pulled();
      rec.stop_reason = cut;
      return rec;
    }
    rec.iterations = t;
    std::size_t pick = 0;
    double best = -kInf;
    for (std::size_t a = 0; a < n; ++a) {
      const double idx = static_cast<double>(ysum[a]) / static_cast<double>(rec.pulls[a]) +
                         radius(rec.pulls[a]);
      if (idx > best) {
        best = idx;
        pick = a;
      }
    }
    pull(pick);
  }
}

// 1/2 + sum_{i=2}^{N} 1/i, the successive-reject normalizer.
inline double log_bar(std::size_t n) {
  double s = 0.5;
  for (std::size_t i = 2; i <= n; ++i) s += 1.0 / static_cast<double>(i);
  return s;
}

// Phase lengths n_k = (T/2 - N) / (log_bar(N) (N + 1 - k)), k = 1..N-1, with
// n_0 = 0 in front.
inline std::vector<double> csr_schedule(std::uint64_t budget, std::size_t n) {
  std::vector<double> nk{0.0};
  const double base = static_cast<double>(budget) / 2.0 - static_cast<double>(n);
  for (std::size_t k = 1; k + 1 <= n; ++k) {
    nk.push_back(base / (log_bar(n) * static_cast<double>(n + 1 - k)));
  }
  return nk;
}

// Fixed-budget elimination: half the budget observes passively, the rest
// tops up the arms with the fewest combined samples T_a + N_a, and each
// phase drops the arm with the lowest merged estimate.
template <Environment Env>
TrialRecord causal_successive_reject(Env& env, const CausalGraph& graph,
                                     const std::vector<Action>& actions,
                                     const std::vector<std::optional<AdmissibleSequence>>& sequences,
                                     const AlgoConfig& cfg) {
  cfg.validate();
  if (!cfg.budget) throw BudgetError("causal successive reject needs a budget");
  const std::uint64_t budget = *cfg.budget;
  const std::size_t n = actions.size();
  if (n == 0) throw ConfigError("empty action set");
  if (env.num_actions() != n) throw ConfigError("environment/catalog mismatch");
  if (budget < 4 * n) throw BudgetError("budget must be at least 4|A|");
  detail::check_sequences(graph, actions, sequences);

  const double alpha_o = cfg.alpha_o.value_or(kAlphaOGeneralTheory);
  const auto null_arm = find_null_action(actions);
  detail::InterventionBook book(n, null_arm, cfg.count_obs_rounds_for_do);
  ObsCounters counters(graph, actions, sequences);
  TrialRecord rec;

  for (std::uint64_t i = 0; i < budget / 2; ++i) {
    const Observation o = env.observe();
    counters.update(o);
    book.record_observation(o.y);
    ++rec.observations;
    ++rec.rounds;
  }
  std::vector<std::uint64_t> t_a(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    t_a[a] = null_arm == a ? counters.observations() : counters.t_a(a);
  }
  auto merged_mean = [&](std::size_t a) {
    IntervalEstimate obs = IntervalEstimate::unbounded();
    if (!actions[a].is_null() && counters.has_sequence(a)) {
      const SequenceCounter& c = counters.counter(a);
      obs = general_obs_interval(c.estimate(), c.t_min(), c.levels(), c.union_size(), n,
                                 cfg.delta, alpha_o);
    }
    const MergeResult m = merge_intervals(obs, book.interval(a, n, cfg.delta, cfg.alpha_i));
    if (m.empty_intersection) ++rec.empty_merge_events;
    return m.interval.mean;
  };

  std::vector<char> alive(n, 1);
  const std::vector<double> nk = csr_schedule(budget, n);
  for (std::size_t k = 1; k + 1 <= n; ++k) {
    const double span = static_cast<double>(n + 1 - k) * (nk[k] - nk[k - 1]);
    const auto phase = static_cast<std::uint64_t>(std::ceil(span - 1e-9));
    for (std::uint64_t i = 0; i < phase && rec.rounds < budget; ++i) {
      std::size_t pick = n;
      for (std::size_t a = 0; a < n; ++a) {
        if (!alive[a]) continue;
        if (pick == n || t_a[a] + book.pulls[a] < t_a[pick] + book.pulls[pick]) pick = a;
      }
      book.record(pick, env.play(pick).y);
      ++rec.rounds;
    }
    std::size_t worst = n;
    double worst_mu = kInf;
    for (std::size_t a = 0; a < n; ++a) {
      if (!alive[a]) continue;
      const double m = merged_mean(a);
      if (worst == n || m < worst_mu) {
        worst = a;
        worst_mu = m;
      }
    }
    alive[worst] = 0;
    rec.iterations = k;
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (alive[a]) rec.chosen = a;
  }
  rec.stop_reason = StopReason::budget;
  rec.pulls = book.pulls;
  return rec;
}

}  // namespace cpe
