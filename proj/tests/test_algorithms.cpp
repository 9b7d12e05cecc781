#include <gtest/gtest.h>

#include "support.hpp"

using namespace cpe;
using cpe::gen::GraphBuilder;

namespace {

// Environment wrapper that logs the arm of every play.
struct RecordingEnv {
  ModelEnvironment inner;
  std::vector<std::size_t> log;

  Observation play(std::size_t a) {
    log.push_back(a);
    return inner.play(a);
  }
  Observation observe() { return inner.observe(); }
  std::size_t num_actions() const { return inner.num_actions(); }
};
static_assert(Environment<RecordingEnv>);

// X -> Y with Y = X; arms do(X=1) (reward 1) and do(X=0) (reward 0).
Instance deterministic_tabular() {
  GraphBuilder b;
  const NodeId x = b.add("X"), y = b.add("Y", NodeKind::reward);
  b.edge(x, y);
  ScmModel m = ScmModel::tabular(b.build(), {{0.5}, {0.0, 1.0}});
  std::vector<Action> actions{Action::make(m.graph(), {{x, false}}), Action::make(m.graph(), {{x, true}})};
  auto seqs = gen::constructed_sequences(m.graph(), actions);
  return Instance{"det", std::move(m), std::move(actions), std::move(seqs), std::nullopt};
}

// Same reward structure as a BGLM with a global node.
Instance deterministic_bglm() {
  GraphBuilder b;
  const NodeId x0 = b.add("X0"), x = b.add("X1"), y = b.add("Y", NodeKind::reward);
  b.edge(x0, x);
  b.edge(x0, y);
  b.edge(x, y);
  BglmParams p;
  p.theta = {{}, {0.5}, {0.0, 1.0}};
  p.link.assign(3, Link::identity);
  ScmModel m = ScmModel::bglm(b.build(x0), p);
  std::vector<Action> actions{Action::make(m.graph(), {{x, false}}), Action::make(m.graph(), {{x, true}})};
  auto seqs = gen::constructed_sequences(m.graph(), actions);
  return Instance{"det_bglm", std::move(m), std::move(actions), std::move(seqs), std::nullopt};
}

AlgoConfig base(double eps = 0.1) {
  AlgoConfig c;
  c.epsilon = eps;
  c.delta = 0.1;
  return c;
}

}  // namespace

TEST(CcpeBglm, DeterministicTwoArms) {
  const Instance inst = deterministic_bglm();
  AlgoConfig cfg = base();
  cfg.constants = derive_constants(inst.model);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ModelEnvironment env(inst.model, inst.actions, seed);
    const TrialRecord r = ccpe_bglm(env, inst.graph(), inst.actions, inst.links(), cfg);
    EXPECT_EQ(r.chosen, 1u);
    EXPECT_EQ(r.stop_reason, StopReason::confidence);
    EXPECT_LE(r.rounds, 300u);
    EXPECT_EQ(r.rounds, r.pull_total() + r.observations);
    EXPECT_LE(r.final_upper, r.final_lower + cfg.epsilon);
  }
}

TEST(CcpeBglm, RequiresConstantsAndGlobalNode) {
  const Instance inst = deterministic_bglm();
  ModelEnvironment env(inst.model, inst.actions, 0);
  EXPECT_THROW(ccpe_bglm(env, inst.graph(), inst.actions, inst.links(), base()), ConfigError);
  const Instance tab = deterministic_tabular();
  ModelEnvironment env2(tab.model, tab.actions, 0);
  AlgoConfig cfg = base();
  cfg.constants = AssumptionConstants{};
  EXPECT_THROW(ccpe_bglm(env2, tab.graph(), tab.actions, tab.links(), cfg), ConfigError);
}

TEST(CcpeBglm, TheoryModeNeverStopsEarlier) {
  const Instance inst = generate_instance("experiment1", {{"nodes", 4}}, 1);
  AlgoConfig cfg = base(0.5);
  cfg.constants = derive_constants(inst.model);
  cfg.alpha_o = 0.01;
  cfg.alpha_i = 0.2;
  cfg.round_cap = 3000;
  ModelEnvironment e1(inst.model, inst.actions, 4);
  const TrialRecord fast = ccpe_bglm(e1, inst.graph(), inst.actions, inst.links(), cfg);
  cfg.theory_mode = true;
  ModelEnvironment e2(inst.model, inst.actions, 4);
  const TrialRecord slow = ccpe_bglm(e2, inst.graph(), inst.actions, inst.links(), cfg);
  EXPECT_EQ(fast.stop_reason, StopReason::confidence);
  EXPECT_GE(slow.rounds, fast.rounds);
}

TEST(CcpeGeneral, VacuousEpsilon) {
  const Instance inst = generate_instance("experiment2", {{"nodes", 5}}, 7);
  const PreparedInstance prep(inst);
  AlgoConfig cfg = base(0.999);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ModelEnvironment env(inst.model, inst.actions, seed);
    const TrialRecord r = ccpe_general(env, inst.graph(), inst.actions, inst.sequences, cfg);
    EXPECT_LE(prep.mu_star - prep.mu[r.chosen], 1.0);
    EXPECT_EQ(r.stop_reason, StopReason::confidence);
  }
}

TEST(CcpeGeneral, ParallelPac) {
  const Instance inst = generate_instance("parallel", {{"n", 1}, {"weights", {1.0}}}, 0);
  ASSERT_EQ(inst.actions.size(), 3u);
  const PreparedInstance prep(inst);
  AlgoConfig cfg = base(0.0);
  std::size_t correct = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    ModelEnvironment env(inst.model, inst.actions, derive_key(5, seed));
    const TrialRecord r = ccpe_general(env, inst.graph(), inst.actions, inst.sequences, cfg);
    correct += !prep.is_error(r.chosen, 0.0);
  }
  EXPECT_GE(correct, 190u);
}

TEST(CcpeGeneral, WithoutSequencesMatchesLucbPulls) {
  const Instance inst = generate_instance("experiment2", {{"nodes", 5}}, 7);
  std::vector<Action> acts;
  for (const auto& a : inst.actions) {
    if (!a.is_null()) acts.push_back(a);
  }
  const std::vector<std::optional<AdmissibleSequence>> none(acts.size());
  AlgoConfig cfg = base(0.05);
  cfg.alpha_i = 0.3;
  cfg.lucb_initial_pulls = false;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RecordingEnv a{ModelEnvironment(inst.model, acts, seed), {}};
    RecordingEnv b{ModelEnvironment(inst.model, acts, seed), {}};
    const TrialRecord rc = ccpe_general(a, inst.graph(), acts, none, cfg);
    const TrialRecord rl = lucb(b, cfg);
    EXPECT_EQ(a.log, b.log);
    EXPECT_EQ(rc.chosen, rl.chosen);
    EXPECT_EQ(rc.pulls, rl.pulls);
    EXPECT_EQ(rc.observations, rc.iterations);
  }
}

TEST(CcpeGeneral, RejectsInvalidSequence) {
  GraphBuilder b;
  const NodeId x1 = b.add("X1"), x2 = b.add("X2"), y = b.add("Y", NodeKind::reward);
  b.edge(x1, x2);
  b.edge(x2, y);
  const ScmModel m = ScmModel::tabular(b.build(), {{0.5}, {0.2, 0.8}, {0.1, 0.9}});
  const std::vector<Action> actions{Action::make(m.graph(), {{x1, true}})};
  const std::vector<std::optional<AdmissibleSequence>> bad{AdmissibleSequence{{x1}, {{x2}}}};
  ModelEnvironment env(m, actions, 0);
  EXPECT_THROW(ccpe_general(env, m.graph(), actions, bad, base()), SequenceError);
}

TEST(Lucb, DeterministicTwoArms) {
  const Instance inst = deterministic_tabular();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ModelEnvironment env(inst.model, inst.actions, seed);
    const TrialRecord r = lucb(env, base());
    EXPECT_EQ(r.chosen, 1u);
    EXPECT_LE(r.rounds, 200u);
    EXPECT_EQ(r.rounds, r.pull_total());
  }
}

TEST(Lucb, SingleArm) {
  const Instance inst = deterministic_tabular();
  const std::vector<Action> one{inst.actions[1]};
  ModelEnvironment env(inst.model, one, 0);
  const TrialRecord r = lucb(env, base());
  EXPECT_EQ(r.chosen, 0u);
  EXPECT_EQ(r.rounds, 1u);
  ModelEnvironment env2(inst.model, one, 0);
  const TrialRecord l = lil_ucb_heuristic(env2, base());
  EXPECT_EQ(l.chosen, 0u);
  EXPECT_EQ(l.rounds, 0u);
}

TEST(LilUcb, DeterministicTwoArms) {
  const Instance inst = deterministic_tabular();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ModelEnvironment env(inst.model, inst.actions, seed);
    const TrialRecord r = lil_ucb_heuristic(env, base());
    EXPECT_EQ(r.chosen, 1u);
    EXPECT_EQ(r.stop_reason, StopReason::confidence);
    EXPECT_GE(static_cast<double>(r.pulls[1]), 1.0 + 6.0 * static_cast<double>(r.pulls[0]));
  }
}

TEST(SuccessiveReject, ScheduleArithmetic) {
  EXPECT_DOUBLE_EQ(log_bar(2), 1.0);
  const auto nk = csr_schedule(100, 2);
  ASSERT_EQ(nk.size(), 2u);
  EXPECT_DOUBLE_EQ(nk[1], 24.0);
  const Instance inst = deterministic_tabular();
  AlgoConfig cfg = base();
  cfg.budget = 100;
  ModelEnvironment env(inst.model, inst.actions, 3);
  const TrialRecord r = causal_successive_reject(env, inst.graph(), inst.actions, inst.sequences, cfg);
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_EQ(r.chosen, 1u);
  EXPECT_LE(r.rounds, 100u);
  EXPECT_EQ(r.rounds, r.pull_total() + r.observations);
  EXPECT_EQ(r.observations, 50u);
  EXPECT_EQ(r.stop_reason, StopReason::budget);
}

TEST(SuccessiveReject, DeterministicRewardsAlwaysBest) {
  GraphBuilder b;
  const NodeId x1 = b.add("X1"), x2 = b.add("X2"), y = b.add("Y", NodeKind::reward);
  b.edge(x1, y);
  b.edge(x2, y);
  const ScmModel m = ScmModel::tabular(b.build(), {{0.5}, {0.5}, {0.0, 0.0, 0.0, 1.0}});
  const std::vector<Action> actions{Action::make(m.graph(), {{x1, false}}),
                                    Action::make(m.graph(), {{x1, true}, {x2, false}}),
                                    Action::make(m.graph(), {{x1, true}, {x2, true}})};
  const auto seqs = gen::constructed_sequences(m.graph(), actions);
  AlgoConfig cfg = base(0.0);
  cfg.budget = 40;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ModelEnvironment env(m, actions, seed);
    const TrialRecord r = causal_successive_reject(env, m.graph(), actions, seqs, cfg);
    EXPECT_EQ(r.chosen, 2u);
    EXPECT_EQ(r.iterations, 2u);
    EXPECT_LE(r.rounds, 40u);
  }
}

TEST(SuccessiveReject, BudgetErrors) {
  const Instance inst = deterministic_tabular();
  ModelEnvironment env(inst.model, inst.actions, 0);
  EXPECT_THROW(causal_successive_reject(env, inst.graph(), inst.actions, inst.sequences, base()),
               BudgetError);
  AlgoConfig cfg = base();
  cfg.budget = 7;
  EXPECT_THROW(causal_successive_reject(env, inst.graph(), inst.actions, inst.sequences, cfg),
               BudgetError);
}

TEST(Algorithms, AccountingAndDeterminism) {
  const Instance inst = generate_instance("experiment3", {{"n", 4}}, 0);
  PreparedInstance prep(inst);
  for (AlgoKind k : {AlgoKind::ccpe_general, AlgoKind::lucb, AlgoKind::lil_ucb, AlgoKind::causal_sr}) {
    AlgoSpec spec;
    spec.kind = k;
    spec.config = base(0.0);
    spec.config.alpha_o = 0.3;
    spec.config.alpha_i = 0.4;
    const std::optional<std::uint64_t> budget =
        k == AlgoKind::causal_sr ? std::optional<std::uint64_t>(400) : std::nullopt;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const TrialRecord a = run_algorithm(prep, spec, budget, seed);
      const TrialRecord b = run_algorithm(prep, spec, budget, seed);
      EXPECT_EQ(a.rounds, a.pull_total() + a.observations) << to_string(k);
      EXPECT_EQ(a.chosen, b.chosen);
      EXPECT_EQ(a.pulls, b.pulls);
      EXPECT_EQ(a.rounds, b.rounds);
      if (a.stop_reason == StopReason::confidence && k != AlgoKind::lil_ucb) {
        EXPECT_LE(a.final_upper, a.final_lower + spec.config.epsilon);
      }
    }
  }
  const Instance e1 = generate_instance("experiment1", {{"nodes", 4}}, 0);
  PreparedInstance p1(e1);
  p1.constants();
  AlgoSpec spec;
  spec.kind = AlgoKind::ccpe_bglm;
  spec.config = base(0.05);
  spec.config.alpha_o = 0.01;
  spec.config.alpha_i = 0.4;
  const TrialRecord a = run_algorithm(p1, spec, std::nullopt, 9);
  const TrialRecord b = run_algorithm(p1, spec, std::nullopt, 9);
  EXPECT_EQ(a.rounds, a.pull_total() + a.observations);
  EXPECT_EQ(a.pulls, b.pulls);
  EXPECT_EQ(a.chosen, b.chosen);
}

TEST(Algorithms, RoundCapAndCensoring) {
  const Instance inst = generate_instance("experiment2", {{"nodes", 5}}, 7);
  const std::vector<std::optional<AdmissibleSequence>> none(inst.actions.size());
  AlgoConfig cfg = base(0.0);
  cfg.round_cap = 30;
  ModelEnvironment env(inst.model, inst.actions, 1);
  const TrialRecord r = ccpe_general(env, inst.graph(), inst.actions, inst.sequences, cfg);
  EXPECT_EQ(r.stop_reason, StopReason::round_cap);
  EXPECT_LE(r.rounds, 30u);
  ModelEnvironment env2(inst.model, inst.actions, 1);
  const TrialRecord c = lucb(env2, censor_at(base(0.0), 50));
  EXPECT_EQ(c.stop_reason, StopReason::budget);
  EXPECT_LE(c.rounds, 50u);
}

TEST(Algorithms, ConfigValidation) {
  AlgoConfig c = base();
  c.epsilon = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = base();
  c.delta = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = base();
  c.obs_refresh_period = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = base();
  c.alpha_o = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}
