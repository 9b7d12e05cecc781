#include <gtest/gtest.h>

#include "support.hpp"

using namespace cpe;
using cpe::gen::GraphBuilder;

namespace {

// X -> Y with P(X=1) = px and P(Y=1 | X) = (y0, y1).
ScmModel one_parent(double px, double y0, double y1) {
  GraphBuilder b;
  const NodeId x = b.add("X"), y = b.add("Y", NodeKind::reward);
  b.edge(x, y);
  return ScmModel::tabular(b.build(), {{px}, {y0, y1}});
}

double mc_mean(const ScmModel& m, const Action& a, std::size_t n, std::uint64_t key) {
  CounterRng rng(key);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < n; ++i) ones += m.sample(a, rng).y;
  return static_cast<double>(ones) / static_cast<double>(n);
}

std::size_t find_label(const Instance& inst, const std::string& label) {
  for (std::size_t a = 0; a < inst.actions.size(); ++a) {
    if (inst.actions[a].label(inst.graph()) == label) return a;
  }
  ADD_FAILURE() << "no action " << label;
  return 0;
}

}  // namespace

TEST(Sample, DeterministicModelPropagates) {
  GraphBuilder b;
  const NodeId x1 = b.add("X1"), x2 = b.add("X2"), y = b.add("Y", NodeKind::reward);
  b.edge(x1, x2);
  b.edge(x2, y);
  const ScmModel m = ScmModel::tabular(b.build(), {{1.0}, {1.0, 0.0}, {0.0, 1.0}});
  CounterRng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Observation o = m.sample(Action::null(), rng);
    EXPECT_TRUE(o.value(x1));
    EXPECT_FALSE(o.value(x2));
    EXPECT_FALSE(o.y);
  }
  const Observation o = m.sample(Action::make(m.graph(), {{x2, true}}), rng);
  EXPECT_TRUE(o.value(x2));
  EXPECT_TRUE(o.y);
}

TEST(Sample, ForcedNodesAreExact) {
  CounterRng rng(5);
  const ScmModel m = oracle::random_model(oracle::random_dag(rng, 5, 1, 0.5), rng);
  std::vector<Assignment> ts;
  for (NodeId v : m.graph().observed_nodes()) ts.push_back({v, rng.bernoulli(0.5)});
  const Action a = Action::make(m.graph(), ts);
  for (int i = 0; i < 50; ++i) {
    const Observation o = m.sample(a, rng);
    for (const auto& t : a.targets()) EXPECT_EQ(o.value(t.node), t.value);
    for (NodeId h : m.graph().hidden_nodes()) EXPECT_FALSE(o.value(h));
  }
}

TEST(Sample, MeanMatchesExact) {
  CounterRng rng(9);
  const ScmModel m = oracle::random_model(oracle::random_dag(rng, 5, 1, 0.5), rng);
  const Action a = Action::make(m.graph(), {{m.graph().observed_nodes().front(), true}});
  const double mu = exact_mu(m, a);
  const std::size_t n = 100000;
  EXPECT_NEAR(mc_mean(m, a, n, 17), mu, 3.0 * std::sqrt(mu * (1 - mu) / n));
}

TEST(Sample, RejectsBadTargets) {
  const Instance tree = generate_instance("causal_tree", {}, 0);
  const CausalGraph& g = tree.graph();
  EXPECT_THROW(Action::make(g, {{g.index_of("U1"), true}}), ActionDomainError);
  EXPECT_THROW(Action::make(g, {{g.reward(), true}}), ActionDomainError);
  const Instance e1 = generate_instance("experiment1", {}, 7);
  EXPECT_THROW(Action::make(e1.graph(), {{*e1.graph().global(), true}}), ActionDomainError);
}

TEST(ExactMu, SymmetricExample) {
  EXPECT_DOUBLE_EQ(exact_mu(one_parent(0.5, 0.1, 0.9), Action::null()), 0.5);
}

TEST(ExactMu, Experiment2Optimum) {
  const Instance inst = generate_instance("experiment2", {}, 7);
  const std::size_t a = find_label(inst, "do(X3=1,X4=1)");
  EXPECT_NEAR(exact_mu(inst.model, inst.actions[a]), 0.9, 1e-12);
  const GapReport gr = gaps(inst.model, inst.actions, 0.0);
  EXPECT_EQ(gr.best, a);
  double second = 0.0;
  for (std::size_t i = 0; i < gr.mu.size(); ++i) {
    if (i != a) second = std::max(second, gr.mu[i]);
  }
  EXPECT_NEAR(gr.delta[a], 0.9 - second, 1e-12);
}

TEST(ExactMu, Experiment1MatchesMonteCarlo) {
  const Instance inst = generate_instance("experiment1", {}, 7);
  const NodeSet ypa = [&] {
    NodeSet s;
    for (NodeId p : inst.graph().parents(inst.graph().reward())) {
      if (p != *inst.graph().global()) s.push_back(p);
    }
    return s;
  }();
  const Action a = Action::uniform(inst.graph(), NodeSet(ypa.begin(), ypa.begin() + 3), true);
  const double mu = exact_mu(inst.model, a);
  const std::size_t n = 1000000;
  EXPECT_NEAR(mc_mean(inst.model, a, n, 23), mu, 3.0 * std::sqrt(mu * (1 - mu) / n));
}

TEST(ExactMu, TooLarge) {
  GraphBuilder b;
  for (int i = 0; i < 21; ++i) b.add("X" + std::to_string(i));
  b.add("Y", NodeKind::reward);
  std::vector<std::vector<double>> cpt(22, {0.5});
  const ScmModel m = ScmModel::tabular(b.build(), cpt);
  EXPECT_THROW(exact_mu(m, Action::null()), TooLargeError);
  EXPECT_THROW(exact_joint(m), TooLargeError);
}

TEST(ExactJoint, DeterministicAndFairBits) {
  GraphBuilder b;
  const NodeId x1 = b.add("X1"), x2 = b.add("X2");
  b.add("Y", NodeKind::reward);
  const CausalGraph g = b.build();
  const JointTable det = exact_joint(ScmModel::tabular(g, {{1.0}, {0.0}, {1.0}}));
  std::size_t atoms = 0;
  for (double p : det.prob) atoms += p > 0.0;
  EXPECT_EQ(atoms, 1u);
  EXPECT_DOUBLE_EQ(det.probability({{x1, true}, {x2, false}, {g.reward(), true}}), 1.0);

  const JointTable fair = exact_joint(ScmModel::tabular(g, {{0.5}, {0.5}, {0.0}}));
  for (bool u : {false, true}) {
    for (bool v : {false, true}) EXPECT_DOUBLE_EQ(fair.probability({{x1, u}, {x2, v}}), 0.25);
  }
}

TEST(ExactJoint, MatchesSampling) {
  CounterRng rng(31);
  const ScmModel m = oracle::random_model(oracle::random_dag(rng, 3, 0, 0.6), rng);
  const JointTable t = exact_joint(m);
  double total = 0.0;
  for (double p : t.prob) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
  std::vector<double> freq(t.prob.size(), 0.0);
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) {
    const Observation o = m.sample(Action::null(), rng);
    std::size_t idx = 0;
    for (std::size_t j = 0; j + 1 < t.nodes.size(); ++j) idx |= std::size_t{o.value(t.nodes[j])} << j;
    if (o.y) idx |= std::size_t{1} << (t.nodes.size() - 1);
    freq[idx] += 1.0 / static_cast<double>(n);
  }
  for (std::size_t i = 0; i < freq.size(); ++i) EXPECT_NEAR(freq[i], t.prob[i], 0.005);
}

TEST(ExactJoint, NullRewardEqualsJointMean) {
  CounterRng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const ScmModel m = oracle::random_model(oracle::random_dag(rng, 4, 1, 0.5), rng);
    const JointTable t = exact_joint(m);
    EXPECT_NEAR(exact_mu(m, Action::null()), t.probability({{m.graph().reward(), true}}), 1e-12);
  }
}

TEST(ExactJoint, ParallelDoEqualsConditional) {
  const Instance inst = generate_instance("parallel", {{"n", 3}, {"p", {0.3, 0.6, 0.8}}}, 0);
  const JointTable t = exact_joint(inst.model);
  const NodeId y = inst.graph().reward();
  for (const auto& a : inst.actions) {
    if (a.is_null()) continue;
    const Assignment s = a.targets().front();
    const double cond = t.probability({s, {y, true}}) / t.probability({s});
    EXPECT_NEAR(exact_mu(inst.model, a), cond, 1e-12);
  }
}

TEST(Gaps, Examples) {
  const GapReport two = gaps_from_means({0.9, 0.3}, 0.0);
  EXPECT_NEAR(two.delta[0], 0.6, 1e-12);
  EXPECT_NEAR(two.delta[1], 0.6, 1e-12);
  const GapReport three = gaps_from_means({0.9, 0.8, 0.3}, 0.4);
  EXPECT_NEAR(three.delta[0], 0.1, 1e-12);
  EXPECT_NEAR(three.delta[1], 0.1, 1e-12);
  EXPECT_NEAR(three.delta[2], 0.6, 1e-12);
  EXPECT_NEAR(three.clamped[0], 0.2, 1e-12);
  EXPECT_NEAR(three.clamped[2], 0.6, 1e-12);
  EXPECT_EQ(gaps_from_means({0.5, 0.7, 0.7}, 0.0).best, 1u);
  EXPECT_THROW(gaps_from_means({}, 0.0), EmptyError);
}

TEST(QGeneral, ParallelAndNull) {
  const Instance inst = generate_instance("parallel", {{"n", 3}, {"p", 0.5}}, 0);
  for (std::size_t a = 0; a < inst.actions.size(); ++a) {
    const double q = q_general(inst.model, inst.actions[a], inst.sequences[a]);
    EXPECT_DOUBLE_EQ(q, inst.actions[a].is_null() ? 1.0 : 0.5);
  }
  EXPECT_DOUBLE_EQ(q_general(inst.model, inst.actions[1], std::nullopt), 0.0);
}

TEST(QGeneral, ChainHandEnumeration) {
  GraphBuilder b;
  const NodeId x1 = b.add("X1"), x2 = b.add("X2"), y = b.add("Y", NodeKind::reward);
  b.edge(x1, x2);
  b.edge(x1, y);
  b.edge(x2, y);
  const ScmModel m = ScmModel::tabular(b.build(), {{0.3}, {0.2, 0.6}, {0.1, 0.4, 0.5, 0.9}});
  const Action a = Action::make(m.graph(), {{x2, true}});
  const AdmissibleSequence s = construct_admissible_sequence_no_hidden(m.graph(), a);
  ASSERT_EQ(s.blocks, (std::vector<NodeSet>{{x1}}));
  // P(X2=1, X1=0) = 0.7 * 0.2, P(X2=1, X1=1) = 0.3 * 0.6.
  EXPECT_NEAR(q_general(m, a, s), std::min(0.7 * 0.2, 0.3 * 0.6), 1e-12);
  EXPECT_LE(q_general(m, a, s), exact_joint(m).probability({{x2, true}}));
  (void)y;
}

TEST(QBglm, ClosedForm) {
  GraphBuilder b;
  const NodeId x0 = b.add("X0"), x1 = b.add("X1"), y = b.add("Y", NodeKind::reward);
  b.edge(x0, y);
  b.edge(x0, x1);
  b.edge(x1, y);
  const CausalGraph g = b.build(x0);
  const Action a = Action::make(g, {{x1, true}});
  EXPECT_EQ(path_nodes_to_reward(g, a.node_set()).size(), 2u);
  EXPECT_DOUBLE_EQ(q_bglm(g, a, 3), 1.0 / 108.0);
  EXPECT_DOUBLE_EQ(q_bglm(g, a, 1), 1.0 / 4.0);
  EXPECT_DOUBLE_EQ(q_bglm(g, Action::null(), 3), 1.0);
}

TEST(QBglm, CutActionIsOne) {
  GraphBuilder b;
  const NodeId x0 = b.add("X0"), x1 = b.add("X1"), y = b.add("Y", NodeKind::reward);
  b.edge(x0, x1);
  b.edge(x1, y);
  const CausalGraph g = b.build(x0);
  EXPECT_DOUBLE_EQ(q_bglm(g, Action::make(g, {{x1, true}}), 2), 1.0);
}

TEST(QBglm, Experiment1MatchesPathCount) {
  const Instance inst = generate_instance("experiment1", {}, 7);
  const CausalGraph& g = inst.graph();
  const std::size_t d = g.max_in_degree();
  EXPECT_EQ(d, 5u);
  for (const auto& a : inst.actions) {
    const double ell = static_cast<double>(path_nodes_to_reward(g, a.node_set()).size());
    ASSERT_GT(ell, 0.0);
    EXPECT_DOUBLE_EQ(q_bglm(g, a, d), 1.0 / (ell * ell * 125.0));
  }
}

TEST(Bglm, RejectsOutOfRangeWeights) {
  GraphBuilder b;
  const NodeId x0 = b.add("X0"), x1 = b.add("X1"), y = b.add("Y", NodeKind::reward);
  b.edge(x0, x1);
  b.edge(x1, y);
  const CausalGraph g = b.build(x0);
  BglmParams p;
  p.theta = {{}, {0.5}, {1.2}};
  p.link = {Link::identity, Link::identity, Link::identity};
  EXPECT_THROW(ScmModel::bglm(g, p), ModelError);
  p.theta[2] = {0.9};
  const ScmModel m = ScmModel::bglm(g, p);
  EXPECT_NEAR(exact_mu(m, Action::null()), 0.45, 1e-12);
  const AssumptionConstants k = derive_constants(m);
  EXPECT_EQ(k.m1, 1.0);
  EXPECT_EQ(k.m2, 0.0);
  EXPECT_EQ(k.kappa, 1.0);
}

// |sigma(theta,a) - sigma(theta',a)| <= E[sum_{X in N_{S,Y}} |V_X.(theta_X - theta'_X)|] M1.
TEST(Bglm, PathSensitivityBound) {
  const Instance inst = generate_instance("experiment1", {{"nodes", 4}}, 3);
  const CausalGraph& g = inst.graph();
  const BglmParams& p = inst.model.bglm_params();
  BglmParams q = p;
  CounterRng rng(8);
  for (NodeId v = 0; v < g.size(); ++v) {
    for (double& w : q.theta[v]) w = std::max(0.0, w - 0.02 * rng.uniform());
  }
  const ScmModel other = ScmModel::bglm(g, q);
  for (const auto& a : inst.actions) {
    const NodeSet on = path_nodes_to_reward(g, a.node_set());
    const std::size_t n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Observation o = inst.model.sample(a, rng);
      double s = 0.0;
      for (NodeId v : on) {
        if (v == *g.global()) continue;
        const NodeSet& pa = g.parents(v);
        double d = 0.0;
        for (std::size_t j = 0; j < pa.size(); ++j) {
          const bool val = pa[j] == *g.global() ? true : o.value(pa[j]);
          if (val) d += p.theta[v][j] - q.theta[v][j];
        }
        s += std::abs(d);
      }
      sum += s;
      sumsq += s * s;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(0.0, sumsq / n - mean * mean) / n);
    EXPECT_LE(std::abs(exact_mu(inst.model, a) - exact_mu(other, a)), mean + 3.0 * sd) << a.label(g);
  }
}
