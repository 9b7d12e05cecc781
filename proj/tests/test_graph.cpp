#include <functional>
#include <set>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace cpe;
using cpe::gen::GraphBuilder;

namespace {

CausalGraph chain3() {
  GraphBuilder b;
  const NodeId x1 = b.add("X1"), x2 = b.add("X2"), y = b.add("Y", NodeKind::reward);
  b.edge(x1, x2);
  b.edge(x2, y);
  return b.build();
}

CausalGraph causal_tree_graph() { return generate_instance("causal_tree", {}, 0).graph(); }

Action make_action(const CausalGraph& g, std::vector<std::pair<std::string, bool>> ts) {
  std::vector<Assignment> as;
  for (auto& [n, v] : ts) as.push_back({g.index_of(n), v});
  return Action::make(g, as);
}

NodeSet named(const CausalGraph& g, std::initializer_list<const char*> names) {
  NodeSet s;
  for (const char* n : names) s.push_back(g.index_of(n));
  return normalize(s);
}

}  // namespace

TEST(TopologicalOrder, ChainIsUnique) {
  const CausalGraph g = chain3();
  EXPECT_EQ(validate_and_order(g), (std::vector<NodeId>{0, 1, 2}));
}

TEST(TopologicalOrder, ParallelTieBreaksByIndex) {
  GraphBuilder b;
  const NodeId y = b.add("Y", NodeKind::reward);
  const NodeId x1 = b.add("X1"), x2 = b.add("X2");
  b.edge(x2, y);
  b.edge(x1, y);
  EXPECT_EQ(validate_and_order(b.build()), (std::vector<NodeId>{x1, x2, y}));
}

TEST(TopologicalOrder, TwoCycleRejected) {
  std::vector<Node> nodes{{"X1", NodeKind::observed}, {"X2", NodeKind::observed}, {"Y", NodeKind::reward}};
  EXPECT_THROW(validate_and_order(nodes, {{0, 1}, {1, 0}}), CycleError);
}

TEST(TopologicalOrder, DanglingEdgeRejected) {
  std::vector<Node> nodes{{"X1", NodeKind::observed}, {"Y", NodeKind::reward}};
  EXPECT_THROW(validate_and_order(nodes, {{0, 5}}), DanglingEdgeError);
}

TEST(GraphInvariants, RewardAndGlobalRules) {
  std::vector<Node> two_rewards{{"Y1", NodeKind::reward}, {"Y2", NodeKind::reward}};
  EXPECT_THROW(CausalGraph(two_rewards, {}), GraphError);
  std::vector<Node> nodes{{"X1", NodeKind::observed}, {"Y", NodeKind::reward}};
  EXPECT_THROW(CausalGraph(nodes, {{1, 0}}), GraphError);
  EXPECT_THROW(CausalGraph(nodes, {{0, 1}}, NodeId{1}), GraphError);
  EXPECT_THROW(CausalGraph({}, {}), GraphError);
}

TEST(Surgery, ChainExamples) {
  const CausalGraph g = chain3();
  const CausalGraph out = surgery(g, {}, {1});
  EXPECT_EQ(out.edges(), (std::vector<Edge>{{0, 1}}));
  const CausalGraph in = surgery(g, {1}, {});
  EXPECT_EQ(in.edges(), (std::vector<Edge>{{1, 2}}));
  EXPECT_EQ(surgery(g, {}, {}), g);
  EXPECT_EQ(g.edges().size(), 2u);
  EXPECT_THROW(surgery(g, {9}, {}), UnknownNodeError);
}

TEST(Surgery, NeverAddsEdges) {
  CounterRng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const CausalGraph g = oracle::random_dag(rng, 5, 1, 0.5);
    const NodeSet in{static_cast<NodeId>(rng.below(g.size()))};
    const NodeSet out{static_cast<NodeId>(rng.below(g.size()))};
    const CausalGraph s = surgery(g, in, out);
    EXPECT_EQ(s.size(), g.size());
    for (const auto& e : s.edges()) EXPECT_TRUE(g.has_edge(e.first, e.second));
  }
}

TEST(DSeparation, ChainAndCollider) {
  const CausalGraph g = chain3();
  EXPECT_TRUE(d_separated(g, {0}, {2}, {1}));
  EXPECT_FALSE(d_separated(g, {0}, {2}, {}));

  GraphBuilder b;
  const NodeId a = b.add("A"), bb = b.add("B"), c = b.add("C"), y = b.add("Y", NodeKind::reward);
  b.edge(a, c);
  b.edge(bb, c);
  b.edge(c, y);
  const CausalGraph col = b.build();
  EXPECT_FALSE(d_separated(col, {a}, {bb}, {c}));
  EXPECT_TRUE(d_separated(col, {a}, {bb}, {}));
  EXPECT_FALSE(d_separated(col, {a}, {bb}, {y}));
}

TEST(DSeparation, OverlapAndUnknown) {
  const CausalGraph g = chain3();
  EXPECT_THROW(d_separated(g, {0}, {0}, {}), OverlapError);
  EXPECT_THROW(d_separated(g, {0}, {2}, {0}), OverlapError);
  EXPECT_THROW(d_separated(g, {0}, {7}, {}), UnknownNodeError);
}

TEST(DSeparation, MatchesEnumeratedIndependence) {
  CounterRng rng(2024);
  std::size_t checks = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n_hidden = rep % 3 == 0 ? 1 : 0;
    const ScmModel m = oracle::random_model(oracle::random_dag(rng, 4 - n_hidden, n_hidden, 0.5), rng);
    const CausalGraph& g = m.graph();
    const JointTable t = exact_joint(m);
    NodeSet vis = g.observed_nodes();
    vis.push_back(g.reward());
    for (NodeId a : vis) {
      for (NodeId b : vis) {
        if (b <= a) continue;
        NodeSet rest;
        for (NodeId v : vis) {
          if (v != a && v != b) rest.push_back(v);
        }
        for (std::size_t mask = 0; mask < (std::size_t{1} << rest.size()); ++mask) {
          NodeSet c;
          for (std::size_t j = 0; j < rest.size(); ++j) {
            if ((mask >> j) & 1U) c.push_back(rest[j]);
          }
          const bool sep = d_separated(g, {a}, {b}, c);
          EXPECT_EQ(sep, d_separated(g, {b}, {a}, c));
          EXPECT_EQ(sep, oracle::ci_distance(t, {a}, {b}, c) <= 1e-9);
          ++checks;
        }
      }
    }
  }
  EXPECT_GT(checks, 500u);
}

TEST(PathNodes, ChainExamples) {
  GraphBuilder b;
  const NodeId x1 = b.add("X1"), x2 = b.add("X2"), y = b.add("Y", NodeKind::reward);
  b.edge(x1, x2);
  b.edge(x2, y);
  const CausalGraph g = b.build(x1);
  EXPECT_EQ(path_nodes_to_reward(g, {}), (NodeSet{x1, x2, y}));
  EXPECT_TRUE(path_nodes_to_reward(g, {x2}).empty());
  EXPECT_THROW(path_nodes_to_reward(chain3(), {}), NoGlobalNodeError);
}

TEST(PathNodes, MatchesPathEnumeration) {
  const Instance inst = generate_instance("experiment1", {}, 7);
  const CausalGraph& g = inst.graph();
  const NodeId x0 = *g.global();
  auto enumerate = [&](const NodeSet& excluded) {
    std::set<NodeId> on;
    std::vector<NodeId> path{x0};
    std::function<void(NodeId)> dfs = [&](NodeId v) {
      if (v == g.reward()) {
        on.insert(path.begin(), path.end());
        return;
      }
      for (NodeId c : g.children(v)) {
        if (contains(excluded, c)) continue;
        path.push_back(c);
        dfs(c);
        path.pop_back();
      }
    };
    if (!contains(excluded, x0)) dfs(x0);
    return NodeSet(on.begin(), on.end());
  };
  const std::size_t full = path_nodes_to_reward(g, {}).size();
  for (const auto& a : inst.actions) {
    const NodeSet got = path_nodes_to_reward(g, a.node_set());
    EXPECT_EQ(got, enumerate(a.node_set())) << a.label(g);
    EXPECT_LE(got.size(), full);
  }
}

TEST(Admissible, CausalTreeExample) {
  const CausalGraph g = causal_tree_graph();
  const Action a = make_action(g, {{"X3", true}, {"X4", true}, {"X8", true}});
  AdmissibleSequence s{a.ordered_nodes(), {named(g, {"X1", "X2"}), {}, named(g, {"X7"})}};
  EXPECT_TRUE(verify_admissible_sequence(g, a, s));
}

TEST(Admissible, ParallelEmptyBlock) {
  const Instance inst = generate_instance("parallel", {{"n", 3}}, 0);
  for (const auto& a : inst.actions) {
    if (a.is_null()) continue;
    AdmissibleSequence s{a.ordered_nodes(), {{}}};
    EXPECT_TRUE(verify_admissible_sequence(inst.graph(), a, s));
    EXPECT_EQ(construct_admissible_sequence_no_hidden(inst.graph(), a), s);
  }
}

TEST(Admissible, ChildInBlockViolatesCondition1) {
  GraphBuilder b;
  const NodeId x1 = b.add("X1"), x2 = b.add("X2"), x3 = b.add("X3"), y = b.add("Y", NodeKind::reward);
  b.edge(x1, x2);
  b.edge(x2, x3);
  b.edge(x3, y);
  const CausalGraph g = b.build();
  const Action a = Action::make(g, {{x2, true}});
  const SequenceVerdict v = verify_admissible_sequence(g, a, {{x2}, {{x3}}});
  EXPECT_FALSE(v);
  EXPECT_EQ(v.condition, SequenceCondition::nondescendant);
  EXPECT_EQ(v.index, 1u);
}

TEST(Admissible, ChainConstructions) {
  GraphBuilder b;
  const NodeId x1 = b.add("X1"), x2 = b.add("X2"), x3 = b.add("X3"), y = b.add("Y", NodeKind::reward);
  b.edge(x1, x2);
  b.edge(x2, x3);
  b.edge(x3, y);
  const CausalGraph g = b.build();
  const Action a3 = Action::make(g, {{x3, true}});
  const AdmissibleSequence s3 = construct_admissible_sequence_no_hidden(g, a3);
  EXPECT_EQ(s3.blocks, (std::vector<NodeSet>{{x2}}));
  EXPECT_TRUE(verify_admissible_sequence(g, a3, s3));

  const Action a23 = Action::make(g, {{x3, false}, {x2, true}});
  EXPECT_EQ(a23.ordered_nodes(), (std::vector<NodeId>{x2, x3}));
  const AdmissibleSequence s23 = construct_admissible_sequence_no_hidden(g, a23);
  EXPECT_EQ(s23.blocks, (std::vector<NodeSet>{{x1}, {}}));
  EXPECT_TRUE(verify_admissible_sequence(g, a23, s23));
  EXPECT_EQ(s23.union_size(), 1u);
}

TEST(Admissible, ConstructionRejectsHiddenNodes) {
  const CausalGraph g = causal_tree_graph();
  EXPECT_THROW(construct_admissible_sequence_no_hidden(g, make_action(g, {{"X3", true}})),
               HiddenNodesError);
}

TEST(Admissible, ConstructionIdentifiesOnRandomDags) {
  CounterRng rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.below(5));
    const ScmModel m = oracle::random_model(oracle::random_dag(rng, n, 0, 0.5), rng);
    const CausalGraph& g = m.graph();
    const JointTable t = exact_joint(m);
    std::vector<Assignment> ts;
    for (NodeId v : g.observed_nodes()) {
      if (rng.bernoulli(0.4)) ts.push_back({v, rng.bernoulli(0.5)});
    }
    if (ts.empty()) continue;
    const Action a = Action::make(g, ts);
    const AdmissibleSequence s = construct_admissible_sequence_no_hidden(g, a);
    ASSERT_TRUE(verify_admissible_sequence(g, a, s));
    EXPECT_NEAR(oracle::sequential_backdoor(t, g, a, s), exact_mu(m, a), 1e-9);
  }
}

TEST(GraphJson, RoundTripAndErrors) {
  const CausalGraph g = causal_tree_graph();
  EXPECT_EQ(json_io::graph_from_json(json_io::graph_to_json(g)), g);
  const Instance e1 = generate_instance("experiment1", {}, 3);
  EXPECT_EQ(json_io::graph_from_json(json_io::graph_to_json(e1.graph())), e1.graph());

  const nlohmann::json unknown = {{"nodes", {{{"name", "X"}, {"kind", "observed"}}, {{"name", "Y"}, {"kind", "reward"}}}},
                                  {"edges", {{"X", "Z"}}}};
  EXPECT_THROW(json_io::graph_from_json(unknown), ParseError);
  const nlohmann::json empty = {{"nodes", nlohmann::json::array()}, {"edges", nlohmann::json::array()}};
  EXPECT_THROW(json_io::graph_from_json(empty), ParseError);
  EXPECT_THROW(json_io::instance_from_json({{"graph", empty}, {"model", {{"type", "tabular"}}}, {"actions", nlohmann::json::array()}}),
               ParseError);
}
