#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpe/action.hpp"
#include "cpe/admissible.hpp"
#include "cpe/complexity.hpp"
#include "cpe/errors.hpp"
#include "cpe/graph.hpp"
#include "cpe/scm.hpp"

namespace cpe {

// A bandit problem: the SCM, the action catalog and one optional admissible
// sequence per action.
struct Instance {
  std::string kind;
  ScmModel model;
  std::vector<Action> actions;
  std::vector<std::optional<AdmissibleSequence>> sequences;
  std::optional<XiInstance> xi;

  const CausalGraph& graph() const noexcept { return model.graph(); }
  std::vector<Link> links() const {
    if (model.is_bglm()) return model.bglm_params().link;
    return std::vector<Link>(graph().size(), Link::identity);
  }
};

namespace json_io {

using nlohmann::json;

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where, "missing field '" + key + "'");
  return j.at(key);
}

template <class T>
T get(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where, e.what());
  }
}

inline NodeKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "observed") return NodeKind::observed;
  if (s == "hidden") return NodeKind::hidden;
  if (s == "reward") return NodeKind::reward;
  throw ParseError(where, "unknown node kind '" + s + "'");
}

inline NodeId node_ref(const CausalGraph& g, const json& j, const std::string& where) {
  const auto name = get<std::string>(j, where);
  if (auto v = g.find(name)) return *v;
  throw ParseError(where, "unknown node '" + name + "'");
}

inline json graph_to_json(const CausalGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes()) nodes.push_back({{"name", n.name}, {"kind", to_string(n.kind)}});
  json edges = json::array();
  for (const auto& [p, c] : g.edges()) edges.push_back({g.name(p), g.name(c)});
  json out = {{"nodes", nodes}, {"edges", edges}};
  if (g.global()) out["global"] = g.name(*g.global());
  return out;
}

inline CausalGraph graph_from_json(const json& j, const std::string& where = "graph") {
  std::vector<Node> nodes;
  const json& jn = field(j, "nodes", where);
  if (!jn.is_array()) throw ParseError(where + "/nodes", "expected an array");
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string w = where + "/nodes/" + std::to_string(i);
    Node n;
    n.name = get<std::string>(field(jn[i], "name", w), w + "/name");
    n.kind = parse_kind(get<std::string>(field(jn[i], "kind", w), w + "/kind"), w + "/kind");
    for (const auto& prev : nodes) {
      if (prev.name == n.name) throw ParseError(w, "duplicate node name '" + n.name + "'");
    }
    nodes.push_back(std::move(n));
  }
  auto lookup = [&](const json& r, const std::string& w) -> NodeId {
    const auto name = get<std::string>(r, w);
    for (NodeId v = 0; v < nodes.size(); ++v) {
      if (nodes[v].name == name) return v;
    }
    throw ParseError(w, "unknown node '" + name + "'");
  };
  std::vector<Edge> edges;
  const json& je = field(j, "edges", where);
  if (!je.is_array()) throw ParseError(where + "/edges", "expected an array");
  for (std::size_t i = 0; i < je.size(); ++i) {
    const std::string w = where + "/edges/" + std::to_string(i);
    if (!je[i].is_array() || je[i].size() != 2) throw ParseError(w, "edge must be [parent, child]");
    edges.emplace_back(lookup(je[i][0], w + "/0"), lookup(je[i][1], w + "/1"));
  }
  std::optional<NodeId> global;
  if (j.contains("global") && !j["global"].is_null()) global = lookup(j["global"], where + "/global");
  try {
    return CausalGraph(std::move(nodes), std::move(edges), global);
  } catch (const Error& e) {
    throw ParseError(where, e.what());
  }
}

inline json action_to_json(const CausalGraph& g, const Action& a) {
  json out = json::object();
  for (const auto& t : a.targets()) out[g.name(t.node)] = t.value ? 1 : 0;
  return out;
}

inline Action action_from_json(const CausalGraph& g, const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where, "action must be an object of node: bit");
  std::vector<Assignment> ts;
  for (const auto& [name, val] : j.items()) {
    const std::string w = where + "/" + name;
    const auto v = g.find(name);
    if (!v) throw ParseError(w, "unknown node '" + name + "'");
    const int bitv = get<int>(val, w);
    if (bitv != 0 && bitv != 1) throw ParseError(w, "value must be 0 or 1");
    ts.push_back({*v, bitv == 1});
  }
  return Action::make(g, std::move(ts));
}

inline json sequence_to_json(const CausalGraph& g, const AdmissibleSequence& s) {
  json blocks = json::array();
  for (const auto& b : s.blocks) {
    json jb = json::array();
    for (NodeId v : b) jb.push_back(g.name(v));
    blocks.push_back(jb);
  }
  return blocks;
}

inline AdmissibleSequence sequence_from_json(const CausalGraph& g, const Action& a, const json& j,
                                             const std::string& where) {
  if (!j.is_array()) throw ParseError(where, "sequence must be an array of blocks");
  AdmissibleSequence s;
  s.intervened = a.ordered_nodes();
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "/" + std::to_string(i);
    if (!j[i].is_array()) throw ParseError(w, "block must be an array of node names");
    NodeSet block;
    for (std::size_t k = 0; k < j[i].size(); ++k) {
      block.push_back(node_ref(g, j[i][k], w + "/" + std::to_string(k)));
    }
    s.blocks.push_back(normalize(block));
  }
  return s;
}

inline json model_to_json(const ScmModel& m) {
  const CausalGraph& g = m.graph();
  if (m.is_bglm()) {
    const BglmParams& p = m.bglm_params();
    json theta = json::object(), link = json::object();
    for (NodeId v = 0; v < g.size(); ++v) {
      if (g.global() && *g.global() == v) continue;
      theta[g.name(v)] = p.theta[v];
      link[g.name(v)] = to_string(p.link[v]);
    }
    return {{"type", "bglm"}, {"theta", theta}, {"link", link}, {"noise_width", p.noise_width}};
  }
  json cpt = json::object();
  for (NodeId v = 0; v < g.size(); ++v) cpt[g.name(v)] = m.cpt()[v];
  return {{"type", "tabular"}, {"cpt", cpt}};
}

inline ScmModel model_from_json(CausalGraph g, const json& j, const std::string& where = "model") {
  const auto type = get<std::string>(field(j, "type", where), where + "/type");
  if (type == "tabular") {
    const json& jc = field(j, "cpt", where);
    std::vector<std::vector<double>> cpt(g.size());
    for (NodeId v = 0; v < g.size(); ++v) {
      const std::string w = where + "/cpt/" + g.name(v);
      if (g.global() && *g.global() == v && !jc.contains(g.name(v))) {
        cpt[v] = {1.0};
        continue;
      }
      cpt[v] = get<std::vector<double>>(field(jc, g.name(v), where + "/cpt"), w);
    }
    try {
      return ScmModel::tabular(std::move(g), std::move(cpt));
    } catch (const ModelError& e) {
      throw ParseError(where + "/cpt", e.what());
    }
  }
  if (type == "bglm") {
    BglmParams p;
    p.theta.assign(g.size(), {});
    p.link.assign(g.size(), Link::identity);
    const json& jt = field(j, "theta", where);
    const json* jl = j.contains("link") ? &j["link"] : nullptr;
    for (NodeId v = 0; v < g.size(); ++v) {
      if (g.global() && *g.global() == v) continue;
      p.theta[v] = get<std::vector<double>>(field(jt, g.name(v), where + "/theta"),
                                            where + "/theta/" + g.name(v));
      if (jl && jl->contains(g.name(v))) {
        const std::string w = where + "/link/" + g.name(v);
        try {
          p.link[v] = parse_link(get<std::string>((*jl)[g.name(v)], w));
        } catch (const ParseError&) {
          throw;
        } catch (const Error& e) {
          throw ParseError(w, e.what());
        }
      }
    }
    if (j.contains("noise_width")) p.noise_width = get<double>(j["noise_width"], where + "/noise_width");
    try {
      return ScmModel::bglm(std::move(g), std::move(p));
    } catch (const ModelError& e) {
      throw ParseError(where, e.what());
    }
  }
  throw ParseError(where + "/type", "unknown model type '" + type + "'");
}

inline json instance_to_json(const Instance& inst) {
  const CausalGraph& g = inst.graph();
  json actions = json::array(), seqs = json::array();
  for (std::size_t a = 0; a < inst.actions.size(); ++a) {
    actions.push_back(action_to_json(g, inst.actions[a]));
    seqs.push_back(inst.sequences[a] ? sequence_to_json(g, *inst.sequences[a]) : json(nullptr));
  }
  json out = {{"kind", inst.kind},
              {"graph", graph_to_json(g)},
              {"model", model_to_json(inst.model)},
              {"actions", actions},
              {"sequences", seqs}};
  if (inst.xi) {
    out["xi"] = {{"p_min", inst.xi->p_min},
                 {"p_max", inst.xi->p_max},
                 {"delta_min", inst.xi->delta_min},
                 {"delta_max", inst.xi->delta_max},
                 {"epsilon", inst.xi->epsilon}};
  }
  return out;
}

inline Instance instance_from_json(const json& j) {
  CausalGraph g = [&] {
    try {
      return graph_from_json(field(j, "graph", "instance"), "graph");
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError("graph", e.what());
    }
  }();
  Instance inst{j.contains("kind") ? get<std::string>(j["kind"], "kind") : std::string("custom"),
                model_from_json(std::move(g), field(j, "model", "instance")),
                {},
                {},
                std::nullopt};
  const CausalGraph& graph = inst.graph();
  const json& ja = field(j, "actions", "instance");
  if (!ja.is_array()) throw ParseError("actions", "expected an array");
  for (std::size_t a = 0; a < ja.size(); ++a) {
    const std::string w = "actions/" + std::to_string(a);
    try {
      inst.actions.push_back(action_from_json(graph, ja[a], w));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(w, e.what());
    }
  }
  inst.sequences.assign(inst.actions.size(), std::nullopt);
  if (j.contains("sequences")) {
    const json& js = j["sequences"];
    if (!js.is_array() || js.size() != inst.actions.size()) {
      throw ParseError("sequences", "expected one entry (or null) per action");
    }
    for (std::size_t a = 0; a < js.size(); ++a) {
      if (js[a].is_null()) continue;
      const std::string w = "sequences/" + std::to_string(a);
      AdmissibleSequence s = sequence_from_json(graph, inst.actions[a], js[a], w);
      const SequenceVerdict v = verify_admissible_sequence(graph, inst.actions[a], s);
      if (!v) throw ParseError(w, std::string("invalid sequence: ") + v.detail);
      inst.sequences[a] = std::move(s);
    }
  }
  if (j.contains("xi")) {
    const json& x = j["xi"];
    inst.xi = XiInstance{get<double>(field(x, "p_min", "xi"), "xi/p_min"),
                         get<double>(field(x, "p_max", "xi"), "xi/p_max"),
                         get<double>(field(x, "delta_min", "xi"), "xi/delta_min"),
                         get<double>(field(x, "delta_max", "xi"), "xi/delta_max"),
                         get<double>(field(x, "epsilon", "xi"), "xi/epsilon")};
  }
  return inst;
}

}  // namespace json_io
}  // namespace cpe
