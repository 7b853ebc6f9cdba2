#pragma once
// Deterministic synthetic benchmark graphs with planted mechanisms.
//
// Shape mirrors a drug/protein/process graph: five relations
// (upregulates, downregulates, interacts, participates, induces). Every
// planted (drug, process) pair is connected by a witness chain
//   drug -up-> u_b -interacts-> w_b -interacts-> v_b -participates-> b
// shared per answer process, so held-out sources can still be resolved
// through trained chain entities. Background edges attach preferentially
// by (degree + 1)^hub_skew, which makes hub-driven shortcuts inducible.
// Background edges may leave chain proteins (so every chain step has
// competing continuations) but never point INTO them and never add
// participates edges out of them; the witness semantics of a chain hop
// stay unambiguous while walks along it face real branching.
// answer_hubs > 0 concentrates the planted answers on that many processes
// with a popularity gradient.
//
// Decoy rules use downregulates bodies. Background downregulates edges
// end in sink proteins with no outgoing edges, and no inverse edges exist
// at generation time, so a successful walk can never contain a
// downregulates step: the decoys are unsatisfiable on positives by
// construction, not merely unlikely.

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "rulewalk/kg.hpp"
#include "rulewalk/rules.hpp"

namespace rulewalk {

struct SynthConfig {
  int num_drugs = 50;
  int num_proteins = 300;
  int num_processes = 20;
  int planted_pairs = 60;
  int bg_drug_protein = 240;  // upregulates/downregulates noise, split evenly
  int bg_participates = 120;
  double ppi_fraction = 0.5;  // interacts share of all edges
  double hub_skew = 1.3;
  int answer_hubs = 0;         // 0 = spread answers over all processes
  int chain_noise_edges = 0;   // extra interacts out-edges per chain middle protein
  std::uint64_t seed = 1;

  void validate() const {
    if (num_drugs < 1 || num_proteins < 2 || num_processes < 1)
      throw ConfigError("synth: node counts must be positive");
    if (planted_pairs < 1) throw ConfigError("synth: planted_pairs must be >= 1");
    if (ppi_fraction <= 0.0 || ppi_fraction >= 1.0)
      throw ConfigError("synth: ppi_fraction must be in (0,1)");
    if (hub_skew < 0.0) throw ConfigError("synth: hub_skew must be >= 0");
    if (answer_hubs < 0 || answer_hubs > num_processes)
      throw ConfigError("synth: answer_hubs must be in [0, num_processes]");
  }
};

struct WitnessPath {
  NodeId drug = -1;
  NodeId process = -1;
  std::vector<Triple> edges;
  int rule_id = -1;
};

struct PlantedTruth {
  std::vector<WitnessPath> pairs;
  std::vector<int> planted_rule_ids;
  std::vector<int> decoy_rule_ids;
};

struct SyntheticBenchmark {
  KnowledgeGraph kg;
  RuleSet rules;
  PlantedTruth truth;
  SplitSet splits;
};

namespace synth_detail {

inline Metapath make_body(const Schema& schema, const std::vector<std::string>& rels) {
  Metapath mp;
  for (const auto& label : rels) {
    RelId r = schema.relation_or_throw(label);
    mp.steps.push_back({r, schema.relation(r).src_type, schema.relation(r).dst_type});
  }
  return mp;
}

}  // namespace synth_detail

inline SyntheticBenchmark generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();

  Schema schema;
  const TypeId t_drug = schema.add_node_type("Drug");
  const TypeId t_protein = schema.add_node_type("Protein");
  const TypeId t_process = schema.add_node_type("BiologicalProcess");
  const RelId r_up = schema.add_relation({"upregulates", t_drug, t_protein});
  const RelId r_down = schema.add_relation({"downregulates", t_drug, t_protein});
  const RelId r_int = schema.add_relation({"interacts", t_protein, t_protein});
  const RelId r_part = schema.add_relation({"participates", t_protein, t_process});
  const RelId r_ind = schema.add_relation({"induces", t_drug, t_process});

  std::vector<std::string> labels;
  std::vector<TypeId> types;
  auto add_nodes = [&](int count, const std::string& prefix, TypeId type) {
    for (int i = 0; i < count; ++i) {
      labels.push_back(prefix + std::to_string(i));
      types.push_back(type);
    }
  };
  add_nodes(cfg.num_drugs, "D", t_drug);
  add_nodes(cfg.num_proteins, "P", t_protein);
  add_nodes(cfg.num_processes, "B", t_process);
  const NodeId protein0 = cfg.num_drugs;
  const NodeId process0 = cfg.num_drugs + cfg.num_proteins;
  const std::size_t num_nodes = labels.size();

  std::vector<Triple> triples;
  std::vector<std::int64_t> degree(num_nodes, 0);
  std::unordered_set<std::uint64_t> seen;
  auto key = [&](NodeId h, RelId r, NodeId t) {
    return (static_cast<std::uint64_t>(h) * 8 + static_cast<std::uint64_t>(r)) * num_nodes + t;
  };
  auto try_add = [&](NodeId h, RelId r, NodeId t) {
    if (h == t) return false;
    if (!seen.insert(key(h, r, t)).second) return false;
    triples.push_back({h, r, t});
    ++degree[h];
    ++degree[t];
    return true;
  };

  RngStream rng = RngStream::derive(cfg.seed, 0x53594e54ULL /*"SYNT"*/);

  // --- planted pairs ------------------------------------------------------
  const int n_answer = cfg.answer_hubs > 0 ? cfg.answer_hubs : cfg.num_processes;
  std::vector<double> answer_weight(n_answer, 1.0);
  if (cfg.answer_hubs > 0)
    for (int i = 0; i < n_answer; ++i) answer_weight[i] = 1.0 / static_cast<double>(i + 1);

  if (static_cast<std::int64_t>(cfg.planted_pairs) >
      static_cast<std::int64_t>(cfg.num_drugs) * n_answer)
    throw ConfigError("synth: planted_pairs exceeds available (drug, process) combinations");

  std::vector<std::pair<NodeId, NodeId>> pairs;  // (drug, process)
  {
    std::unordered_set<std::uint64_t> pair_seen;
    std::uint64_t guard = 0;
    while (pairs.size() < static_cast<std::size_t>(cfg.planted_pairs)) {
      if (++guard > 1000ULL * static_cast<std::uint64_t>(cfg.planted_pairs))
        throw ConfigError("synth: could not place planted pairs (config too tight)");
      NodeId d = static_cast<NodeId>(rng.next_below(cfg.num_drugs));
      NodeId b = process0 + static_cast<NodeId>(rng.next_weighted(answer_weight));
      const std::uint64_t pk = (static_cast<std::uint64_t>(d) << 32) | static_cast<std::uint32_t>(b);
      if (pair_seen.insert(pk).second) pairs.push_back({d, b});
    }
    std::sort(pairs.begin(), pairs.end());
  }

  // --- witness chains, shared per answer process --------------------------
  std::vector<NodeId> distinct_answers;
  for (const auto& [d, b] : pairs)
    if (std::find(distinct_answers.begin(), distinct_answers.end(), b) ==
        distinct_answers.end())
      distinct_answers.push_back(b);
  std::sort(distinct_answers.begin(), distinct_answers.end());
  if (3 * distinct_answers.size() > static_cast<std::size_t>(cfg.num_proteins))
    throw ConfigError("synth: planted chains exceed protein count");

  struct Chain {
    NodeId u, w, v;
  };
  std::unordered_map<NodeId, Chain> chain;  // process -> chain proteins
  for (std::size_t i = 0; i < distinct_answers.size(); ++i) {
    Chain c{protein0 + static_cast<NodeId>(3 * i), protein0 + static_cast<NodeId>(3 * i + 1),
            protein0 + static_cast<NodeId>(3 * i + 2)};
    chain[distinct_answers[i]] = c;
    try_add(c.u, r_int, c.w);
    try_add(c.w, r_int, c.v);
    try_add(c.v, r_part, distinct_answers[i]);
  }

  PlantedTruth truth;
  for (const auto& [d, b] : pairs) {
    const Chain& c = chain[b];
    try_add(d, r_up, c.u);
    try_add(d, r_ind, b);
    WitnessPath w;
    w.drug = d;
    w.process = b;
    w.edges = {{d, r_up, c.u}, {c.u, r_int, c.w}, {c.w, r_int, c.v}, {c.v, r_part, b}};
    w.rule_id = 0;
    truth.pairs.push_back(std::move(w));
  }

  // --- background noise ---------------------------------------------------
  std::vector<bool> is_chain(num_nodes, false);
  for (const auto& [b, c] : chain) {
    is_chain[c.u] = true;
    is_chain[c.w] = true;
    is_chain[c.v] = true;
  }
  // sinks: trailing slice of the protein range, receiving only
  // downregulates edges and emitting nothing
  const int n_sinks = std::min(cfg.num_proteins / 6,
                               cfg.num_proteins - 3 * static_cast<int>(distinct_answers.size()));
  std::vector<NodeId> sink_proteins;
  for (int i = cfg.num_proteins - n_sinks; i < cfg.num_proteins; ++i) {
    if (is_chain[protein0 + i])
      throw ConfigError("synth: protein pool too small for sinks");
    sink_proteins.push_back(protein0 + i);
  }
  std::vector<NodeId> open_proteins;  // backgrounds may end here
  for (int i = 0; i < cfg.num_proteins - n_sinks; ++i)
    if (!is_chain[protein0 + i]) open_proteins.push_back(protein0 + i);
  if (open_proteins.empty()) throw ConfigError("synth: no non-chain proteins left for noise");

  auto skewed_pick = [&](const std::vector<NodeId>& pool) {
    std::vector<double> w(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      w[i] = std::pow(static_cast<double>(degree[pool[i]] + 1), cfg.hub_skew);
    return pool[rng.next_weighted(w)];
  };
  std::vector<NodeId> emitting_proteins, all_processes;  // sinks emit nothing
  for (int i = 0; i < cfg.num_proteins - n_sinks; ++i)
    emitting_proteins.push_back(protein0 + i);
  for (int i = 0; i < cfg.num_processes; ++i) all_processes.push_back(process0 + i);

  auto add_background = [&](int target, auto&& make_edge) {
    int added = 0;
    std::uint64_t guard = 0;
    while (added < target) {
      if (++guard > 200ULL * static_cast<std::uint64_t>(target) + 1000)
        throw ConfigError("synth: background edge target infeasible");
      auto [h, r, t] = make_edge();
      if (try_add(h, r, t)) ++added;
    }
  };

  add_background(cfg.bg_drug_protein, [&]() {
    const NodeId d = static_cast<NodeId>(rng.next_below(cfg.num_drugs));
    if (rng.next_below(2) == 0) return Triple{d, r_up, skewed_pick(open_proteins)};
    return Triple{d, r_down, sink_proteins.empty() ? skewed_pick(open_proteins)
                                                   : skewed_pick(sink_proteins)};
  });
  // optional inspection-bias load: bury each chain's middle hop among
  // noise continuations so mechanisms route through dense hubs
  if (cfg.chain_noise_edges > 0) {
    for (const auto& answer : distinct_answers) {
      const NodeId w = chain[answer].w;
      add_background(cfg.chain_noise_edges,
                     [&]() { return Triple{w, r_int, skewed_pick(open_proteins)}; });
    }
  }
  add_background(cfg.bg_participates, [&]() {
    return Triple{skewed_pick(open_proteins), r_part, skewed_pick(all_processes)};
  });

  // interacts so that its share of all edges hits ppi_fraction; sources may
  // be chain proteins (competing continuations) but targets never are
  {
    std::int64_t non_int = 0, have_int = 0;
    for (const auto& t : triples) (t.rel == r_int ? have_int : non_int) += 1;
    const std::int64_t want_int = static_cast<std::int64_t>(
        cfg.ppi_fraction / (1.0 - cfg.ppi_fraction) * static_cast<double>(non_int) + 0.5);
    add_background(static_cast<int>(std::max<std::int64_t>(0, want_int - have_int)), [&]() {
      return Triple{skewed_pick(emitting_proteins), r_int, skewed_pick(open_proteins)};
    });
  }

  // --- rules: one planted body plus two decoys ----------------------------
  std::vector<MetapathRule> rule_vec;
  auto push_rule = [&](const std::vector<std::string>& body) {
    MetapathRule rule;
    rule.id = static_cast<int>(rule_vec.size());
    rule.head_rel = r_ind;
    rule.body = synth_detail::make_body(schema, body);
    rule_vec.push_back(std::move(rule));
    return rule_vec.back().id;
  };
  truth.planted_rule_ids.push_back(
      push_rule({"upregulates", "interacts", "interacts", "participates"}));
  truth.decoy_rule_ids.push_back(
      push_rule({"downregulates", "interacts", "interacts", "participates"}));
  truth.decoy_rule_ids.push_back(push_rule({"downregulates", "participates"}));
  RuleSet rules(schema, std::move(rule_vec));

  KnowledgeGraph kg(std::move(schema), std::move(labels), std::move(types), std::move(triples));

  // every witness must satisfy its planted rule, and no decoy may match
  for (const auto& w : truth.pairs) {
    Metapath path;
    for (const auto& e : w.edges)
      path.steps.push_back({e.rel, kg.node_type(e.head), kg.node_type(e.tail)});
    auto matched = match_path(path, rules);
    if (!matched || *matched != w.rule_id)
      throw std::runtime_error("synth: witness path does not satisfy its planted rule");
  }

  SyntheticBenchmark bench{std::move(kg), std::move(rules), std::move(truth), {}};
  bench.splits = split_triples(bench.kg, r_ind, 0.6, 0.2, 0.2, cfg.seed);
  return bench;
}

}  // namespace rulewalk
