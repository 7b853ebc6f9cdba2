#pragma once
// Episodic walk environment.
//
// An episode is a fixed-length walk of L transitions from a query's source
// node. NO_OP (stay) is always candidate 0 and never masked. Direct
// query-relation edges from the source to any known answer, and their
// inverses, are masked at every step, so the held-out edge can never be
// traversed, not even mid-walk.
//
// Reward on completion:
//   R = 1{terminal is an answer} * (positive + lambda * w(M_i) if the
//       NO_OP-stripped metapath matches rule M_i)
// with the negative reward on a miss.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rulewalk/kg.hpp"
#include "rulewalk/nn.hpp"
#include "rulewalk/rules.hpp"
#include "rulewalk/ruleweights.hpp"

namespace rulewalk {

struct Query {
  NodeId source = -1;
  RelId query_rel = -1;
  std::vector<NodeId> answers;     // true targets within the evaluated split, sorted
  std::vector<NodeId> known_true;  // true targets across all splits, sorted
};

struct Trajectory {
  NodeId source = -1;
  RelId query_rel = -1;
  std::vector<Action> transitions;  // exactly L entries, NO_OP included
  NodeId terminal = -1;
  Metapath stripped;                // NO_OP-free metapath of the walk
  std::optional<int> matched_rule;
  bool success = false;
  double reward = 0.0;
  double log_prob = 0.0;  // full-path log probability
};

struct TrainConfig {
  int path_length = 4;  // L
  double lambda = 0.0;
  double alpha = 0.0;
  double learning_rate = 1e-4;
  int batch_size = 128;
  int rollouts = 100;
  int test_rollouts = 50;
  double gamma = 1.0;  // fixed; terminal reward spread evenly over steps
  double gamma_baseline = 0.05;
  double beta = 0.025;
  double positive_reward = 1.0;
  double negative_reward = 0.0;
  enum class UpdateMode { none, naive, p2h };
  UpdateMode update_mode = UpdateMode::none;
  bool p2h_normalized = false;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 1;
  bool filtered_ranking = true;
  bool filter_unreachable_eval = true;
  PolicyConfig policy;

  void validate() const {
    if (path_length < 1) throw ConfigError("path_length must be >= 1");
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0,1]");
    if (gamma != 1.0) throw ConfigError("gamma must be 1 (undiscounted terminal reward)");
    if (gamma_baseline < 0.0 || gamma_baseline > 1.0)
      throw ConfigError("gamma_baseline must be in [0,1]");
    if (batch_size < 1 || rollouts < 1 || test_rollouts < 1)
      throw ConfigError("batch_size, rollouts, test_rollouts must be >= 1");
    if (max_epochs < 1 || patience < 1) throw ConfigError("max_epochs and patience must be >= 1");
    policy.validate();
  }
};

inline const char* to_string(TrainConfig::UpdateMode m) {
  switch (m) {
    case TrainConfig::UpdateMode::none: return "none";
    case TrainConfig::UpdateMode::naive: return "naive";
    case TrainConfig::UpdateMode::p2h: return "p2h";
  }
  return "none";
}

inline TrainConfig::UpdateMode update_mode_from_string(const std::string& s) {
  if (s == "none") return TrainConfig::UpdateMode::none;
  if (s == "naive") return TrainConfig::UpdateMode::naive;
  if (s == "p2h") return TrainConfig::UpdateMode::p2h;
  throw ConfigError("update_mode must be one of none|naive|p2h, got '" + s + "'");
}

// Groups one split's triples into per-source queries. known_true carries
// the targets across every split, for masking and filtered ranking.
inline std::vector<Query> build_queries(const std::vector<Triple>& split,
                                        const std::vector<const std::vector<Triple>*>& all_splits) {
  std::vector<Query> queries;
  std::unordered_map<NodeId, std::size_t> by_source;
  for (const auto& t : split) {
    auto [it, fresh] = by_source.try_emplace(t.head, queries.size());
    if (fresh) {
      Query q;
      q.source = t.head;
      q.query_rel = t.rel;
      queries.push_back(q);
    }
    queries[it->second].answers.push_back(t.tail);
  }
  for (auto& q : queries) {
    for (const auto* s : all_splits)
      for (const auto& t : *s)
        if (t.head == q.source && t.rel == q.query_rel) q.known_true.push_back(t.tail);
    std::sort(q.answers.begin(), q.answers.end());
    q.answers.erase(std::unique(q.answers.begin(), q.answers.end()), q.answers.end());
    std::sort(q.known_true.begin(), q.known_true.end());
    q.known_true.erase(std::unique(q.known_true.begin(), q.known_true.end()),
                       q.known_true.end());
  }
  std::sort(queries.begin(), queries.end(),
            [](const Query& a, const Query& b) { return a.source < b.source; });
  return queries;
}

inline bool contains_sorted(const std::vector<NodeId>& v, NodeId x) {
  return std::binary_search(v.begin(), v.end(), x);
}

// Candidate actions at `node`: NO_OP first, then the node's out-edges in
// adjacency order (capped at max_branching by uniform subsampling).
// Query-edge masking is expressed through the mask flags so masked
// candidates stay visible to the scorer with probability exactly 0.
inline void candidate_actions(const KnowledgeGraph& kg, const Query& q, NodeId node,
                              int max_branching, RngStream& rng, StepChoice& out) {
  out.actions.clear();
  out.masked.clear();
  out.actions.push_back({kNoOpRelation, node});
  out.masked.push_back(0);

  const auto& edges = kg.out_edges(node);
  const RelId inv_rel = kg.schema().relation(q.query_rel).inverse_of;

  auto push = [&](const Edge& e) {
    bool masked = false;
    if (node == q.source && e.rel == q.query_rel && contains_sorted(q.known_true, e.dst))
      masked = true;
    if (inv_rel >= 0 && e.rel == inv_rel && e.dst == q.source &&
        contains_sorted(q.known_true, node))
      masked = true;
    out.actions.push_back({e.rel, e.dst});
    out.masked.push_back(masked ? 1 : 0);
  };

  if (static_cast<int>(edges.size()) <= max_branching) {
    for (const auto& e : edges) push(e);
  } else {
    auto picked = rng.sample_without_replacement(static_cast<std::uint32_t>(edges.size()),
                                                 static_cast<std::uint32_t>(max_branching));
    std::sort(picked.begin(), picked.end());
    for (auto i : picked) push(edges[i]);
  }
}

inline double compute_reward(bool success, std::optional<int> matched_rule,
                             const WeightTable& weights, double lambda,
                             double positive_reward, double negative_reward) {
  if (!success) return negative_reward;
  double r = positive_reward;
  if (matched_rule) r += lambda * weights.get(*matched_rule);
  return r;
}

inline double compute_reward(const Trajectory& traj, const RuleSet& rules,
                             const WeightTable& weights, double lambda,
                             double positive_reward = 1.0, double negative_reward = 0.0) {
  (void)rules;  // the match is already resolved on the trajectory
  return compute_reward(traj.success, traj.matched_rule, weights, lambda, positive_reward,
                        negative_reward);
}

// One sampled episode. The tape records everything needed to recompute
// the episode's loss for gradient accumulation.
template <class S>
inline Trajectory rollout_episode(const KnowledgeGraph& kg, const PolicyParams<S>& params,
                                  const Query& q, const RuleSet& rules,
                                  const WeightTable& weights, const TrainConfig& cfg,
                                  RngStream& rng, EpisodeTape* tape_out) {
  const int L = cfg.path_length;
  Trajectory traj;
  traj.source = q.source;
  traj.query_rel = q.query_rel;

  EpisodeTape tape;
  tape.source = q.source;
  tape.query_rel = q.query_rel;
  tape.steps.resize(L);

  AgentState<S> state = start_state(params, q.source, q.query_rel, L);
  NodeId prev = q.source;
  for (int t = 0; t < L; ++t) {
    StepChoice& sc = tape.steps[t];
    candidate_actions(kg, q, state.current, params.config.max_branching, rng, sc);
    ActionDistribution<S> dist = score_actions(params, state, sc.actions, sc.masked);

    // inverse-cdf sample over the (unmasked) probabilities
    double u = rng.next_double(), acc = 0.0;
    int idx = -1;
    for (std::size_t a = 0; a < dist.probs.size(); ++a) {
      acc += static_cast<double>(dist.probs[a]);
      if (u < acc) {
        idx = static_cast<int>(a);
        break;
      }
    }
    if (idx < 0) {  // rounding slack; take the last unmasked action
      for (int a = static_cast<int>(dist.probs.size()) - 1; a >= 0; --a)
        if (!sc.masked[a]) {
          idx = a;
          break;
        }
    }
    sc.chosen = idx;
    const Action act = sc.actions[idx];
    traj.log_prob += static_cast<double>(dist.log_probs[idx]);
    traj.transitions.push_back(act);
    if (act.rel != kNoOpRelation)
      traj.stripped.steps.push_back({act.rel, kg.node_type(prev), kg.node_type(act.dst)});
    state = step_history(params, state, act);
    prev = act.dst;
  }
  traj.terminal = state.current;
  traj.success = contains_sorted(q.answers, traj.terminal);
  traj.matched_rule = rules.match(traj.stripped);
  traj.reward = compute_reward(traj.success, traj.matched_rule, weights, cfg.lambda,
                               cfg.positive_reward, cfg.negative_reward);
  if (tape_out) *tape_out = std::move(tape);
  return traj;
}

// RNG lane tags so training, evaluation and validation rollouts never
// share a stream.
enum class RolloutPurpose : std::uint64_t { train = 1, validation = 2, test = 3 };

inline RngStream episode_rng(std::uint64_t seed, RolloutPurpose purpose, std::uint64_t epoch,
                             std::uint64_t query_index, std::uint64_t rollout_index) {
  return RngStream::derive(seed, (static_cast<std::uint64_t>(purpose) << 48) ^ epoch,
                           query_index, rollout_index);
}

// All trajectories for one batch of queries: queries x cfg.rollouts
// episodes, each on its own RNG stream.
template <class S>
inline std::vector<Trajectory> rollout_batch(const KnowledgeGraph& kg,
                                             const PolicyParams<S>& params,
                                             const std::vector<Query>& queries,
                                             const std::vector<std::uint64_t>& query_indices,
                                             const RuleSet& rules, const WeightTable& weights,
                                             const TrainConfig& cfg, std::uint64_t epoch,
                                             std::vector<EpisodeTape>* tapes_out) {
  std::vector<Trajectory> out;
  out.reserve(queries.size() * cfg.rollouts);
  if (tapes_out) {
    tapes_out->clear();
    tapes_out->reserve(queries.size() * cfg.rollouts);
  }
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    for (int r = 0; r < cfg.rollouts; ++r) {
      RngStream rng = episode_rng(cfg.seed, RolloutPurpose::train, epoch, query_indices[qi],
                                  static_cast<std::uint64_t>(r));
      EpisodeTape tape;
      out.push_back(rollout_episode(kg, params, queries[qi], rules, weights, cfg, rng, &tape));
      if (tapes_out) tapes_out->push_back(std::move(tape));
    }
  }
  return out;
}

inline std::string trajectory_log_line(const KnowledgeGraph& kg, const Trajectory& traj) {
  std::string line = kg.node_label(traj.source) + "\t" +
                     kg.schema().relation(traj.query_rel).label + "\t";
  for (std::size_t i = 0; i < traj.transitions.size(); ++i) {
    const Action& a = traj.transitions[i];
    if (i) line += ",";
    line += (a.rel == kNoOpRelation ? std::string("NO_OP") : kg.schema().relation(a.rel).label);
    line += "->" + kg.node_label(a.dst);
  }
  line += "\t" + traj.stripped.signature(kg.schema());
  line += "\t" + (traj.matched_rule ? std::to_string(*traj.matched_rule) : std::string("-"));
  line += "\t" + std::to_string(traj.reward);
  return line;
}

}  // namespace rulewalk
