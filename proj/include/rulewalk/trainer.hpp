#pragma once
// REINFORCE training loop with moving-average baseline, entropy bonus,
// per-batch rule-weight updates, and early stopping on validation MRR.
//
// Per batch: rollouts, rewards against the current weight snapshot,
// baseline-adjusted policy gradients (clipped to global norm 5), one Adam
// step, then one rule-weight update in the configured mode. Validation
// runs once per epoch with the same ranking procedure used at test time.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulewalk/evalkit.hpp"
#include "rulewalk/kg.hpp"
#include "rulewalk/nn.hpp"
#include "rulewalk/ruleweights.hpp"
#include "rulewalk/walker.hpp"

namespace rulewalk {

constexpr double kGradClipNorm = 5.0;

// The graph the agent walks on: the input graph without the valid/test
// query edges (and their inverse mirrors). Train query edges stay and are
// masked per episode.
inline KnowledgeGraph training_environment(const KnowledgeGraph& kg, const SplitSet& splits) {
  std::unordered_set<std::uint64_t> drop;
  const std::uint64_t n = kg.num_nodes();
  const std::uint64_t r = kg.num_relations();
  auto key = [&](NodeId h, RelId rel, NodeId t) {
    return (static_cast<std::uint64_t>(h) * r + rel) * n + t;
  };
  auto mark = [&](const std::vector<Triple>& triples) {
    for (const auto& t : triples) {
      drop.insert(key(t.head, t.rel, t.tail));
      const RelId inv = kg.schema().relation(t.rel).inverse_of;
      if (inv >= 0) drop.insert(key(t.tail, inv, t.head));
    }
  };
  mark(splits.valid);
  mark(splits.test);
  if (drop.empty()) return kg;

  std::vector<Triple> kept;
  kept.reserve(kg.triples().size());
  for (const auto& t : kg.triples())
    if (!drop.count(key(t.head, t.rel, t.tail))) kept.push_back(t);
  return KnowledgeGraph(kg.schema(), kg.node_labels(), kg.node_types(), std::move(kept));
}

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_reward = 0.0;
  double valid_mrr = 0.0;
  std::size_t successes = 0;
};

struct TrainResult {
  PolicyParams<float> params;  // best-validation checkpoint
  WeightTable weights;         // weights at the best epoch
  int best_epoch = 0;
  double best_valid_mrr = 0.0;
  std::vector<EpochLog> epochs;
};

// Optional file sinks; any empty path is skipped.
struct TrainSinks {
  std::string trajectories_log;
  std::string rule_weights_csv;
  std::string training_json;
};

inline std::vector<Query> eval_queries(const KnowledgeGraph& kg, const SplitSet& splits,
                                       const std::vector<Triple>& eval_split,
                                       const TrainConfig& cfg) {
  std::vector<Triple> triples = eval_split;
  if (cfg.filter_unreachable_eval)
    triples = filter_reachable(kg, triples, cfg.path_length);
  return build_queries(triples, {&splits.train, &splits.valid, &splits.test});
}

template <class S>
inline double validation_mrr(const KnowledgeGraph& kg, const PolicyParams<S>& params,
                             const std::vector<Query>& queries, const RuleSet& rules,
                             const WeightTable& weights, const TrainConfig& cfg,
                             std::uint64_t epoch) {
  if (queries.empty()) return 0.0;
  auto preds = rank_queries(kg, params, queries, rules, weights, cfg,
                            RolloutPurpose::validation, epoch, cfg.filtered_ranking);
  return compute_metrics(preds).mrr;
}

inline TrainResult train(const KnowledgeGraph& full_kg, const SplitSet& splits,
                         const RuleSet& rules, const TrainConfig& cfg,
                         const TrainSinks& sinks = {}) {
  cfg.validate();
  if (splits.train.empty()) throw ConfigError("train: empty training split");

  const KnowledgeGraph kg = training_environment(full_kg, splits);
  std::vector<Query> train_queries =
      build_queries(splits.train, {&splits.train, &splits.valid, &splits.test});
  std::vector<Query> valid_queries = eval_queries(kg, splits, splits.valid, cfg);

  PolicyConfig pc = cfg.policy;
  pc.seed = cfg.seed;
  PolicyParams<float> params = PolicyParams<float>::init(
      pc, static_cast<int>(kg.num_nodes()), static_cast<int>(kg.num_relations()));
  AdamOptimizer<float> optimizer(params);
  WeightTable weights(rules);

  std::ofstream traj_log;
  if (!sinks.trajectories_log.empty()) traj_log.open(sinks.trajectories_log);
  std::ofstream weights_csv;
  if (!sinks.rule_weights_csv.empty()) {
    weights_csv.open(sinks.rule_weights_csv);
    weights_csv << "epoch,rule_id,weight\n";
  }

  TrainResult result;
  result.weights = weights;
  result.params = params;
  double baseline = 0.0;
  double best_mrr = -std::numeric_limits<double>::infinity();
  int bad_evals = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::uint64_t> order(train_queries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    {
      RngStream shuffle_rng = RngStream::derive(cfg.seed, 0x53485546ULL /*"SHUF"*/, epoch);
      shuffle_rng.shuffle(order);
    }

    double loss_sum = 0.0, reward_sum = 0.0;
    std::size_t episode_count = 0, success_count = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Query> batch;
      std::vector<std::uint64_t> batch_indices;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(train_queries[order[i]]);
        batch_indices.push_back(order[i]);
      }

      std::vector<EpisodeTape> tapes;
      std::vector<Trajectory> trajs =
          rollout_batch(kg, params, batch, batch_indices, rules, weights, cfg,
                        static_cast<std::uint64_t>(epoch), &tapes);

      double batch_mean = 0.0;
      for (const auto& t : trajs) batch_mean += t.reward;
      batch_mean /= static_cast<double>(trajs.size());

      std::vector<EpisodeGrad> episodes;
      episodes.reserve(trajs.size());
      for (std::size_t e = 0; e < trajs.size(); ++e)
        episodes.push_back({&tapes[e], trajs[e].reward - baseline});

      PolicyTensors<float> grads;
      float loss = 0.0f;
      try {
        loss = policy_gradients(params, episodes, static_cast<float>(cfg.beta), grads);
      } catch (const std::exception& e) {
        throw std::runtime_error("train: aborting at epoch " + std::to_string(epoch) + ": " +
                                 e.what());
      }
      clip_global_norm(grads, kGradClipNorm);
      optimizer.step(params, grads, cfg.learning_rate);
      baseline = cfg.gamma_baseline * baseline + (1.0 - cfg.gamma_baseline) * batch_mean;

      // rule-weight update from this batch's successes
      if (cfg.update_mode == TrainConfig::UpdateMode::naive) {
        std::map<int, std::int64_t> counts;
        for (const auto& t : trajs)
          if (t.success && t.matched_rule) ++counts[*t.matched_rule];
        apply_signals(weights,
                      naive_mu(counts, rules.size(), cfg.batch_size, cfg.rollouts),
                      cfg.alpha);
      } else if (cfg.update_mode == TrainConfig::UpdateMode::p2h) {
        std::vector<Metapath> successes;
        for (const auto& t : trajs)
          if (t.success) successes.push_back(t.stripped);
        weights = p2h_batch_update(successes, rules, std::move(weights), cfg.batch_size,
                                   cfg.rollouts, cfg.alpha, cfg.p2h_normalized);
      }

      loss_sum += static_cast<double>(loss);
      reward_sum += batch_mean * static_cast<double>(trajs.size());
      episode_count += trajs.size();
      for (const auto& t : trajs) {
        if (!t.success) continue;
        ++success_count;
        if (traj_log.is_open()) traj_log << trajectory_log_line(kg, t) << "\n";
      }
    }

    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, episode_count));
    log.mean_reward = reward_sum / static_cast<double>(std::max<std::size_t>(1, episode_count));
    log.successes = success_count;
    log.valid_mrr = validation_mrr(kg, params, valid_queries, rules, weights, cfg,
                                   static_cast<std::uint64_t>(epoch));
    result.epochs.push_back(log);

    if (weights_csv.is_open())
      for (std::size_t rid = 0; rid < weights.size(); ++rid)
        weights_csv << epoch << "," << rid << "," << weights.get(static_cast<int>(rid)) << "\n";

    if (log.valid_mrr > best_mrr) {
      best_mrr = log.valid_mrr;
      result.params = params;
      result.weights = weights;
      result.best_epoch = epoch;
      result.best_valid_mrr = log.valid_mrr;
      bad_evals = 0;
    } else {
      ++bad_evals;
      if (bad_evals >= cfg.patience) break;
    }
  }

  if (!sinks.training_json.empty()) {
    nlohmann::json doc;
    doc["best_epoch"] = result.best_epoch;
    doc["best_valid_mrr"] = result.best_valid_mrr;
    doc["epochs"] = nlohmann::json::array();
    for (const auto& e : result.epochs)
      doc["epochs"].push_back({{"epoch", e.epoch},
                               {"mean_loss", e.mean_loss},
                               {"mean_reward", e.mean_reward},
                               {"valid_mrr", e.valid_mrr},
                               {"successful_trajectories", e.successes}});
    std::ofstream out(sinks.training_json);
    if (!out) throw ConfigError("cannot write training log: " + sinks.training_json);
    out << doc.dump(2) << "\n";
  }
  return result;
}

}  // namespace rulewalk
