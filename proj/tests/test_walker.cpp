#include <gtest/gtest.h>

#include "rulewalk/synthgen.hpp"
#include "rulewalk/trainer.hpp"
#include "rulewalk/walker.hpp"
#include "test_util.hpp"

using namespace rulewalk;

namespace {

TrainConfig micro_config() {
  TrainConfig cfg;
  cfg.path_length = 4;
  cfg.lambda = 5.0;
  cfg.alpha = 0.01;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 4;
  cfg.rollouts = 4;
  cfg.test_rollouts = 8;
  cfg.max_epochs = 2;
  cfg.patience = 5;
  cfg.seed = 3;
  cfg.update_mode = TrainConfig::UpdateMode::p2h;
  cfg.policy.embedding_size = 8;
  cfg.policy.hidden_size = 8;
  cfg.policy.lstm_layers = 2;
  cfg.policy.max_branching = 20;
  return cfg;
}

SynthConfig micro_synth() {
  SynthConfig s;
  s.num_drugs = 6;
  s.num_proteins = 24;
  s.num_processes = 4;
  s.planted_pairs = 8;
  s.bg_drug_protein = 24;
  s.bg_participates = 12;
  s.ppi_fraction = 0.4;
  s.seed = 5;
  return s;
}

}  // namespace

TEST(Rollout, AlwaysExactlyLTransitions) {
  SyntheticBenchmark bench = generate_synthetic(micro_synth());
  TrainConfig cfg = micro_config();
  auto params = PolicyParams<float>::init(cfg.policy, static_cast<int>(bench.kg.num_nodes()),
                                          static_cast<int>(bench.kg.num_relations()));
  WeightTable weights(bench.rules);
  auto queries = build_queries(bench.splits.train,
                               {&bench.splits.train, &bench.splits.valid, &bench.splits.test});
  for (std::size_t qi = 0; qi < std::min<std::size_t>(4, queries.size()); ++qi) {
    RngStream rng = episode_rng(1, RolloutPurpose::train, 0, qi, 0);
    Trajectory t =
        rollout_episode(bench.kg, params, queries[qi], bench.rules, weights, cfg, rng, nullptr);
    EXPECT_EQ(t.transitions.size(), 4u);
    EXPECT_EQ(t.terminal, t.transitions.back().dst);
  }
}

TEST(Rollout, DeadEndNodeStays) {
  // source with zero out-edges: every step is NO_OP
  Schema schema = testutil::bio_schema();
  std::vector<std::string> labels = {"d0", "b0"};
  std::vector<TypeId> types = {schema.node_type_or_throw("Drug"),
                               schema.node_type_or_throw("BiologicalProcess")};
  KnowledgeGraph kg(schema, labels, types, {});
  RuleSet rules(schema, {});
  WeightTable weights(rules);
  TrainConfig cfg = micro_config();

  Query q;
  q.source = 0;
  q.query_rel = schema.relation_or_throw("induces");
  q.answers = {1};
  q.known_true = {1};
  auto params = PolicyParams<float>::init(cfg.policy, 2, static_cast<int>(kg.num_relations()));
  RngStream rng(9);
  Trajectory t = rollout_episode(kg, params, q, rules, weights, cfg, rng, nullptr);
  for (const auto& a : t.transitions) {
    EXPECT_EQ(a.rel, kNoOpRelation);
    EXPECT_EQ(a.dst, 0);
  }
  EXPECT_TRUE(t.stripped.empty());
  EXPECT_FALSE(t.success);
}

TEST(Rollout, MaskBlocksTheOnlyQueryEdge) {
  // the single d->b connection is the held-out query edge itself
  Schema schema = testutil::bio_schema();
  std::vector<std::string> labels = {"d0", "b0"};
  std::vector<TypeId> types = {schema.node_type_or_throw("Drug"),
                               schema.node_type_or_throw("BiologicalProcess")};
  RelId induces = schema.relation_or_throw("induces");
  KnowledgeGraph kg(schema, labels, types, {{0, induces, 1}});
  RuleSet rules(schema, {});
  WeightTable weights(rules);
  TrainConfig cfg = micro_config();

  Query q;
  q.source = 0;
  q.query_rel = induces;
  q.answers = {1};
  q.known_true = {1};
  auto params = PolicyParams<float>::init(cfg.policy, 2, static_cast<int>(kg.num_relations()));
  for (std::uint64_t s = 0; s < 32; ++s) {
    RngStream rng(s);
    Trajectory t = rollout_episode(kg, params, q, rules, weights, cfg, rng, nullptr);
    EXPECT_NE(t.terminal, 1);
    EXPECT_FALSE(t.success);
  }
}

TEST(Rollout, NoTrajectoryEverTraversesAMaskedEdge) {
  SyntheticBenchmark bench = generate_synthetic(micro_synth());
  KnowledgeGraph kg = add_inverse_edges(bench.kg);
  RelId induces = kg.schema().relation_or_throw("induces");
  RelId inv = kg.schema().relation(induces).inverse_of;

  TrainConfig cfg = micro_config();
  auto params = PolicyParams<float>::init(cfg.policy, static_cast<int>(kg.num_nodes()),
                                          static_cast<int>(kg.num_relations()));
  WeightTable weights(bench.rules);
  auto queries = build_queries(bench.splits.train,
                               {&bench.splits.train, &bench.splits.valid, &bench.splits.test});
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    for (std::uint64_t r = 0; r < 6; ++r) {
      RngStream rng = episode_rng(2, RolloutPurpose::train, 1, qi, r);
      Trajectory t =
          rollout_episode(kg, params, queries[qi], bench.rules, weights, cfg, rng, nullptr);
      NodeId at = queries[qi].source;
      for (const auto& a : t.transitions) {
        const bool forward_query_edge = at == queries[qi].source && a.rel == induces &&
                                        contains_sorted(queries[qi].known_true, a.dst);
        const bool inverse_query_edge = a.rel == inv && a.dst == queries[qi].source &&
                                        contains_sorted(queries[qi].known_true, at);
        EXPECT_FALSE(forward_query_edge);
        EXPECT_FALSE(inverse_query_edge);
        at = a.dst;
      }
    }
  }
}

TEST(Reward, MissGivesNegativeRewardEvenOnRuleMatch) {
  Schema schema = testutil::bio_schema();
  RuleSet rules = testutil::mechanistic_rules(schema);
  WeightTable weights(rules);
  EXPECT_EQ(compute_reward(false, std::optional<int>(1), weights, 10.0, 1.0, 0.0), 0.0);
}

TEST(Reward, HitWithoutMatchIsBaseReward) {
  Schema schema = testutil::bio_schema();
  RuleSet rules = testutil::mechanistic_rules(schema);
  WeightTable weights(rules);
  EXPECT_EQ(compute_reward(true, std::nullopt, weights, 10.0, 1.0, 0.0), 1.0);
}

TEST(Reward, HitWithMatchAddsLambdaTimesWeight) {
  Schema schema = testutil::bio_schema();
  RuleSet rules = testutil::mechanistic_rules(schema);
  WeightTable weights(rules);
  EXPECT_EQ(compute_reward(true, std::optional<int>(2), weights, 10.0, 1.0, 0.0), 6.0);
}

TEST(Reward, BoundsHoldOverSampledRollouts) {
  SyntheticBenchmark bench = generate_synthetic(micro_synth());
  TrainConfig cfg = micro_config();
  auto params = PolicyParams<float>::init(cfg.policy, static_cast<int>(bench.kg.num_nodes()),
                                          static_cast<int>(bench.kg.num_relations()));
  WeightTable weights(bench.rules);
  auto queries = build_queries(bench.splits.train,
                               {&bench.splits.train, &bench.splits.valid, &bench.splits.test});
  std::vector<std::uint64_t> idx(queries.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto trajs = rollout_batch(bench.kg, params, queries, idx, bench.rules, weights, cfg, 1, nullptr);
  EXPECT_EQ(trajs.size(), queries.size() * static_cast<std::size_t>(cfg.rollouts));
  for (const auto& t : trajs) {
    if (!t.success) {
      EXPECT_EQ(t.reward, 0.0);
    } else if (t.matched_rule) {
      EXPECT_EQ(t.reward, 1.0 + cfg.lambda * weights.get(*t.matched_rule));
    } else {
      EXPECT_EQ(t.reward, 1.0);
    }
  }
}

TEST(Baseline, EmaStaysWithinObservedRange) {
  RngStream rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const double decay = rng.next_double();
    double b = 0.0;
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < 30; ++i) {
      const double mean = rng.next_double() * 6.0;
      lo = std::min(lo, mean);
      hi = std::max(hi, mean);
      b = decay * b + (1.0 - decay) * mean;
      EXPECT_GE(b, lo - 1e-12);
      EXPECT_LE(b, hi + 1e-12);
    }
  }
}

TEST(Train, AlphaZeroKeepsAllWeightsAtHalf) {
  SyntheticBenchmark bench = generate_synthetic(micro_synth());
  for (auto mode : {TrainConfig::UpdateMode::naive, TrainConfig::UpdateMode::p2h}) {
    TrainConfig cfg = micro_config();
    cfg.alpha = 0.0;
    cfg.update_mode = mode;
    TrainResult result = train(bench.kg, bench.splits, bench.rules, cfg);
    for (double w : result.weights.values()) EXPECT_EQ(w, 0.5);
  }
}

TEST(Train, UpdateModeNoneNeverTouchesWeights) {
  SyntheticBenchmark bench = generate_synthetic(micro_synth());
  TrainConfig cfg = micro_config();
  cfg.update_mode = TrainConfig::UpdateMode::none;
  cfg.alpha = 0.5;
  TrainResult result = train(bench.kg, bench.splits, bench.rules, cfg);
  for (double w : result.weights.values()) EXPECT_EQ(w, 0.5);
}

TEST(Train, PatienceStopsAfterNonImprovingEvaluations) {
  // an empty validation split pins validation MRR at 0, so the run stops at
  // the (patience + 1)-th evaluation with the first epoch as best
  SyntheticBenchmark bench = generate_synthetic(micro_synth());
  SplitSet splits = bench.splits;
  splits.valid.clear();
  TrainConfig cfg = micro_config();
  cfg.max_epochs = 50;
  cfg.patience = 3;
  TrainResult result = train(bench.kg, splits, bench.rules, cfg);
  EXPECT_EQ(result.epochs.size(), 4u);
  EXPECT_EQ(result.best_epoch, 1);
}

TEST(Train, FullRunDeterminism) {
  SyntheticBenchmark bench = generate_synthetic(micro_synth());
  TrainConfig cfg = micro_config();
  TrainResult a = train(bench.kg, bench.splits, bench.rules, cfg);
  TrainResult b = train(bench.kg, bench.splits, bench.rules, cfg);
  ASSERT_EQ(a.epochs.size(), b.epochs.size());
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    EXPECT_EQ(a.epochs[i].mean_loss, b.epochs[i].mean_loss);
    EXPECT_EQ(a.epochs[i].mean_reward, b.epochs[i].mean_reward);
    EXPECT_EQ(a.epochs[i].valid_mrr, b.epochs[i].valid_mrr);
  }
  EXPECT_EQ(a.weights.values(), b.weights.values());
  EXPECT_EQ(a.best_epoch, b.best_epoch);
}

TEST(Train, WritesDeclaredArtifacts) {
  SyntheticBenchmark bench = generate_synthetic(micro_synth());
  TrainConfig cfg = micro_config();
  auto dir = std::filesystem::temp_directory_path() / "rulewalk_train_sinks";
  std::filesystem::create_directories(dir);
  TrainSinks sinks;
  sinks.trajectories_log = (dir / "trajectories.log").string();
  sinks.rule_weights_csv = (dir / "rule_weights.csv").string();
  sinks.training_json = (dir / "training.json").string();
  train(bench.kg, bench.splits, bench.rules, cfg, sinks);
  EXPECT_TRUE(std::filesystem::exists(sinks.trajectories_log));
  EXPECT_TRUE(std::filesystem::exists(sinks.rule_weights_csv));
  EXPECT_TRUE(std::filesystem::exists(sinks.training_json));

  std::ifstream csv(sinks.rule_weights_csv);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "epoch,rule_id,weight");
  std::filesystem::remove_all(dir);
}

TEST(TrainConfig, ValidationCatchesBadValues) {
  TrainConfig cfg = micro_config();
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = micro_config();
  cfg.lambda = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = micro_config();
  cfg.gamma_baseline = 2.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
