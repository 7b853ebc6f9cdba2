#pragma once
// Test-time ranking and metrics.
//
// Each query gets test_rollouts sampled walks; a candidate's score is the
// sum of the full-path probabilities of the rollouts that terminated on
// it. Ties break by rollout count, then by entity id. In filtered mode the
// query's other known true answers are removed before ranking an evaluated
// answer. An unreached answer contributes reciprocal rank 0.
//
// Pruned metrics restrict each candidate list to rule-satisfying
// candidates (some rollout reaching the candidate matched a rule) and
// re-rank inside that subset; queries whose evaluated answer is not
// rule-satisfying stay in the denominator with contribution 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "rulewalk/walker.hpp"

namespace rulewalk {

struct CandidateScore {
  NodeId entity = -1;
  double score = 0.0;  // sum of full-path probabilities
  int rollout_count = 0;
  bool rule_satisfied = false;
  int matched_rule = -1;  // most frequent matching rule, smallest id on ties
};

struct AnswerRank {
  NodeId answer = -1;
  int standard_rank = 0;  // 1-based; 0 = unreached
  int pruned_rank = 0;    // 1-based within rule-satisfying subset; 0 = dropped
  bool rule_satisfied = false;
};

struct RankedPrediction {
  NodeId source = -1;
  RelId query_rel = -1;
  std::vector<CandidateScore> candidates;  // sorted best-first
  std::vector<AnswerRank> answers;
};

enum class MetricType { standard, pruned };

struct MetricsReport {
  MetricType type = MetricType::standard;
  double hits1 = 0.0, hits3 = 0.0, hits10 = 0.0, mrr = 0.0;
  std::size_t query_count = 0;     // evaluated (source, answer) pairs
  std::size_t retained_count = 0;  // pairs whose answer was rule-satisfying
  std::size_t rule_satisfied_candidates = 0;
  std::map<int, std::size_t> per_rule_candidates;
};

namespace detail {

inline bool candidate_before(const CandidateScore& a, const CandidateScore& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.rollout_count != b.rollout_count) return a.rollout_count > b.rollout_count;
  return a.entity < b.entity;
}

// 1-based rank of `answer` among `candidates` (already sorted) after
// removing the other known true answers; 0 when absent.
inline int rank_of(const std::vector<CandidateScore>& candidates, NodeId answer,
                   const std::vector<NodeId>& known_true, bool filtered, bool pruned_only) {
  int rank = 0;
  for (const auto& c : candidates) {
    if (pruned_only && !c.rule_satisfied) continue;
    if (filtered && c.entity != answer && contains_sorted(known_true, c.entity)) continue;
    ++rank;
    if (c.entity == answer) return rank;
  }
  return 0;
}

}  // namespace detail

// Aggregates sampled rollouts of one query into a ranked candidate list
// and per-answer ranks. Separated from the sampling so the ranking
// contract is testable against hand-enumerated cases.
inline RankedPrediction rank_from_rollouts(const Query& q,
                                           const std::vector<Trajectory>& rollouts,
                                           bool filtered) {
  struct Agg {
    double score = 0.0;
    int count = 0;
    std::map<int, int> rule_hits;
  };
  std::unordered_map<NodeId, Agg> agg;
  for (const auto& t : rollouts) {
    Agg& a = agg[t.terminal];
    a.score += std::exp(t.log_prob);
    a.count += 1;
    if (t.matched_rule) a.rule_hits[*t.matched_rule] += 1;
  }

  RankedPrediction pred;
  pred.source = q.source;
  pred.query_rel = q.query_rel;
  pred.candidates.reserve(agg.size());
  for (const auto& [entity, a] : agg) {
    CandidateScore c;
    c.entity = entity;
    c.score = a.score;
    c.rollout_count = a.count;
    if (!a.rule_hits.empty()) {
      c.rule_satisfied = true;
      int best_rule = -1, best_count = -1;
      for (const auto& [rule, count] : a.rule_hits)
        if (count > best_count) {
          best_rule = rule;
          best_count = count;
        }
      c.matched_rule = best_rule;
    }
    pred.candidates.push_back(c);
  }
  std::sort(pred.candidates.begin(), pred.candidates.end(), detail::candidate_before);

  for (NodeId answer : q.answers) {
    AnswerRank ar;
    ar.answer = answer;
    ar.standard_rank = detail::rank_of(pred.candidates, answer, q.known_true, filtered, false);
    for (const auto& c : pred.candidates)
      if (c.entity == answer) ar.rule_satisfied = c.rule_satisfied;
    ar.pruned_rank = ar.rule_satisfied ? detail::rank_of(pred.candidates, answer, q.known_true,
                                                         filtered, true)
                                       : 0;
    pred.answers.push_back(ar);
  }
  return pred;
}

// Samples test_rollouts walks per query and ranks the terminals. Query
// edges are masked exactly as in training. Successful trajectories are
// appended to `successes_out` when provided (for the trajectory log and
// shortcut analysis).
template <class S>
inline std::vector<RankedPrediction> rank_queries(
    const KnowledgeGraph& kg, const PolicyParams<S>& params, const std::vector<Query>& queries,
    const RuleSet& rules, const WeightTable& weights, const TrainConfig& cfg,
    RolloutPurpose purpose, std::uint64_t epoch, bool filtered,
    std::vector<Trajectory>* successes_out = nullptr) {
  std::vector<RankedPrediction> preds;
  preds.reserve(queries.size());
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    std::vector<Trajectory> rollouts;
    rollouts.reserve(cfg.test_rollouts);
    for (int r = 0; r < cfg.test_rollouts; ++r) {
      RngStream rng = episode_rng(cfg.seed, purpose, epoch, qi, static_cast<std::uint64_t>(r));
      rollouts.push_back(
          rollout_episode(kg, params, queries[qi], rules, weights, cfg, rng, nullptr));
    }
    if (successes_out)
      for (const auto& t : rollouts)
        if (t.success) successes_out->push_back(t);
    preds.push_back(rank_from_rollouts(queries[qi], rollouts, filtered));
  }
  return preds;
}

inline MetricsReport compute_metrics(const std::vector<RankedPrediction>& preds,
                                     MetricType type = MetricType::standard) {
  MetricsReport rep;
  rep.type = type;
  std::size_t n = 0, h1 = 0, h3 = 0, h10 = 0;
  double rr_sum = 0.0;
  for (const auto& pred : preds) {
    for (const auto& ar : pred.answers) {
      ++n;
      const int rank = type == MetricType::standard ? ar.standard_rank : ar.pruned_rank;
      if (type == MetricType::pruned && ar.rule_satisfied) ++rep.retained_count;
      if (rank >= 1) {
        if (rank <= 1) ++h1;
        if (rank <= 3) ++h3;
        if (rank <= 10) ++h10;
        rr_sum += 1.0 / static_cast<double>(rank);
      }
    }
    for (const auto& c : pred.candidates) {
      if (c.rule_satisfied) {
        ++rep.rule_satisfied_candidates;
        ++rep.per_rule_candidates[c.matched_rule];
      }
    }
  }
  rep.query_count = n;
  if (n > 0) {
    rep.hits1 = static_cast<double>(h1) / static_cast<double>(n);
    rep.hits3 = static_cast<double>(h3) / static_cast<double>(n);
    rep.hits10 = static_cast<double>(h10) / static_cast<double>(n);
    rep.mrr = rr_sum / static_cast<double>(n);
  }
  return rep;
}

inline MetricsReport pruned_metrics(const std::vector<RankedPrediction>& preds) {
  return compute_metrics(preds, MetricType::pruned);
}

struct SignatureCount {
  std::string signature;
  std::size_t count = 0;
  bool associative = false;  // uses at least one inverse relation
};

// Histogram of successful trajectories by NO_OP-stripped metapath
// signature. Inverse-relation signatures are flagged associative.
inline std::vector<SignatureCount> classify_trajectories(const KnowledgeGraph& kg,
                                                         const std::vector<Trajectory>& trajs) {
  std::map<std::string, SignatureCount> hist;
  for (const auto& t : trajs) {
    const std::string sig = t.stripped.signature(kg.schema());
    auto& entry = hist[sig];
    entry.signature = sig;
    entry.count += 1;
    for (const auto& step : t.stripped.steps)
      if (kg.schema().relation(step.rel).is_inverse) entry.associative = true;
  }
  std::vector<SignatureCount> out;
  out.reserve(hist.size());
  for (auto& [_, v] : hist) out.push_back(std::move(v));
  std::sort(out.begin(), out.end(), [](const SignatureCount& a, const SignatureCount& b) {
    return a.count != b.count ? a.count > b.count : a.signature < b.signature;
  });
  return out;
}

}  // namespace rulewalk
