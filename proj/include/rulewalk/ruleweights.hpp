#pragma once
// Online rule-weight learning.
//
// Two schemes, both driven by a per-batch usefulness ratio mu = O/E that
// is clamped and folded into the weight through the same increment:
//
//   naive    O = per-rule count of matched successful walks,
//            E = total matched / rule count
//   two-hop  O/E per body fragment, E = 1 / (unique fragments observed),
//            rule signal = product over its body fragments
//
//   mu_min = rho / (batch * rollouts),  mu_max = rho * batch * rollouts
//   w <- clamp01(w + w * 2a * (mu - 1) / (mu + 1))
//
// rho is the rule count in naive mode and the size of the rule set's
// fragment universe in two-hop mode. All weight math is double precision.

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "rulewalk/rules.hpp"

namespace rulewalk {

class WeightTable {
 public:
  WeightTable() = default;
  explicit WeightTable(const RuleSet& rules) {
    weights_.reserve(rules.size());
    for (const auto& r : rules.rules()) weights_.push_back(r.weight);
  }

  double get(int rule_id) const { return weights_.at(rule_id); }
  void set(int rule_id, double w) { weights_.at(rule_id) = w; }
  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& values() const { return weights_; }

 private:
  std::vector<double> weights_;
};

struct FragmentCounts {
  std::unordered_map<std::uint64_t, std::int64_t> observed;  // fragment key -> O_f
  std::int64_t total = 0;
  std::int64_t unique = 0;
  double expected = 0.0;  // E = 1 / unique

  void add(const Fragment& f) {
    if (++observed[f.key()] == 1) ++unique;
    ++total;
  }
  void finalize() { expected = unique > 0 ? 1.0 / static_cast<double>(unique) : 0.0; }

  std::int64_t count(const Fragment& f) const {
    auto it = observed.find(f.key());
    return it == observed.end() ? 0 : it->second;
  }
};

struct UpdateSignal {
  int rule_id = -1;
  double mu_raw = 0.0;
  double mu_clamped = 0.0;
};

inline double mu_lower_bound(std::size_t rho, std::size_t batch_size, std::size_t rollouts) {
  return static_cast<double>(rho) /
         (static_cast<double>(batch_size) * static_cast<double>(rollouts));
}

inline double mu_upper_bound(std::size_t rho, std::size_t batch_size, std::size_t rollouts) {
  return static_cast<double>(rho) * static_cast<double>(batch_size) *
         static_cast<double>(rollouts);
}

inline double clamp_mu(double mu, std::size_t rho, std::size_t batch_size,
                       std::size_t rollouts) {
  const double lo = mu_lower_bound(rho, batch_size, rollouts);
  const double hi = mu_upper_bound(rho, batch_size, rollouts);
  if (mu < lo) return lo;
  if (mu > hi) return hi;
  return mu;
}

// Additive weight increment; the result stays in [0,1]. alpha = 0 is a
// no-op, mu = 1 is a no-op.
inline double phi_update(double w, double mu_clamped, double alpha) {
  const double phi = w * 2.0 * alpha * ((mu_clamped - 1.0) / (mu_clamped + 1.0));
  double next = w + phi;
  if (next < 0.0) next = 0.0;
  if (next > 1.0) next = 1.0;
  return next;
}

// Per-rule mu from one batch's matched-success counts. Empty result when
// the batch produced no matches at all.
inline std::vector<UpdateSignal> naive_mu(const std::map<int, std::int64_t>& rule_match_counts,
                                          std::size_t rho_rules, std::size_t batch_size,
                                          std::size_t rollouts) {
  std::int64_t total = 0;
  for (const auto& [_, c] : rule_match_counts) total += c;
  std::vector<UpdateSignal> signals;
  if (total == 0 || rho_rules == 0) return signals;

  const double expected = static_cast<double>(total) / static_cast<double>(rho_rules);
  signals.reserve(rho_rules);
  for (std::size_t id = 0; id < rho_rules; ++id) {
    auto it = rule_match_counts.find(static_cast<int>(id));
    const double observed = it == rule_match_counts.end() ? 0.0 : static_cast<double>(it->second);
    UpdateSignal sig;
    sig.rule_id = static_cast<int>(id);
    sig.mu_raw = observed / expected;
    sig.mu_clamped = clamp_mu(sig.mu_raw, rho_rules, batch_size, rollouts);
    signals.push_back(sig);
  }
  return signals;
}

inline void apply_signals(WeightTable& table, const std::vector<UpdateSignal>& signals,
                          double alpha) {
  for (const auto& sig : signals)
    table.set(sig.rule_id, phi_update(table.get(sig.rule_id), sig.mu_clamped, alpha));
}

// Two-hop joint-probability signals for one batch. `success_metapaths` are
// the NO_OP-stripped metapaths of the batch's true-pair successes. In the
// literal mode O_f is the raw fragment count; the normalized mode divides
// it by the total observation count.
inline std::vector<UpdateSignal> p2h_signals(const std::vector<Metapath>& success_metapaths,
                                             const RuleSet& rules, std::size_t batch_size,
                                             std::size_t rollouts, bool normalized = false) {
  std::vector<UpdateSignal> signals;
  if (success_metapaths.empty()) return signals;

  FragmentCounts counts;
  for (const auto& mp : success_metapaths)
    for (const auto& frag : extract_fragments(mp)) counts.add(frag);
  counts.finalize();
  if (counts.unique == 0) return signals;

  const std::size_t rho = rules.fragment_universe().size();
  if (rho == 0) return signals;  // no rule body has two hops
  signals.reserve(rules.size());
  for (const auto& rule : rules.rules()) {
    double p2h = 1.0;
    for (const auto& frag : extract_fragments(rule.body)) {
      double observed = static_cast<double>(counts.count(frag));
      if (normalized) observed /= static_cast<double>(counts.total);
      p2h *= observed / counts.expected;
    }
    UpdateSignal sig;
    sig.rule_id = rule.id;
    sig.mu_raw = p2h;
    sig.mu_clamped = clamp_mu(p2h, rho, batch_size, rollouts);
    signals.push_back(sig);
  }
  return signals;
}

inline WeightTable p2h_batch_update(const std::vector<Metapath>& success_metapaths,
                                    const RuleSet& rules, WeightTable table,
                                    std::size_t batch_size, std::size_t rollouts,
                                    double alpha, bool normalized = false) {
  apply_signals(table, p2h_signals(success_metapaths, rules, batch_size, rollouts, normalized),
                alpha);
  return table;
}

}  // namespace rulewalk
