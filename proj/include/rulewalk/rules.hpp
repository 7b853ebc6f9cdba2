#pragma once
// Metapath rules: schema-level path patterns used as rule bodies.
//
// A rule is head <= body where the head is a single relation and the body
// is a metapath chaining from the head's source type to its target type.
// Rule bodies are pairwise distinct, so a concrete path matches at most
// one rule. NO_OP steps are stripped from instantiated paths before
// matching.
//
// Rules file: JSON. Per rule: head relation label, body as
// [relation, src_type, dst_type] triples, optional weight (default 0.5).

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulewalk/core.hpp"
#include "rulewalk/schema.hpp"

namespace rulewalk {

struct MetapathStep {
  RelId rel;
  TypeId src_type;
  TypeId dst_type;

  friend bool operator==(const MetapathStep& a, const MetapathStep& b) {
    return a.rel == b.rel && a.src_type == b.src_type && a.dst_type == b.dst_type;
  }
};

struct Metapath {
  std::vector<MetapathStep> steps;

  std::size_t length() const { return steps.size(); }
  bool empty() const { return steps.empty(); }

  std::vector<RelId> relation_sequence() const {
    std::vector<RelId> seq;
    seq.reserve(steps.size());
    for (const auto& s : steps) seq.push_back(s.rel);
    return seq;
  }

  std::string signature(const Schema& schema) const {
    std::string sig;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (i) sig += "|";
      sig += schema.relation(steps[i].rel).label;
    }
    return sig.empty() ? "<empty>" : sig;
  }

  friend bool operator==(const Metapath& a, const Metapath& b) { return a.steps == b.steps; }
};

// Two consecutive steps sharing a node type.
struct Fragment {
  MetapathStep first;
  MetapathStep second;

  std::uint64_t key() const {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(first.rel)) << 32) |
           static_cast<std::uint32_t>(second.rel);
  }
  friend bool operator==(const Fragment& a, const Fragment& b) {
    return a.first == b.first && a.second == b.second;
  }
};

// Consecutive step pairs, in order, with multiplicity. length-1 fragments
// for a body of length >= 1 (zero for a single-step body).
inline std::vector<Fragment> extract_fragments(const Metapath& body) {
  std::vector<Fragment> out;
  if (body.steps.size() < 2) return out;
  out.reserve(body.steps.size() - 1);
  for (std::size_t i = 0; i + 1 < body.steps.size(); ++i)
    out.push_back({body.steps[i], body.steps[i + 1]});
  return out;
}

struct MetapathRule {
  int id = -1;
  RelId head_rel = -1;
  TypeId head_src = -1;
  TypeId head_dst = -1;
  Metapath body;
  double weight = 0.5;
};

class RuleSet {
 public:
  RuleSet() = default;

  explicit RuleSet(const Schema& schema, std::vector<MetapathRule> rules)
      : rules_(std::move(rules)) {
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      auto& rule = rules_[i];
      if (rule.id != static_cast<int>(i))
        throw ConfigError("rules: ids must be dense and ordered (rule " +
                          std::to_string(i) + " has id " + std::to_string(rule.id) + ")");
      validate_rule(schema, rule);
      auto sig = encode(rule.body.relation_sequence());
      if (!body_index_.emplace(sig, rule.id).second)
        throw ConfigError("rules: duplicate rule body '" + rule.body.signature(schema) + "'");
      for (const auto& frag : extract_fragments(rule.body))
        if (std::find_if(fragment_universe_.begin(), fragment_universe_.end(),
                         [&](const Fragment& f) { return f == frag; }) ==
            fragment_universe_.end())
          fragment_universe_.push_back(frag);
    }
  }

  const std::vector<MetapathRule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }
  const MetapathRule& rule(int id) const { return rules_.at(id); }

  // Distinct fragments across all bodies; its size is the rho of the
  // two-hop update bounds.
  const std::vector<Fragment>& fragment_universe() const { return fragment_universe_; }

  // Exact-body match of a NO_OP-stripped metapath. At most one rule can
  // match because bodies are pairwise distinct.
  std::optional<int> match(const Metapath& stripped) const {
    if (stripped.empty()) return std::nullopt;
    auto it = body_index_.find(encode(stripped.relation_sequence()));
    if (it == body_index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  static std::string encode(const std::vector<RelId>& rels) {
    std::string s;
    for (RelId r : rels) {
      s += std::to_string(r);
      s += ',';
    }
    return s;
  }

  static void validate_rule(const Schema& schema, MetapathRule& rule) {
    if (rule.body.empty()) throw ConfigError("rules: rule body must have length >= 1");
    if (rule.weight < 0.0 || rule.weight > 1.0)
      throw ConfigError("rules: weight outside [0,1]");
    for (std::size_t i = 0; i + 1 < rule.body.steps.size(); ++i)
      if (rule.body.steps[i].dst_type != rule.body.steps[i + 1].src_type)
        throw ConfigError("rules: body steps do not chain at position " + std::to_string(i));
    for (const auto& step : rule.body.steps) {
      const RelationDecl& decl = schema.relation(step.rel);
      if (decl.src_type != step.src_type || decl.dst_type != step.dst_type)
        throw ConfigError("rules: step types disagree with relation '" + decl.label + "'");
    }
    const RelationDecl& head = schema.relation(rule.head_rel);
    if (rule.head_src < 0) rule.head_src = head.src_type;
    if (rule.head_dst < 0) rule.head_dst = head.dst_type;
    if (rule.body.steps.front().src_type != rule.head_src ||
        rule.body.steps.back().dst_type != rule.head_dst)
      throw ConfigError("rules: body endpoints do not match head '" + head.label + "'");
  }

  std::vector<MetapathRule> rules_;
  std::unordered_map<std::string, int> body_index_;
  std::vector<Fragment> fragment_universe_;
};

// Builds the NO_OP-stripped metapath of an instantiated path given as
// (relation, source type, target type) steps.
inline Metapath strip_noops(const Metapath& path) {
  Metapath out;
  for (const auto& s : path.steps)
    if (s.rel != kNoOpRelation) out.steps.push_back(s);
  return out;
}

inline std::optional<int> match_path(const Metapath& path, const RuleSet& rules) {
  return rules.match(strip_noops(path));
}

struct MetapathConstraints {
  std::vector<RelId> excluded_relations;
  bool exclude_inverses = true;

  bool allows(const Schema& schema, RelId r) const {
    if (exclude_inverses && schema.relation(r).is_inverse) return false;
    return std::find(excluded_relations.begin(), excluded_relations.end(), r) ==
           excluded_relations.end();
  }
};

// Exhaustive, duplicate-free enumeration of metapaths from src_type to
// dst_type with length <= max_len, ordered by (length, relation-id
// sequence).
inline std::vector<Metapath> enumerate_metapaths(const Schema& schema, TypeId src_type,
                                                 TypeId dst_type, int max_len,
                                                 const MetapathConstraints& constraints) {
  if (max_len < 1) throw ConfigError("enumerate_metapaths: max_len must be >= 1");
  std::vector<Metapath> found;
  Metapath current;

  auto extend = [&](auto&& self, TypeId at) -> void {
    if (!current.steps.empty() && at == dst_type) found.push_back(current);
    if (static_cast<int>(current.steps.size()) >= max_len) return;
    for (RelId r = 0; r < static_cast<RelId>(schema.num_relations()); ++r) {
      const RelationDecl& decl = schema.relation(r);
      if (decl.src_type != at || !constraints.allows(schema, r)) continue;
      current.steps.push_back({r, decl.src_type, decl.dst_type});
      self(self, decl.dst_type);
      current.steps.pop_back();
    }
  };
  extend(extend, src_type);

  std::sort(found.begin(), found.end(), [](const Metapath& a, const Metapath& b) {
    if (a.length() != b.length()) return a.length() < b.length();
    return a.relation_sequence() < b.relation_sequence();
  });
  return found;
}

inline RuleSet load_rules(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("rules file not found: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("rules file " + path + ": " + e.what());
  }
  if (!doc.contains("rules") || !doc["rules"].is_array())
    throw ConfigError("rules file " + path + ": missing 'rules' array");

  std::vector<MetapathRule> rules;
  int next_id = 0;
  for (const auto& jr : doc["rules"]) {
    MetapathRule rule;
    rule.id = next_id++;
    rule.head_rel = schema.relation_or_throw(jr.at("head").get<std::string>());
    for (const auto& js : jr.at("body")) {
      MetapathStep step;
      if (js.is_array()) {
        step.rel = schema.relation_or_throw(js.at(0).get<std::string>());
        step.src_type = schema.node_type_or_throw(js.at(1).get<std::string>());
        step.dst_type = schema.node_type_or_throw(js.at(2).get<std::string>());
      } else {
        step.rel = schema.relation_or_throw(js.get<std::string>());
        step.src_type = schema.relation(step.rel).src_type;
        step.dst_type = schema.relation(step.rel).dst_type;
      }
      rule.body.steps.push_back(step);
    }
    if (jr.contains("weight")) rule.weight = jr["weight"].get<double>();
    rules.push_back(std::move(rule));
  }
  return RuleSet(schema, std::move(rules));
}

inline void save_rules(const RuleSet& rules, const Schema& schema, const std::string& path) {
  nlohmann::json doc;
  doc["rules"] = nlohmann::json::array();
  for (const auto& rule : rules.rules()) {
    nlohmann::json jr;
    jr["head"] = schema.relation(rule.head_rel).label;
    jr["body"] = nlohmann::json::array();
    for (const auto& s : rule.body.steps)
      jr["body"].push_back({schema.relation(s.rel).label,
                            schema.node_type_label(s.src_type),
                            schema.node_type_label(s.dst_type)});
    jr["weight"] = rule.weight;
    doc["rules"].push_back(jr);
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write rules file: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace rulewalk
