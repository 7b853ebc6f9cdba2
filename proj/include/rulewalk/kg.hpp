#pragma once
// Typed knowledge-graph store.
//
// A KnowledgeGraph is immutable after construction and safe to share
// across threads; every mutating operation (inverse edges, surgery in
// graphops.hpp) returns a new graph. Node and relation ids are assigned
// by first appearance and frozen, so downstream tie-breaking is
// reproducible.
//
// Triple files: UTF-8 TSV, three columns head/relation/tail, no header.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rulewalk/core.hpp"
#include "rulewalk/schema.hpp"

namespace rulewalk {

struct Triple {
  NodeId head;
  RelId rel;
  NodeId tail;

  friend bool operator==(const Triple& a, const Triple& b) {
    return a.head == b.head && a.rel == b.rel && a.tail == b.tail;
  }
  friend bool operator<(const Triple& a, const Triple& b) {
    if (a.head != b.head) return a.head < b.head;
    if (a.rel != b.rel) return a.rel < b.rel;
    return a.tail < b.tail;
  }
};

struct Edge {
  RelId rel;
  NodeId dst;
};

struct SplitSet {
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;
  std::uint64_t seed = 0;
};

class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  // Validating constructor; all loaders and graph surgery funnel through
  // here so the adjacency/degree indices can never drift from the triples.
  KnowledgeGraph(Schema schema, std::vector<std::string> node_labels,
                 std::vector<TypeId> node_types, std::vector<Triple> triples)
      : schema_(std::move(schema)),
        node_labels_(std::move(node_labels)),
        node_types_(std::move(node_types)),
        triples_(std::move(triples)) {
    if (node_labels_.size() != node_types_.size())
      throw ConfigError("graph: node label/type tables disagree");
    for (std::size_t i = 0; i < node_labels_.size(); ++i) {
      if (!node_ids_.emplace(node_labels_[i], static_cast<NodeId>(i)).second)
        throw ConfigError("graph: duplicate node label '" + node_labels_[i] + "'");
    }
    build_indices();
  }

  static KnowledgeGraph load_triples(const std::string& path, const Schema& schema);

  const Schema& schema() const { return schema_; }
  std::size_t num_nodes() const { return node_labels_.size(); }
  std::size_t num_relations() const { return schema_.num_relations(); }
  const std::vector<Triple>& triples() const { return triples_; }

  const std::string& node_label(NodeId n) const { return node_labels_.at(n); }
  TypeId node_type(NodeId n) const { return node_types_.at(n); }
  const std::vector<std::string>& node_labels() const { return node_labels_; }
  const std::vector<TypeId>& node_types() const { return node_types_; }

  std::optional<NodeId> find_node(const std::string& label) const {
    auto it = node_ids_.find(label);
    if (it == node_ids_.end()) return std::nullopt;
    return it->second;
  }
  NodeId node_or_throw(const std::string& label) const {
    auto n = find_node(label);
    if (!n) throw ConfigError("graph: unknown node '" + label + "'");
    return *n;
  }

  const std::vector<Edge>& out_edges(NodeId n) const { return out_adj_.at(n); }

  std::int64_t out_degree(NodeId n, RelId r) const { return out_deg_[idx(n, r)]; }
  std::int64_t in_degree(NodeId n, RelId r) const { return in_deg_[idx(n, r)]; }
  std::int64_t out_degree(NodeId n) const { return static_cast<std::int64_t>(out_adj_[n].size()); }
  std::int64_t in_degree(NodeId n) const { return in_total_[n]; }
  std::int64_t total_degree(NodeId n) const { return out_degree(n) + in_degree(n); }

  std::int64_t relation_count(RelId r) const { return rel_counts_.at(r); }

  bool has_triple(NodeId h, RelId r, NodeId t) const {
    return triple_set_.count(key(h, r, t)) > 0;
  }

  std::vector<Triple> triples_of_relation(RelId r) const {
    std::vector<Triple> out;
    for (const auto& t : triples_)
      if (t.rel == r) out.push_back(t);
    return out;
  }

  // Label-level triple multiset, independent of id assignment.
  std::vector<std::string> label_triples_sorted() const {
    std::vector<std::string> out;
    out.reserve(triples_.size());
    for (const auto& t : triples_)
      out.push_back(node_labels_[t.head] + "\t" + schema_.relation(t.rel).label +
                    "\t" + node_labels_[t.tail]);
    std::sort(out.begin(), out.end());
    return out;
  }

  void save_triples(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write triple file: " + path);
    for (const auto& t : triples_)
      out << node_labels_[t.head] << "\t" << schema_.relation(t.rel).label << "\t"
          << node_labels_[t.tail] << "\n";
  }

 private:
  std::size_t idx(NodeId n, RelId r) const {
    return static_cast<std::size_t>(n) * schema_.num_relations() + static_cast<std::size_t>(r);
  }
  std::uint64_t key(NodeId h, RelId r, NodeId t) const {
    const std::uint64_t n = num_nodes();
    return (static_cast<std::uint64_t>(h) * schema_.num_relations() + r) * n + t;
  }

  void build_indices() {
    const std::size_t n = num_nodes();
    const std::size_t r = schema_.num_relations();
    out_adj_.assign(n, {});
    out_deg_.assign(n * r, 0);
    in_deg_.assign(n * r, 0);
    in_total_.assign(n, 0);
    rel_counts_.assign(r, 0);
    triple_set_.clear();
    triple_set_.reserve(triples_.size() * 2);

    for (std::size_t i = 0; i < triples_.size(); ++i) {
      const Triple& t = triples_[i];
      if (t.head < 0 || t.tail < 0 || static_cast<std::size_t>(t.head) >= n ||
          static_cast<std::size_t>(t.tail) >= n || t.rel < 0 ||
          static_cast<std::size_t>(t.rel) >= r)
        throw ConfigError("graph: triple " + std::to_string(i) + " out of range");
      const RelationDecl& decl = schema_.relation(t.rel);
      if (node_types_[t.head] != decl.src_type || node_types_[t.tail] != decl.dst_type)
        throw ConfigError("graph: triple (" + node_labels_[t.head] + ", " + decl.label +
                          ", " + node_labels_[t.tail] + ") violates relation signature");
      if (t.head == t.tail && !decl.allow_self_loops)
        throw ConfigError("graph: self-loop on '" + node_labels_[t.head] +
                          "' not permitted by relation '" + decl.label + "'");
      if (!triple_set_.insert(key(t.head, t.rel, t.tail)).second)
        throw ConfigError("graph: duplicate triple (" + node_labels_[t.head] + ", " +
                          decl.label + ", " + node_labels_[t.tail] + ")");
      out_adj_[t.head].push_back({t.rel, t.tail});
      ++out_deg_[idx(t.head, t.rel)];
      ++in_deg_[idx(t.tail, t.rel)];
      ++in_total_[t.tail];
      ++rel_counts_[t.rel];
    }
    for (auto& adj : out_adj_)
      std::sort(adj.begin(), adj.end(), [](const Edge& a, const Edge& b) {
        return a.rel != b.rel ? a.rel < b.rel : a.dst < b.dst;
      });
  }

  Schema schema_;
  std::vector<std::string> node_labels_;
  std::vector<TypeId> node_types_;
  std::unordered_map<std::string, NodeId> node_ids_;
  std::vector<Triple> triples_;
  std::vector<std::vector<Edge>> out_adj_;
  std::vector<std::int64_t> out_deg_, in_deg_, in_total_, rel_counts_;
  std::unordered_set<std::uint64_t> triple_set_;
};

inline KnowledgeGraph KnowledgeGraph::load_triples(const std::string& path,
                                                   const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("triple file not found: " + path);

  std::vector<std::string> labels;
  std::vector<TypeId> types;
  std::unordered_map<std::string, NodeId> ids;
  std::vector<Triple> triples;

  auto intern = [&](const std::string& label, TypeId type, int line_no) {
    auto it = ids.find(label);
    if (it != ids.end()) {
      if (types[it->second] != type)
        throw ConfigError(path + ":" + std::to_string(line_no) + ": node '" + label +
                          "' already typed " + schema.node_type_label(types[it->second]) +
                          ", now used as " + schema.node_type_label(type));
      return it->second;
    }
    NodeId id = static_cast<NodeId>(labels.size());
    labels.push_back(label);
    types.push_back(type);
    ids.emplace(label, id);
    return id;
  };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string h, r, t;
    std::istringstream ss(line);
    if (!std::getline(ss, h, '\t') || !std::getline(ss, r, '\t') || !std::getline(ss, t, '\t') ||
        h.empty() || r.empty() || t.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": malformed row, expected head<TAB>relation<TAB>tail");
    auto rel = schema.find_relation(r);
    if (!rel)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown relation '" + r + "'");
    const RelationDecl& decl = schema.relation(*rel);
    Triple triple;
    triple.head = intern(h, decl.src_type, line_no);
    triple.rel = *rel;
    triple.tail = intern(t, decl.dst_type, line_no);
    triples.push_back(triple);
  }

  // duplicate detection with row numbers, ahead of the constructor's check
  {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(triples.size() * 2);
    const std::uint64_t nr = schema.num_relations();
    const std::uint64_t nn = labels.size();
    for (std::size_t i = 0; i < triples.size(); ++i) {
      const Triple& t = triples[i];
      std::uint64_t k = (static_cast<std::uint64_t>(t.head) * nr + t.rel) * nn + t.tail;
      if (!seen.insert(k).second)
        throw ConfigError(path + ": duplicate triple at row " + std::to_string(i + 1) + " (" +
                          labels[t.head] + ", " + schema.relation(t.rel).label + ", " +
                          labels[t.tail] + ")");
    }
  }
  return KnowledgeGraph(schema, std::move(labels), std::move(types), std::move(triples));
}

// Doubles the triple set with mirrored inverse edges and extends the schema
// with the underscore-prefixed inverse relations. Errors if the graph
// already contains inverse triples.
inline KnowledgeGraph add_inverse_edges(const KnowledgeGraph& kg) {
  for (const auto& t : kg.triples())
    if (kg.schema().relation(t.rel).is_inverse)
      throw ConfigError("add_inverse_edges: graph already contains inverse triples ('" +
                        kg.schema().relation(t.rel).label + "')");
  Schema schema = kg.schema();
  const std::size_t n_fwd = schema.num_relations();
  std::vector<RelId> inv_of(n_fwd, -1);
  for (RelId r = 0; r < static_cast<RelId>(n_fwd); ++r)
    if (!schema.relation(r).is_inverse) inv_of[r] = schema.ensure_inverse(r);

  std::vector<Triple> triples = kg.triples();
  triples.reserve(triples.size() * 2);
  for (const auto& t : kg.triples())
    triples.push_back({t.tail, inv_of[t.rel], t.head});
  return KnowledgeGraph(std::move(schema), kg.node_labels(), kg.node_types(),
                        std::move(triples));
}

// Deterministic 60/20/20-style split of one relation's triples. Valid and
// test sizes are floored; the remainder goes to train.
inline SplitSet split_triples(const KnowledgeGraph& kg, RelId relation,
                              double train_ratio, double valid_ratio, double test_ratio,
                              std::uint64_t seed) {
  const double sum = train_ratio + valid_ratio + test_ratio;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split_triples: ratios sum to " + std::to_string(sum) + ", expected 1");
  if (relation < 0 || static_cast<std::size_t>(relation) >= kg.num_relations())
    throw ConfigError("split_triples: relation absent from schema");
  std::vector<Triple> pool = kg.triples_of_relation(relation);
  if (pool.empty())
    throw ConfigError("split_triples: no triples of relation '" +
                      kg.schema().relation(relation).label + "'");

  RngStream rng = RngStream::derive(seed, 0x53504c49ULL /*"SPLI"*/);
  rng.shuffle(pool);

  const std::size_t n = pool.size();
  const std::size_t n_valid = static_cast<std::size_t>(valid_ratio * static_cast<double>(n));
  const std::size_t n_test = static_cast<std::size_t>(test_ratio * static_cast<double>(n));
  const std::size_t n_train = n - n_valid - n_test;

  SplitSet s;
  s.seed = seed;
  s.train.assign(pool.begin(), pool.begin() + n_train);
  s.valid.assign(pool.begin() + n_train, pool.begin() + n_train + n_valid);
  s.test.assign(pool.begin() + n_train + n_valid, pool.end());
  return s;
}

// Keeps exactly the triples (h, r, t) whose endpoints stay connected by a
// directed path of length <= max_len once the triple's own edge is removed.
inline std::vector<Triple> filter_reachable(const KnowledgeGraph& kg,
                                            const std::vector<Triple>& triples,
                                            int max_len) {
  if (max_len < 1) throw ConfigError("filter_reachable: max_len must be >= 1");
  std::vector<Triple> kept;
  std::vector<int> dist(kg.num_nodes());
  for (const auto& probe : triples) {
    std::fill(dist.begin(), dist.end(), -1);
    std::deque<NodeId> frontier{probe.head};
    dist[probe.head] = 0;
    bool found = false;
    while (!frontier.empty() && !found) {
      NodeId u = frontier.front();
      frontier.pop_front();
      if (dist[u] >= max_len) continue;
      for (const Edge& e : kg.out_edges(u)) {
        if (u == probe.head && e.rel == probe.rel && e.dst == probe.tail)
          continue;  // the probed edge itself
        if (dist[e.dst] != -1) continue;
        dist[e.dst] = dist[u] + 1;
        if (e.dst == probe.tail) {
          found = true;
          break;
        }
        frontier.push_back(e.dst);
      }
    }
    if (found) kept.push_back(probe);
  }
  return kept;
}

inline void save_split(const KnowledgeGraph& kg, const std::vector<Triple>& triples,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write split file: " + path);
  for (const auto& t : triples)
    out << kg.node_label(t.head) << "\t" << kg.schema().relation(t.rel).label << "\t"
        << kg.node_label(t.tail) << "\n";
}

inline std::vector<Triple> load_split(const KnowledgeGraph& kg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("split file not found: " + path);
  std::vector<Triple> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string h, r, t;
    std::istringstream ss(line);
    if (!std::getline(ss, h, '\t') || !std::getline(ss, r, '\t') || !std::getline(ss, t, '\t'))
      throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed split row");
    out.push_back({kg.node_or_throw(h), kg.schema().relation_or_throw(r), kg.node_or_throw(t)});
  }
  return out;
}

}  // namespace rulewalk
