#pragma once
// Graph surgery: degree-preserving edge permutation, degree-targeted
// trimming, and relation stripping. All operations return new graphs.

#include <algorithm>
#include <cstdint>
#include <queue>
#include <string>
#include <unordered_set>
#include <vector>

#include "rulewalk/kg.hpp"

namespace rulewalk {

struct PermutationReport {
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
  std::uint64_t degree_checksum_before = 0;
  std::uint64_t degree_checksum_after = 0;
  double edge_jaccard = 0.0;  // overlap between old and new permuted-class edges
};

// Order-independent digest of every (node, relation, out-degree, in-degree)
// row; equal before/after iff the degree table is preserved exactly.
inline std::uint64_t degree_checksum(const KnowledgeGraph& kg) {
  std::uint64_t sum = 0;
  for (NodeId n = 0; n < static_cast<NodeId>(kg.num_nodes()); ++n) {
    for (RelId r = 0; r < static_cast<RelId>(kg.num_relations()); ++r) {
      std::uint64_t s = (static_cast<std::uint64_t>(n) << 32) ^
                        (static_cast<std::uint64_t>(r) << 16) ^
                        (static_cast<std::uint64_t>(kg.out_degree(n, r)) << 1) ^
                        static_cast<std::uint64_t>(kg.in_degree(n, r) * 0x9e3779b9ULL);
      sum += splitmix64(s);
    }
  }
  return sum;
}

// XSwap: repeatedly samples two same-relation edges (a,b),(c,d) and
// rewires them to (a,d),(c,b), rejecting swaps that would create a
// self-loop or a duplicate. Per-node per-relation degrees are preserved
// exactly. When the graph carries inverse edges, every forward+inverse
// pair is rewired in lockstep.
inline std::pair<KnowledgeGraph, PermutationReport> xswap_permute(
    const KnowledgeGraph& kg, const std::vector<RelId>& relation_classes,
    double attempts_factor, std::uint64_t seed) {
  if (attempts_factor <= 0.0) throw ConfigError("xswap: attempts_factor must be > 0");
  for (RelId r : relation_classes) {
    if (r < 0 || static_cast<std::size_t>(r) >= kg.num_relations())
      throw ConfigError("xswap: relation class absent from schema");
    if (kg.schema().relation(r).is_inverse)
      throw ConfigError("xswap: permute the forward relation '" +
                        kg.schema().relation(r).label +
                        "'; inverse edges are rewired in lockstep");
  }

  PermutationReport report;
  report.degree_checksum_before = degree_checksum(kg);

  RngStream rng = RngStream::derive(seed, 0x58535750ULL /*"XSWP"*/);
  std::vector<Triple> triples = kg.triples();

  std::uint64_t old_inter = 0, old_total = 0, new_total = 0;

  for (RelId rel : relation_classes) {
    const RelId inv = kg.schema().relation(rel).inverse_of;
    const bool has_inverse = inv >= 0 && kg.relation_count(inv) > 0;
    if (has_inverse && kg.relation_count(inv) != kg.relation_count(rel))
      throw ConfigError("xswap: relation '" + kg.schema().relation(rel).label +
                        "' and its inverse have diverged");

    std::vector<std::size_t> slots;  // positions of this relation in `triples`
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t i = 0; i < triples.size(); ++i) {
      if (triples[i].rel == rel) {
        slots.push_back(i);
        edges.push_back({triples[i].head, triples[i].tail});
      }
    }
    const std::size_t m = edges.size();
    if (m < 2) continue;

    std::unordered_set<std::uint64_t> edge_set;
    auto key = [&](NodeId h, NodeId t) {
      return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(h)) << 32) |
             static_cast<std::uint32_t>(t);
    };
    for (const auto& [h, t] : edges) edge_set.insert(key(h, t));
    std::unordered_set<std::uint64_t> original = edge_set;

    const std::uint64_t attempts =
        static_cast<std::uint64_t>(attempts_factor * static_cast<double>(m));
    for (std::uint64_t k = 0; k < attempts; ++k) {
      ++report.attempts;
      const std::size_t i = static_cast<std::size_t>(rng.next_below(m));
      const std::size_t j = static_cast<std::size_t>(rng.next_below(m));
      if (i == j) continue;
      const auto [a, b] = edges[i];
      const auto [c, d] = edges[j];
      if (a == d || c == b) continue;  // self-loops
      if (edge_set.count(key(a, d)) || edge_set.count(key(c, b))) continue;
      edge_set.erase(key(a, b));
      edge_set.erase(key(c, d));
      edge_set.insert(key(a, d));
      edge_set.insert(key(c, b));
      edges[i] = {a, d};
      edges[j] = {c, b};
      ++report.accepted;
    }

    for (std::size_t s = 0; s < m; ++s) {
      triples[slots[s]].head = edges[s].first;
      triples[slots[s]].tail = edges[s].second;
    }
    if (has_inverse) {
      // regenerate the mirrored edges from scratch, keeping lockstep
      std::size_t next = 0;
      for (auto& t : triples)
        if (t.rel == inv) {
          t.head = edges[next].second;
          t.tail = edges[next].first;
          ++next;
        }
    }

    old_total += m;
    new_total += m;
    for (const auto& [h, t] : edges)
      if (original.count(key(h, t))) ++old_inter;
  }

  if (old_total + new_total > 0) {
    const double inter = static_cast<double>(old_inter);
    const double uni = static_cast<double>(old_total + new_total) - inter;
    report.edge_jaccard = uni > 0.0 ? inter / uni : 1.0;
  }

  KnowledgeGraph permuted(kg.schema(), kg.node_labels(), kg.node_types(), std::move(triples));
  report.degree_checksum_after = degree_checksum(permuted);
  return {std::move(permuted), report};
}

// Removes edges of `relation` until at most `threshold` remain, always
// deleting the edge whose endpoints have the largest combined total degree
// in the current graph (recomputed after every removal). Ties break on the
// smallest (head id, tail id). No other relation is touched.
inline KnowledgeGraph trim_by_degree(const KnowledgeGraph& kg, RelId relation, int threshold) {
  if (threshold < 0) throw ConfigError("trim: threshold must be >= 0");
  if (relation < 0 || static_cast<std::size_t>(relation) >= kg.num_relations())
    throw ConfigError("trim: relation absent from schema");

  std::int64_t remaining = kg.relation_count(relation);
  if (remaining <= threshold) return kg;

  std::vector<std::int64_t> degree(kg.num_nodes());
  for (NodeId n = 0; n < static_cast<NodeId>(kg.num_nodes()); ++n)
    degree[n] = kg.total_degree(n);

  struct HeapEntry {
    std::int64_t deg_sum;
    NodeId head, tail;
    bool operator<(const HeapEntry& o) const {
      if (deg_sum != o.deg_sum) return deg_sum < o.deg_sum;  // max-heap on degree
      if (head != o.head) return head > o.head;              // then smallest ids first
      return tail > o.tail;
    }
  };
  std::priority_queue<HeapEntry> heap;
  std::unordered_set<std::uint64_t> removed;
  auto key = [&](NodeId h, NodeId t) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(h)) << 32) |
           static_cast<std::uint32_t>(t);
  };
  for (const auto& t : kg.triples())
    if (t.rel == relation) heap.push({degree[t.head] + degree[t.tail], t.head, t.tail});

  while (remaining > threshold && !heap.empty()) {
    HeapEntry top = heap.top();
    heap.pop();
    if (removed.count(key(top.head, top.tail))) continue;
    const std::int64_t current = degree[top.head] + degree[top.tail];
    if (current != top.deg_sum) {  // stale; reinsert with the fresh key
      heap.push({current, top.head, top.tail});
      continue;
    }
    removed.insert(key(top.head, top.tail));
    degree[top.head] -= 1;
    degree[top.tail] -= 1;
    --remaining;
  }

  std::vector<Triple> kept;
  kept.reserve(kg.triples().size() - removed.size());
  for (const auto& t : kg.triples())
    if (!(t.rel == relation && removed.count(key(t.head, t.tail)))) kept.push_back(t);
  return KnowledgeGraph(kg.schema(), kg.node_labels(), kg.node_types(), std::move(kept));
}

// Drops triples whose relation satisfies the predicate; schema entries are
// retained so the relation ids stay stable.
template <class Pred>
inline KnowledgeGraph strip_relations(const KnowledgeGraph& kg, Pred&& predicate) {
  std::vector<Triple> kept;
  kept.reserve(kg.triples().size());
  for (const auto& t : kg.triples())
    if (!predicate(kg.schema().relation(t.rel))) kept.push_back(t);
  return KnowledgeGraph(kg.schema(), kg.node_labels(), kg.node_types(), std::move(kept));
}

inline KnowledgeGraph strip_inverse_relations(const KnowledgeGraph& kg) {
  return strip_relations(kg, [](const RelationDecl& r) { return r.is_inverse; });
}

}  // namespace rulewalk
