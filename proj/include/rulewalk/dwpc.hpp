#pragma once
// Degree-weighted path counts.
//
// For a (source, target) pair and a metapath, every conforming simple path
// contributes (product over its edges of out-degree(head, rel) *
// in-degree(tail, rel)) ^ (-damping); the pair's DWPC is the sum over
// paths, and its score the sum over metapaths. Damping 0 reduces to the
// raw path count.

#include <cmath>
#include <string>
#include <vector>

#include "rulewalk/kg.hpp"
#include "rulewalk/rules.hpp"

namespace rulewalk {

struct ScoredPair {
  NodeId source = -1;
  NodeId target = -1;
  double score = 0.0;
};

inline double dwpc_single(const KnowledgeGraph& kg, NodeId source, NodeId target,
                          const Metapath& metapath, double damping) {
  if (metapath.empty()) return 0.0;
  if (kg.node_type(source) != metapath.steps.front().src_type ||
      kg.node_type(target) != metapath.steps.back().dst_type)
    throw ConfigError("dwpc: pair (" + kg.node_label(source) + ", " + kg.node_label(target) +
                      ") is type-incompatible with the metapath");

  double total = 0.0;
  std::vector<NodeId> visited{source};

  auto walk = [&](auto&& self, NodeId at, std::size_t depth, double degree_product) -> void {
    if (depth == metapath.steps.size()) {
      if (at == target) total += std::pow(degree_product, -damping);
      return;
    }
    const RelId rel = metapath.steps[depth].rel;
    for (const Edge& e : kg.out_edges(at)) {
      if (e.rel != rel) continue;
      // simple paths only
      bool seen = false;
      for (NodeId v : visited)
        if (v == e.dst) {
          seen = true;
          break;
        }
      if (seen) continue;
      const double step_degree = static_cast<double>(kg.out_degree(at, rel)) *
                                 static_cast<double>(kg.in_degree(e.dst, rel));
      visited.push_back(e.dst);
      self(self, e.dst, depth + 1, degree_product * step_degree);
      visited.pop_back();
    }
  };
  walk(walk, source, 0, 1.0);
  return total;
}

// Pair score = sum of DWPC over the given metapaths; output sorted by
// score descending, ties by (source, target) id.
inline std::vector<ScoredPair> dwpc_rank(const KnowledgeGraph& kg,
                                         const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                         const std::vector<Metapath>& metapaths,
                                         double damping) {
  if (damping < 0.0) throw ConfigError("dwpc: damping must be >= 0");
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  for (const auto& [s, t] : pairs) {
    ScoredPair sp;
    sp.source = s;
    sp.target = t;
    for (const auto& mp : metapaths) sp.score += dwpc_single(kg, s, t, mp, damping);
    out.push_back(sp);
  }
  std::sort(out.begin(), out.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.source != b.source) return a.source < b.source;
    return a.target < b.target;
  });
  return out;
}

}  // namespace rulewalk
