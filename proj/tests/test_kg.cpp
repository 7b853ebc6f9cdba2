#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rulewalk/graphops.hpp"
#include "rulewalk/kg.hpp"
#include "test_util.hpp"

using namespace rulewalk;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path = (std::filesystem::temp_directory_path() /
            ("rulewalk_kg_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) +
             ".tsv"))
               .string();
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST(KgLoad, ThreeRowFile) {
  Schema schema = testutil::bio_schema();
  TempFile f("d1\tupregulates\tp1\np1\tinteracts\tp2\np2\tparticipates\tb1\n");
  KnowledgeGraph kg = KnowledgeGraph::load_triples(f.path, schema);
  EXPECT_EQ(kg.triples().size(), 3u);
  EXPECT_EQ(kg.num_nodes(), 4u);
  NodeId p1 = *kg.find_node("p1");
  ASSERT_EQ(kg.out_edges(p1).size(), 1u);
  EXPECT_EQ(kg.out_edges(p1)[0].dst, *kg.find_node("p2"));
  EXPECT_EQ(kg.node_type(*kg.find_node("d1")), *schema.find_node_type("Drug"));
}

TEST(KgLoad, DuplicateRowNamesTheRow) {
  Schema schema = testutil::bio_schema();
  TempFile f("d1\tupregulates\tp1\nd1\tdownregulates\tp1\nd1\tupregulates\tp1\n");
  try {
    KnowledgeGraph::load_triples(f.path, schema);
    FAIL() << "expected duplicate-triple error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(KgLoad, MalformedRowReportsLineNumber) {
  Schema schema = testutil::bio_schema();
  TempFile f("d1\tupregulates\tp1\nd2 upregulates p2\n");
  try {
    KnowledgeGraph::load_triples(f.path, schema);
    FAIL() << "expected malformed-row error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(KgLoad, UnknownRelationRejected) {
  Schema schema = testutil::bio_schema();
  TempFile f("d1\tbinds\tp1\n");
  EXPECT_THROW(KnowledgeGraph::load_triples(f.path, schema), ConfigError);
}

TEST(KgLoad, ConflictingNodeTypeRejected) {
  Schema schema = testutil::bio_schema();
  // x first appears as a Protein, then as a Drug head of upregulates
  TempFile f("d1\tupregulates\tx\nx\tupregulates\tp2\n");
  EXPECT_THROW(KnowledgeGraph::load_triples(f.path, schema), ConfigError);
}

TEST(KgLoad, RowOrderDoesNotChangeTheGraph) {
  Schema schema = testutil::bio_schema();
  TempFile a("d1\tupregulates\tp1\np1\tinteracts\tp2\np2\tparticipates\tb1\n");
  TempFile b("p2\tparticipates\tb1\nd1\tupregulates\tp1\np1\tinteracts\tp2\n");
  KnowledgeGraph ka = KnowledgeGraph::load_triples(a.path, schema);
  KnowledgeGraph kb = KnowledgeGraph::load_triples(b.path, schema);
  EXPECT_EQ(ka.label_triples_sorted(), kb.label_triples_sorted());
}

TEST(KgLoad, SelfLoopNeedsSchemaPermission) {
  Schema strict = testutil::bio_schema();
  TempFile f("p1\tinteracts\tp1\n");
  EXPECT_THROW(KnowledgeGraph::load_triples(f.path, strict), ConfigError);

  Schema loose;
  TypeId protein = loose.add_node_type("Protein");
  loose.add_relation({"interacts", protein, protein, false, -1, true});
  KnowledgeGraph kg = KnowledgeGraph::load_triples(f.path, loose);
  EXPECT_EQ(kg.triples().size(), 1u);
}

TEST(KgInverse, OneTripleBecomesTwo) {
  Schema schema = testutil::bio_schema();
  TempFile f("d1\tinduces\tb1\n");
  KnowledgeGraph kg = KnowledgeGraph::load_triples(f.path, schema);
  KnowledgeGraph with_inv = add_inverse_edges(kg);
  EXPECT_EQ(with_inv.triples().size(), 2u);
  RelId inv = with_inv.schema().relation_or_throw("_induces");
  EXPECT_TRUE(with_inv.schema().relation(inv).is_inverse);
  EXPECT_EQ(with_inv.schema().relation(inv).inverse_of,
            with_inv.schema().relation_or_throw("induces"));
  EXPECT_TRUE(with_inv.has_triple(*with_inv.find_node("b1"), inv, *with_inv.find_node("d1")));
}

TEST(KgInverse, ApplyingTwiceFails) {
  Schema schema = testutil::bio_schema();
  TempFile f("d1\tinduces\tb1\n");
  KnowledgeGraph kg = add_inverse_edges(KnowledgeGraph::load_triples(f.path, schema));
  EXPECT_THROW(add_inverse_edges(kg), ConfigError);
}

TEST(KgInverse, InvolutionOnSchema) {
  Schema schema = testutil::bio_schema();
  TempFile f("d1\tinduces\tb1\n");
  KnowledgeGraph kg = add_inverse_edges(KnowledgeGraph::load_triples(f.path, schema));
  for (RelId r = 0; r < static_cast<RelId>(kg.num_relations()); ++r) {
    const auto& decl = kg.schema().relation(r);
    ASSERT_GE(decl.inverse_of, 0);
    EXPECT_EQ(kg.schema().relation(decl.inverse_of).inverse_of, r);
    EXPECT_EQ(kg.schema().relation(decl.inverse_of).src_type, decl.dst_type);
    EXPECT_EQ(kg.schema().relation(decl.inverse_of).dst_type, decl.src_type);
  }
}

TEST(KgSplit, TenTriplesSplitSixTwoTwo) {
  RngStream rng(7);
  KnowledgeGraph kg = testutil::random_graph(rng, 12, 10, 1);
  SplitSet s = split_triples(kg, 0, 0.6, 0.2, 0.2, 42);
  EXPECT_EQ(s.train.size(), 6u);
  EXPECT_EQ(s.valid.size(), 2u);
  EXPECT_EQ(s.test.size(), 2u);
}

TEST(KgSplit, FloorRoundingRemainderToTrain) {
  // 1622 triples at 60/20/20 with floored valid/test
  RngStream rng(3);
  KnowledgeGraph kg = testutil::random_graph(rng, 90, 1622, 1);
  ASSERT_EQ(kg.triples().size(), 1622u);
  SplitSet s = split_triples(kg, 0, 0.6, 0.2, 0.2, 1);
  EXPECT_EQ(s.valid.size(), 324u);
  EXPECT_EQ(s.test.size(), 324u);
  EXPECT_EQ(s.train.size(), 974u);
  EXPECT_EQ(s.train.size() + s.valid.size() + s.test.size(), 1622u);
}

TEST(KgSplit, DeterministicAndPartition) {
  RngStream rng(11);
  KnowledgeGraph kg = testutil::random_graph(rng, 40, 200, 2);
  SplitSet a = split_triples(kg, 1, 0.6, 0.2, 0.2, 99);
  SplitSet b = split_triples(kg, 1, 0.6, 0.2, 0.2, 99);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.valid, b.valid);
  EXPECT_EQ(a.test, b.test);

  // parts are disjoint and reassemble the relation's triple multiset
  std::vector<Triple> joined = a.train;
  joined.insert(joined.end(), a.valid.begin(), a.valid.end());
  joined.insert(joined.end(), a.test.begin(), a.test.end());
  std::vector<Triple> pool = kg.triples_of_relation(1);
  std::sort(joined.begin(), joined.end());
  std::sort(pool.begin(), pool.end());
  EXPECT_EQ(joined, pool);
  for (std::size_t i = 1; i < joined.size(); ++i) EXPECT_FALSE(joined[i] == joined[i - 1]);
}

TEST(KgSplit, BadRatiosAndMissingRelation) {
  RngStream rng(5);
  KnowledgeGraph kg = testutil::random_graph(rng, 10, 20, 1);
  EXPECT_THROW(split_triples(kg, 0, 0.5, 0.2, 0.2, 1), ConfigError);
  EXPECT_THROW(split_triples(kg, 7, 0.6, 0.2, 0.2, 1), ConfigError);
}

TEST(KgReachability, DirectAndIsolatedCases) {
  Schema schema = testutil::bio_schema();
  TempFile f(
      "d1\tupregulates\tp1\n"
      "p1\tparticipates\tb1\n"
      "d1\tinduces\tb1\n"
      "d2\tinduces\tb1\n");
  KnowledgeGraph kg = KnowledgeGraph::load_triples(f.path, schema);
  RelId induces = schema.relation_or_throw("induces");
  NodeId d1 = *kg.find_node("d1"), d2 = *kg.find_node("d2"), b1 = *kg.find_node("b1");

  // d1 reaches b1 through p1 in 2 hops; d2 only via its own induces edge
  auto kept = filter_reachable(kg, {{d1, induces, b1}, {d2, induces, b1}}, 2);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].head, d1);

  // with max_len 1 the only route is the probed edge itself, so nothing survives
  EXPECT_TRUE(filter_reachable(kg, {{d1, induces, b1}}, 1).empty());
  EXPECT_TRUE(filter_reachable(kg, {}, 4).empty());
}

namespace {

// Brute-force oracle: enumerate every directed path from h of length
// <= max_len by DFS over edges, skipping the probed edge instance.
bool oracle_reachable(const KnowledgeGraph& kg, const Triple& probe, int max_len) {
  std::vector<NodeId> stack;
  bool found = false;
  auto dfs = [&](auto&& self, NodeId at, int depth) -> void {
    if (found) return;
    if (at == probe.tail && depth > 0) {
      found = true;
      return;
    }
    if (depth == max_len) return;
    for (const Edge& e : kg.out_edges(at)) {
      if (at == probe.head && e.rel == probe.rel && e.dst == probe.tail) continue;
      self(self, e.dst, depth + 1);
    }
  };
  dfs(dfs, probe.head, 0);
  return found;
}

}  // namespace

TEST(KgReachability, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed + 100);
    KnowledgeGraph kg = testutil::random_graph(rng, 20, 45, 2);
    std::vector<Triple> probes = kg.triples();
    probes.resize(std::min<std::size_t>(probes.size(), 15));
    for (int max_len = 1; max_len <= 3; ++max_len) {
      auto kept = filter_reachable(kg, probes, max_len);
      std::vector<Triple> expected;
      for (const auto& p : probes)
        if (oracle_reachable(kg, p, max_len)) expected.push_back(p);
      EXPECT_EQ(kept, expected) << "seed " << seed << " max_len " << max_len;
    }
  }
}

TEST(KgDegrees, OutDegreeDecomposesOverRelations) {
  RngStream rng(17);
  KnowledgeGraph kg = testutil::random_graph(rng, 30, 120, 3);
  for (NodeId n = 0; n < static_cast<NodeId>(kg.num_nodes()); ++n) {
    std::int64_t sum = 0;
    for (RelId r = 0; r < static_cast<RelId>(kg.num_relations()); ++r)
      sum += kg.out_degree(n, r);
    EXPECT_EQ(sum, kg.out_degree(n));
  }
}

TEST(KgIo, SaveLoadRoundTrip) {
  RngStream rng(23);
  KnowledgeGraph kg = testutil::random_graph(rng, 25, 80, 2);
  TempFile f("");
  kg.save_triples(f.path);
  KnowledgeGraph back = KnowledgeGraph::load_triples(f.path, kg.schema());
  EXPECT_EQ(kg.label_triples_sorted(), back.label_triples_sorted());
}
