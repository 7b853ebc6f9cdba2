#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "rulewalk/synthgen.hpp"

using namespace rulewalk;

namespace {

std::string triples_as_text(const KnowledgeGraph& kg) {
  std::ostringstream out;
  for (const auto& t : kg.triples())
    out << kg.node_label(t.head) << "\t" << kg.schema().relation(t.rel).label << "\t"
        << kg.node_label(t.tail) << "\n";
  return out.str();
}

}  // namespace

TEST(SynthGen, WitnessPathsExistAndMatchThePlantedRule) {
  SyntheticBenchmark bench = generate_synthetic({});
  ASSERT_EQ(bench.truth.pairs.size(), 60u);
  for (const auto& w : bench.truth.pairs) {
    for (const auto& e : w.edges) EXPECT_TRUE(bench.kg.has_triple(e.head, e.rel, e.tail));
    Metapath path;
    for (const auto& e : w.edges)
      path.steps.push_back({e.rel, bench.kg.node_type(e.head), bench.kg.node_type(e.tail)});
    auto matched = match_path(path, bench.rules);
    ASSERT_TRUE(matched.has_value());
    EXPECT_EQ(*matched, w.rule_id);
    EXPECT_TRUE(bench.kg.has_triple(w.drug, bench.kg.schema().relation_or_throw("induces"),
                                    w.process));
  }
}

TEST(SynthGen, DecoyRulesMatchNoWitness) {
  SyntheticBenchmark bench = generate_synthetic({});
  ASSERT_FALSE(bench.truth.decoy_rule_ids.empty());
  for (const auto& w : bench.truth.pairs) {
    Metapath path;
    for (const auto& e : w.edges)
      path.steps.push_back({e.rel, bench.kg.node_type(e.head), bench.kg.node_type(e.tail)});
    auto matched = match_path(path, bench.rules);
    for (int decoy : bench.truth.decoy_rule_ids) EXPECT_NE(*matched, decoy);
  }
}

TEST(SynthGen, SameSeedSameGraphBitwise) {
  SynthConfig cfg;
  cfg.seed = 17;
  SyntheticBenchmark a = generate_synthetic(cfg);
  SyntheticBenchmark b = generate_synthetic(cfg);
  EXPECT_EQ(triples_as_text(a.kg), triples_as_text(b.kg));
  EXPECT_EQ(a.splits.train, b.splits.train);
  EXPECT_EQ(a.splits.test, b.splits.test);

  SynthConfig other = cfg;
  other.seed = 18;
  EXPECT_NE(triples_as_text(generate_synthetic(other).kg), triples_as_text(a.kg));
}

TEST(SynthGen, PpiFractionKnob) {
  SynthConfig cfg;
  cfg.ppi_fraction = 0.9;
  SyntheticBenchmark bench = generate_synthetic(cfg);
  const RelId r_int = bench.kg.schema().relation_or_throw("interacts");
  const double frac = static_cast<double>(bench.kg.relation_count(r_int)) /
                      static_cast<double>(bench.kg.triples().size());
  EXPECT_NEAR(frac, 0.9, 0.02);
}

TEST(SynthGen, HubSkewProducesRightSkewedDegrees) {
  SyntheticBenchmark bench = generate_synthetic({});
  std::vector<std::int64_t> degrees;
  for (NodeId n = 0; n < static_cast<NodeId>(bench.kg.num_nodes()); ++n)
    degrees.push_back(bench.kg.total_degree(n));
  std::sort(degrees.begin(), degrees.end());
  const std::int64_t median = degrees[degrees.size() / 2];
  const std::int64_t max = degrees.back();
  EXPECT_GE(max, 10 * std::max<std::int64_t>(1, median))
      << "max " << max << " median " << median;
}

TEST(SynthGen, SplitsAreSixtyTwentyTwenty) {
  SyntheticBenchmark bench = generate_synthetic({});
  EXPECT_EQ(bench.splits.train.size(), 36u);
  EXPECT_EQ(bench.splits.valid.size(), 12u);
  EXPECT_EQ(bench.splits.test.size(), 12u);
}

TEST(SynthGen, AnswerHubsConcentratePlantedPairs) {
  SynthConfig cfg;
  cfg.answer_hubs = 5;
  SyntheticBenchmark bench = generate_synthetic(cfg);
  std::unordered_set<NodeId> answers;
  for (const auto& w : bench.truth.pairs) answers.insert(w.process);
  EXPECT_LE(answers.size(), 5u);
}

TEST(SynthGen, InfeasibleConfigsThrow) {
  SynthConfig tight;
  tight.num_proteins = 4;
  tight.num_processes = 8;
  tight.planted_pairs = 8;  // up to 8 distinct answers -> up to 16 chain proteins
  tight.num_drugs = 8;
  EXPECT_THROW(generate_synthetic(tight), ConfigError);

  SynthConfig bad;
  bad.ppi_fraction = 1.5;
  EXPECT_THROW(generate_synthetic(bad), ConfigError);

  SynthConfig impossible;
  impossible.num_drugs = 2;
  impossible.num_processes = 2;
  impossible.answer_hubs = 1;
  impossible.planted_pairs = 10;  // only 2 distinct (drug, process) combos
  EXPECT_THROW(generate_synthetic(impossible), ConfigError);
}
