#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "labelforge/characteristics.hpp"
#include "labelforge/error.hpp"
#include "test_support.hpp"

using namespace labelforge;
using lf_test::make_corpus;
using lf_test::make_doc;

namespace {

// Cluster A: graphene x5, battery x2; cluster B: battery x3, polymer x4.
// One occurrence per document.
ClusteredCorpus graphene_corpus() {
  std::vector<std::pair<Document, std::string>> docs;
  int id = 0;
  auto add = [&](const std::string& cluster, const std::vector<std::string>& terms) {
    std::vector<std::pair<std::string, double>> concepts;
    for (const auto& t : terms) concepts.emplace_back(t, 0.9);
    docs.emplace_back(make_doc("d" + std::to_string(++id), concepts), cluster);
  };
  for (int i = 0; i < 5; ++i) add("A", i < 2 ? std::vector<std::string>{"graphene", "battery"}
                                             : std::vector<std::string>{"graphene"});
  for (int i = 0; i < 4; ++i) add("B", i < 3 ? std::vector<std::string>{"battery", "polymer"}
                                             : std::vector<std::string>{"polymer"});
  return make_corpus(docs);
}

double score_of(const std::vector<ScoredConcept>& ranking, const std::string& term) {
  for (const auto& s : ranking) {
    if (s.term == term) return s.tfidf;
  }
  return NAN;
}

}  // namespace

TEST(TfIdf, GrapheneExample) {
  const auto scores = score_concepts_tfidf(graphene_corpus(), {});
  const auto& a = scores.at("A");
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a.front().term, "graphene");
  EXPECT_NEAR(a.front().tfidf, 5.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(a.front().tfidf, 3.466, 5e-4);
  EXPECT_EQ(score_of(a, "battery"), 0.0);
  EXPECT_EQ(score_of(scores.at("B"), "battery"), 0.0);
  EXPECT_NEAR(score_of(scores.at("B"), "polymer"), 4.0 * std::log(2.0), 1e-12);
}

TEST(TfIdf, TermInEveryClusterScoresZero) {
  const auto corpus = make_corpus({{make_doc("a", {{"common", 0.9}, {"x", 0.9}}), "c1"},
                                   {make_doc("b", {{"common", 0.9}}), "c2"},
                                   {make_doc("c", {{"common", 0.9}}), "c3"}});
  const auto scores = score_concepts_tfidf(corpus, {});
  for (const auto& [cid, ranking] : scores) EXPECT_EQ(score_of(ranking, "common"), 0.0) << cid;
}

TEST(TfIdf, AllBelowThresholdGivesEmptyRankings) {
  const auto corpus = make_corpus({{make_doc("a", {{"x", 0.1}}), "c1"}, {make_doc("b", {{"y", 0.49}}), "c2"}});
  const auto scores = score_concepts_tfidf(corpus, {});
  EXPECT_TRUE(scores.at("c1").empty());
  EXPECT_TRUE(scores.at("c2").empty());
}

TEST(TfIdf, ThresholdIsInclusive) {
  const auto corpus = make_corpus({{make_doc("a", {{"x", 0.5}}), "c1"}, {make_doc("b", {{"y", 0.5}}), "c2"}});
  EXPECT_EQ(score_concepts_tfidf(corpus, {}).at("c1").size(), 1u);
}

TEST(TfIdf, TiesBreakByTfThenTerm) {
  // Every term is in both clusters, so all scores are zero.
  std::vector<std::pair<std::string, double>> a1{{"b", 0.9}, {"a", 0.9}, {"c", 0.9}};
  std::vector<std::pair<std::string, double>> a2{{"c", 0.9}};
  const auto corpus = make_corpus({{make_doc("1", a1), "c1"}, {make_doc("2", a2), "c1"},
                                   {make_doc("3", {{"a", 0.9}, {"b", 0.9}, {"c", 0.9}}), "c2"}});
  const auto r = score_concepts_tfidf(corpus, {}).at("c1");
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].term, "c");
  EXPECT_EQ(r[1].term, "a");
  EXPECT_EQ(r[2].term, "b");
}

TEST(TfIdf, SmoothedVariant) {
  CharacteristicsConfig cfg;
  cfg.idf = IdfVariant::smoothed;
  const auto scores = score_concepts_tfidf(graphene_corpus(), cfg);
  EXPECT_NEAR(score_of(scores.at("A"), "battery"), 2.0 * (std::log(3.0 / 3.0) + 1.0), 1e-12);
  EXPECT_NEAR(score_of(scores.at("A"), "graphene"), 5.0 * (std::log(3.0 / 2.0) + 1.0), 1e-12);
}

TEST(TfIdf, MatchesBruteForceOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto corpus = lf_test::random_small_corpus(rng);
    CharacteristicsConfig cfg;
    cfg.relevance_threshold = static_cast<double>(rng.below(11)) / 10.0;
    cfg.idf = rng.below(2) == 0 ? IdfVariant::plain : IdfVariant::smoothed;
    const auto got = score_concepts_tfidf(corpus, cfg);
    const auto want = lf_test::tfidf_oracle(corpus, cfg);
    ASSERT_EQ(got.size(), want.size());
    for (const auto& [cid, terms] : want) {
      ASSERT_EQ(got.at(cid).size(), terms.size());
      for (const auto& s : got.at(cid)) EXPECT_NEAR(s.tfidf, terms.at(s.term), 1e-12);
    }
  }
}

TEST(TfIdf, MonotoneInOneClusterWithDfFixed) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto corpus = lf_test::random_small_corpus(rng);
    const auto before = score_concepts_tfidf(corpus, {});
    const auto& cid = corpus.cluster_ids().front();
    if (before.at(cid).empty()) continue;
    const auto term = before.at(cid).front().term;
    auto docs = corpus.documents();
    auto assignment = corpus.assignment();
    auto extra = make_doc("extra", {{term, 1.0}});
    docs.push_back(extra);
    assignment["extra"] = cid;
    const auto after = score_concepts_tfidf(ClusteredCorpus::build(docs, assignment), {});
    EXPECT_GE(score_of(after.at(cid), term), score_of(before.at(cid), term));
  }
}

TEST(Extract, TruncationMatchesFullRanking) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto corpus = lf_test::random_small_corpus(rng);
    CharacteristicsConfig cfg;
    cfg.n_concepts = 1 + rng.below(6);
    const auto full = score_concepts_tfidf(corpus, cfg);
    for (const auto& c : extract_characteristics(corpus, cfg)) {
      auto ranking = full.at(c.cluster_id);
      if (!ranking.empty() && ranking.front().tfidf > 0.0) {
        std::erase_if(ranking, [](const ScoredConcept& s) { return s.tfidf <= 0.0; });
      }
      const auto k = std::min(cfg.n_concepts, ranking.size());
      EXPECT_EQ(c.top_concepts, std::vector<ScoredConcept>(ranking.begin(), ranking.begin() + k));
    }
  }
}

TEST(Extract, DominantTermTopsEachSyntheticCluster) {
  SyntheticSpec spec;
  spec.n_clusters = 3;
  spec.docs_per_cluster = 5;
  const auto g = synthesize_corpus(spec);
  for (const auto& c : extract_characteristics(g.corpus, {})) {
    ASSERT_FALSE(c.top_concepts.empty());
    EXPECT_EQ(c.top_concepts.front().term, g.vocabulary.at(c.cluster_id).front()) << c.cluster_id;
  }
}

TEST(Extract, SharedTermsNeverInTopConcepts) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = synthesize_corpus({seed, 6, 8, 10, 5});
    for (const auto& c : extract_characteristics(g.corpus, {})) {
      for (const auto& s : c.top_concepts) {
        EXPECT_EQ(std::count(g.shared_terms.begin(), g.shared_terms.end(), s.term), 0) << s.term;
      }
    }
  }
}

TEST(Extract, VenueListShorterThanCap) {
  const auto corpus = make_corpus({{make_doc("a", {{"x", 1}}, "V1"), "c1"},
                                   {make_doc("b", {{"x", 1}}, "V2"), "c1"},
                                   {make_doc("c", {{"x", 1}}, "V1"), "c1"}});
  const auto chars = extract_characteristics(corpus, {});
  ASSERT_EQ(chars[0].top_venues.size(), 2u);
  EXPECT_EQ(chars[0].top_venues[0], (VenueCount{"V1", 2}));
  EXPECT_EQ(chars[0].top_venues[1], (VenueCount{"V2", 1}));
}

TEST(Extract, VenueTiesLexicographic) {
  const auto corpus = make_corpus({{make_doc("a", {{"x", 1}}, "Zeta"), "c1"},
                                   {make_doc("b", {{"x", 1}}, "Alpha"), "c1"}});
  EXPECT_EQ(extract_characteristics(corpus, {})[0].venue_names(),
            (std::vector<std::string>{"Alpha", "Zeta"}));
}

TEST(Extract, PapersByCitationThenId) {
  const auto corpus = make_corpus({{make_doc("d10", {{"x", 1}}, "V", 2.0, "Ten"), "c1"},
                                   {make_doc("d2", {{"x", 1}}, "V", 2.0, "Two"), "c1"},
                                   {make_doc("d3", {{"x", 1}}, "V", 9.0, "Three"), "c1"},
                                   {make_doc("d4", {{"x", 1}}, "V", 0.5, "Four"), "c1"}});
  EXPECT_EQ(extract_characteristics(corpus, {})[0].paper_titles(),
            (std::vector<std::string>{"Three", "Two", "Ten"}));
}

TEST(Extract, NoDuplicatesWithinLists) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    for (const auto& c : extract_characteristics(lf_test::random_small_corpus(rng), {})) {
      auto terms = c.concept_terms();
      std::sort(terms.begin(), terms.end());
      EXPECT_EQ(std::adjacent_find(terms.begin(), terms.end()), terms.end());
      auto venues = c.venue_names();
      std::sort(venues.begin(), venues.end());
      EXPECT_EQ(std::adjacent_find(venues.begin(), venues.end()), venues.end());
      for (std::size_t i = 1; i < c.top_concepts.size(); ++i) {
        EXPECT_GE(c.top_concepts[i - 1].tfidf, c.top_concepts[i].tfidf);
      }
      for (std::size_t i = 1; i < c.top_papers.size(); ++i) {
        EXPECT_GE(c.top_papers[i - 1].citation_score, c.top_papers[i].citation_score);
      }
    }
  }
}

TEST(Extract, Table1AstrophysicsFixture) {
  const auto corpus = load_corpus(lf_test::data_dir() / "fixtures" / "astro_table1.jsonl");
  const auto chars = extract_characteristics(corpus, {});
  const std::vector<std::string> expected{"Solar wind",   "magnetosphere", "interplanetary magnetic",
                                          "magnetic field", "auroral",     "plasma",
                                          "magnetopause", "ion",           "substorm",
                                          "spacecraft"};
  const auto& c1 = find_characteristics(chars, "1");
  const auto terms = c1.concept_terms();
  ASSERT_GE(terms.size(), expected.size());
  EXPECT_EQ(std::vector<std::string>(terms.begin(), terms.begin() + 10), expected);
  const auto label = render_characteristic_label(c1);
  EXPECT_EQ(label.rfind("Solar wind; magnetosphere; interplanetary magnetic; ", 0), 0u) << label;
}

TEST(CharacteristicLabel, JoinsWithSemicolons) {
  ClusterCharacteristics c;
  c.top_concepts = {{"a", 3, 1}, {"b", 2, 1}, {"c", 1, 1}};
  EXPECT_EQ(render_characteristic_label(c), "a; b; c");
}

TEST(CharacteristicLabel, TwelveTermsElevenSeparators) {
  ClusterCharacteristics c;
  for (int i = 0; i < 12; ++i) c.top_concepts.push_back({"t" + std::to_string(i), 1.0, 1});
  const auto label = render_characteristic_label(c);
  std::size_t n = 0;
  for (std::size_t pos = label.find("; "); pos != std::string::npos; pos = label.find("; ", pos + 1)) ++n;
  EXPECT_EQ(n, 11u);
}

TEST(CharacteristicLabel, EmptyConceptsThrows) {
  ClusterCharacteristics c;
  c.cluster_id = "c9";
  EXPECT_THROW(render_characteristic_label(c), ValidationError);
}

TEST(SummarySentence, ContainsAllLiterals) {
  ClusterCharacteristics c;
  c.top_concepts = {{"x", 1, 1}};
  c.top_venues = {{"V", 1}};
  c.top_papers = {{"T", 1}};
  const auto s = summary_sentence(c);
  EXPECT_EQ(s, "This cluster of scientific documents covers: x. Representative venues: V. "
               "Representative papers: T.");
  EXPECT_EQ(summary_sentence(c), s);
}

TEST(SummarySentence, OmitsEmptyClausesGolden) {
  ClusterCharacteristics c;
  c.top_concepts = {{"Solar wind", 2, 1}, {"magnetosphere", 1, 1}};
  auto golden = lf_test::read_file(lf_test::data_dir() / "golden" / "summary_no_venues.txt");
  golden.pop_back();
  EXPECT_EQ(summary_sentence(c), golden);
}

TEST(CharacteristicsJson, RoundTripKeyedByCluster) {
  const auto g = synthesize_corpus({4, 12, 4, 6, 2});
  const auto chars = extract_characteristics(g.corpus, {});
  const auto j = characteristics_to_json(chars);
  EXPECT_TRUE(j.contains("c10"));
  EXPECT_EQ(characteristics_from_json(j), chars);
  lf_test::TempDir tmp;
  save_characteristics(tmp / "chars.json", chars);
  EXPECT_EQ(load_characteristics(tmp / "chars.json"), chars);
}

TEST(CharacteristicsConfig, RejectsZeroCounts) {
  CharacteristicsConfig cfg;
  cfg.n_venues = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.relevance_threshold = 1.5;
  EXPECT_THROW(cfg.validate(), ValidationError);
}
