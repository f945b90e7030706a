#include "test_support.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lf_test {

namespace fs = std::filesystem;
using namespace labelforge;

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "labelforge-test-XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path data_dir() { return LABELFORGE_TEST_DATA_DIR; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

Document make_doc(std::string id, std::vector<std::pair<std::string, double>> concepts,
                  std::string venue, double citation, std::string title) {
  Document d;
  d.title = title.empty() ? "Title of " + id : std::move(title);
  d.id = std::move(id);
  d.venue = std::move(venue);
  d.year = 2020;
  for (auto& [term, rel] : concepts) d.concepts.push_back({term, rel});
  d.citation_score = citation;
  d.field_tag = "TEST";
  return d;
}

ClusteredCorpus make_corpus(const std::vector<std::pair<Document, std::string>>& docs) {
  std::vector<Document> documents;
  std::map<std::string, std::string> assignment;
  for (const auto& [doc, cid] : docs) {
    documents.push_back(doc);
    assignment[doc.id] = cid;
  }
  return ClusteredCorpus::build(std::move(documents), std::move(assignment));
}

std::map<std::string, std::map<std::string, double>> tfidf_oracle(const ClusteredCorpus& corpus,
                                                                   const CharacteristicsConfig& config) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& cid : corpus.cluster_ids()) counts[cid];
  for (const auto& doc : corpus.documents()) {
    for (const auto& c : doc.concepts) {
      if (c.relevance < config.relevance_threshold) continue;
      counts[corpus.cluster_of(doc.id)][c.term] += 1;
    }
  }
  const double n = static_cast<double>(counts.size());
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& [cid, terms] : counts) {
    out[cid];
    for (const auto& [term, tf] : terms) {
      double df = 0;
      for (const auto& [other, other_terms] : counts) {
        if (other_terms.count(term) != 0) df += 1;
      }
      const double idf = config.idf == IdfVariant::plain ? std::log(n / df)
                                                         : std::log((1.0 + n) / (1.0 + df)) + 1.0;
      out[cid][term] = static_cast<double>(tf) * idf;
    }
  }
  return out;
}

ClusteredCorpus random_small_corpus(Rng& rng) {
  const std::size_t n_clusters = 1 + rng.below(5);
  const std::size_t n_terms = 1 + rng.below(50);
  std::vector<std::pair<Document, std::string>> docs;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    const std::size_t n_docs = 1 + rng.below(6);
    for (std::size_t d = 0; d < n_docs; ++d) {
      std::vector<std::pair<std::string, double>> concepts;
      const std::size_t k = rng.below(8);
      std::set<std::size_t> used;
      for (std::size_t i = 0; i < k; ++i) {
        const auto t = rng.below(n_terms);
        if (!used.insert(t).second) continue;
        concepts.emplace_back("t" + std::to_string(t), static_cast<double>(rng.below(101)) / 100.0);
      }
      docs.emplace_back(make_doc("c" + std::to_string(c + 1) + "-d" + std::to_string(d + 1),
                                 std::move(concepts), "V" + std::to_string(rng.below(3)),
                                 static_cast<double>(rng.below(1000)) / 10.0),
                        "c" + std::to_string(c + 1));
    }
  }
  return make_corpus(docs);
}

std::string random_utf8(Rng& rng, std::size_t scalars) {
  static const char* const kMulti[] = {"\xC3\xA9", "\xCE\xB1", "\xE2\x82\xAC", "\xE6\xBC\xA2",
                                       "\xF0\x9F\x99\x82"};
  std::string out;
  for (std::size_t i = 0; i < scalars; ++i) {
    if (rng.below(4) == 0) {
      out += kMulti[rng.below(5)];
    } else {
      out += static_cast<char>(' ' + rng.below(95));
    }
  }
  return out;
}

LabelSet make_label_set(std::string run_id, const std::vector<std::string>& labels) {
  LabelSet s;
  s.run_id = std::move(run_id);
  for (std::size_t i = 0; i < labels.size(); ++i) s.labels["c" + std::to_string(i + 1)] = labels[i];
  return s;
}

}  // namespace lf_test
