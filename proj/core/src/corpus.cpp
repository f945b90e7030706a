#include "labelforge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/error.hpp"
#include "labelforge/util.hpp"

namespace labelforge {

using nlohmann::json;

namespace {

void check_document(const Document& doc) {
  if (doc.id.empty()) throw ValidationError("document with empty id");
  if (doc.title.empty()) throw ValidationError("document '" + doc.id + "' has an empty title");
  if (!(doc.citation_score >= 0.0) || !std::isfinite(doc.citation_score)) {
    throw ValidationError("document '" + doc.id + "' has a negative or non-finite citation_score");
  }
  for (const auto& c : doc.concepts) {
    if (c.term.empty()) throw ValidationError("document '" + doc.id + "' has an empty concept term");
    if (!(c.relevance >= 0.0 && c.relevance <= 1.0)) {
      throw ValidationError("document '" + doc.id + "' concept '" + c.term +
                            "' has relevance outside [0,1]");
    }
  }
}

template <typename T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key '") + key + "'");
  return it->get<T>();
}

}  // namespace

void to_json(json& j, const Document& doc) {
  json concepts = json::array();
  for (const auto& c : doc.concepts) {
    concepts.push_back({{"term", c.term}, {"relevance", c.relevance}});
  }
  j = json{{"id", doc.id},
           {"title", doc.title},
           {"abstract", doc.abstract ? json(*doc.abstract) : json(nullptr)},
           {"venue", doc.venue},
           {"year", doc.year},
           {"concepts", std::move(concepts)},
           {"citation_score", doc.citation_score},
           {"field_tag", doc.field_tag}};
}

void from_json(const json& j, Document& doc) {
  if (!j.is_object()) throw ParseError("document record is not a JSON object");
  doc.id = required<std::string>(j, "id");
  doc.title = required<std::string>(j, "title");
  doc.abstract.reset();
  if (auto it = j.find("abstract"); it != j.end() && !it->is_null()) {
    doc.abstract = it->get<std::string>();
  }
  doc.venue = required<std::string>(j, "venue");
  doc.year = required<int>(j, "year");
  doc.citation_score = required<double>(j, "citation_score");
  doc.field_tag = j.value("field_tag", std::string{});
  doc.concepts.clear();
  const auto& concepts = j.at("concepts");
  if (!concepts.is_array()) throw ParseError("'concepts' must be an array");
  for (const auto& c : concepts) {
    doc.concepts.push_back({required<std::string>(c, "term"), required<double>(c, "relevance")});
  }
}

ClusteredCorpus ClusteredCorpus::build(std::vector<Document> documents,
                                       std::map<std::string, std::string> assignment) {
  ClusteredCorpus corpus;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    check_document(documents[i]);
    auto [it, inserted] = corpus.index_.emplace(documents[i].id, i);
    if (!inserted) throw ValidationError("duplicate document id '" + documents[i].id + "'");
    if (!assignment.contains(documents[i].id)) {
      throw ValidationError("document '" + documents[i].id + "' has no cluster assignment");
    }
  }
  for (const auto& [doc_id, cluster_id] : assignment) {
    auto it = corpus.index_.find(doc_id);
    if (it == corpus.index_.end()) {
      throw ValidationError("assignment references unknown document '" + doc_id + "'");
    }
    if (cluster_id.empty()) throw ValidationError("document '" + doc_id + "' has an empty cluster id");
  }
  for (std::size_t i = 0; i < documents.size(); ++i) {
    corpus.members_[assignment.at(documents[i].id)].push_back(i);
  }
  for (const auto& [cluster_id, members] : corpus.members_) {
    corpus.cluster_ids_.push_back(cluster_id);
  }
  std::sort(corpus.cluster_ids_.begin(), corpus.cluster_ids_.end(),
            [](const std::string& a, const std::string& b) { return natural_less(a, b); });
  corpus.documents_ = std::move(documents);
  corpus.assignment_ = std::move(assignment);
  return corpus;
}

bool ClusteredCorpus::has_cluster(const std::string& cluster_id) const {
  return members_.contains(cluster_id);
}

const std::string& ClusteredCorpus::cluster_of(const std::string& document_id) const {
  auto it = assignment_.find(document_id);
  if (it == assignment_.end()) throw ValidationError("unknown document id '" + document_id + "'");
  return it->second;
}

std::vector<Document> ClusteredCorpus::members(const std::string& cluster_id) const {
  auto it = members_.find(cluster_id);
  if (it == members_.end()) throw ValidationError("unknown cluster id '" + cluster_id + "'");
  std::vector<Document> out;
  out.reserve(it->second.size());
  for (std::size_t i : it->second) out.push_back(documents_[i]);
  return out;
}

std::size_t ClusteredCorpus::cluster_size(const std::string& cluster_id) const {
  auto it = members_.find(cluster_id);
  if (it == members_.end()) throw ValidationError("unknown cluster id '" + cluster_id + "'");
  return it->second.size();
}

ClusteredCorpus parse_corpus(std::istream& documents, std::istream* assignments,
                             IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  rep = IngestReport{};

  std::vector<Document> docs;
  std::vector<std::optional<std::string>> inline_cluster;
  std::map<std::string, std::size_t> first_line;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(documents, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++rep.lines_read;
    Document doc;
    std::optional<std::string> cluster;
    try {
      const json j = json::parse(line);
      doc = j.get<Document>();
      if (auto it = j.find("cluster_id"); it != j.end() && !it->is_null()) {
        cluster = it->is_string() ? it->get<std::string>() : it->dump();
      }
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    auto [it, inserted] = first_line.emplace(doc.id, line_no);
    if (!inserted) {
      throw ParseError("duplicate document id '" + doc.id + "' (first seen on line " +
                           std::to_string(it->second) + ")",
                       line_no);
    }
    docs.push_back(std::move(doc));
    inline_cluster.push_back(std::move(cluster));
  }

  std::map<std::string, std::string> assignment;
  if (assignments != nullptr) {
    std::size_t a_line = 0;
    while (std::getline(*assignments, line)) {
      ++a_line;
      if (trim(line).empty()) continue;
      try {
        const json j = json::parse(line);
        const auto id = required<std::string>(j, "id");
        const auto& cj = j.at("cluster_id");
        auto cluster = cj.is_string() ? cj.get<std::string>() : cj.dump();
        if (!assignment.emplace(id, cluster).second) {
          throw ParseError("duplicate assignment for document '" + id + "'");
        }
      } catch (const ParseError& e) {
        throw ParseError(std::string("assignments: ") + e.what(), a_line);
      } catch (const json::exception& e) {
        throw ParseError(std::string("assignments: malformed JSON: ") + e.what(), a_line);
      }
    }
  } else {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (!inline_cluster[i]) {
        throw ValidationError("document '" + docs[i].id + "' (line " +
                              std::to_string(first_line.at(docs[i].id)) +
                              ") has no cluster assignment");
      }
      assignment.emplace(docs[i].id, *inline_cluster[i]);
    }
  }

  std::vector<Document> kept;
  kept.reserve(docs.size());
  for (auto& doc : docs) {
    auto it = assignment.find(doc.id);
    if (it != assignment.end() && it->second == kNoiseClusterId) {
      ++rep.noise_dropped;
      assignment.erase(it);
      continue;
    }
    kept.push_back(std::move(doc));
  }
  if (rep.noise_dropped > 0) {
    spdlog::info("dropped {} noise documents (cluster id {})", rep.noise_dropped, kNoiseClusterId);
  }

  auto corpus = ClusteredCorpus::build(std::move(kept), std::move(assignment));
  for (const auto& id : corpus.cluster_ids()) {
    if (corpus.cluster_size(id) < kSmallClusterWarning) rep.small_clusters.push_back(id);
  }
  if (!rep.small_clusters.empty()) {
    spdlog::warn("{} clusters have fewer than {} documents", rep.small_clusters.size(),
                 kSmallClusterWarning);
  }
  return corpus;
}

ClusteredCorpus load_corpus(const std::filesystem::path& path,
                            const std::optional<std::filesystem::path>& assignments,
                            IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file '" + path.string() + "'");
  if (assignments) {
    std::ifstream ain(*assignments);
    if (!ain) throw ParseError("cannot open assignments file '" + assignments->string() + "'");
    return parse_corpus(in, &ain, report);
  }
  return parse_corpus(in, nullptr, report);
}

void write_corpus(std::ostream& out, const ClusteredCorpus& corpus) {
  for (const auto& doc : corpus.documents()) {
    json j = doc;
    j["cluster_id"] = corpus.cluster_of(doc.id);
    out << j.dump() << '\n';
  }
}

void save_corpus(const std::filesystem::path& path, const ClusteredCorpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file '" + path.string() + "'");
  write_corpus(out, corpus);
}

}  // namespace labelforge
