#include "labelforge/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "labelforge/error.hpp"
#include "labelforge/util.hpp"

namespace labelforge {

using nlohmann::json;

void CharacteristicsConfig::validate() const {
  if (n_concepts < 1 || n_venues < 1 || n_papers < 1) {
    throw ValidationError("characteristic counts must be >= 1");
  }
  if (!(relevance_threshold >= 0.0 && relevance_threshold <= 1.0)) {
    throw ValidationError("relevance_threshold must lie in [0,1]");
  }
}

std::vector<std::string> ClusterCharacteristics::concept_terms() const {
  std::vector<std::string> out;
  for (const auto& c : top_concepts) out.push_back(c.term);
  return out;
}

std::vector<std::string> ClusterCharacteristics::venue_names() const {
  std::vector<std::string> out;
  for (const auto& v : top_venues) out.push_back(v.venue);
  return out;
}

std::vector<std::string> ClusterCharacteristics::paper_titles() const {
  std::vector<std::string> out;
  for (const auto& p : top_papers) out.push_back(p.title);
  return out;
}

double inverse_cluster_frequency(std::size_t n_clusters, std::size_t df, IdfVariant variant) {
  const auto n = static_cast<double>(n_clusters);
  const auto d = static_cast<double>(df);
  switch (variant) {
    case IdfVariant::plain:
      return std::log(n / d);
    case IdfVariant::smoothed:
      return std::log((1.0 + n) / (1.0 + d)) + 1.0;
  }
  return 0.0;
}

std::map<std::string, std::vector<ScoredConcept>> score_concepts_tfidf(
    const ClusteredCorpus& corpus, const CharacteristicsConfig& config) {
  config.validate();
  if (corpus.empty()) throw ValidationError("cannot score concepts of an empty corpus");

  std::map<std::string, std::unordered_map<std::string, std::size_t>> tf;
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& cid : corpus.cluster_ids()) tf[cid];
  for (const auto& doc : corpus.documents()) {
    auto& counts = tf[corpus.cluster_of(doc.id)];
    for (const auto& c : doc.concepts) {
      if (c.relevance < config.relevance_threshold) continue;
      if (counts[c.term]++ == 0) ++df[c.term];
    }
  }

  const std::size_t n_clusters = corpus.cluster_ids().size();
  std::map<std::string, std::vector<ScoredConcept>> out;
  for (const auto& [cid, counts] : tf) {
    auto& ranked = out[cid];
    ranked.reserve(counts.size());
    for (const auto& [term, count] : counts) {
      const double idf = inverse_cluster_frequency(n_clusters, df.at(term), config.idf);
      ranked.push_back({term, static_cast<double>(count) * idf, count});
    }
    std::sort(ranked.begin(), ranked.end(), [](const ScoredConcept& a, const ScoredConcept& b) {
      if (a.tfidf != b.tfidf) return a.tfidf > b.tfidf;
      if (a.tf != b.tf) return a.tf > b.tf;
      return a.term < b.term;
    });
  }
  return out;
}

std::vector<ClusterCharacteristics> extract_characteristics(const ClusteredCorpus& corpus,
                                                            const CharacteristicsConfig& config) {
  auto ranked = score_concepts_tfidf(corpus, config);
  std::vector<ClusterCharacteristics> out;
  out.reserve(corpus.cluster_ids().size());

  for (const auto& cid : corpus.cluster_ids()) {
    ClusterCharacteristics chars;
    chars.cluster_id = cid;
    auto& concepts = ranked.at(cid);
    // Terms found in every cluster score zero under plain IDF; they only fill
    // the list when nothing distinctive survived the threshold.
    if (!concepts.empty() && concepts.front().tfidf > 0.0) {
      std::erase_if(concepts, [](const ScoredConcept& s) { return s.tfidf <= 0.0; });
    }
    if (concepts.size() > config.n_concepts) concepts.resize(config.n_concepts);
    chars.top_concepts = std::move(concepts);

    const auto members = corpus.members(cid);

    std::map<std::string, std::size_t> venue_counts;
    for (const auto& doc : members) {
      if (!doc.venue.empty()) ++venue_counts[doc.venue];
    }
    for (const auto& [venue, count] : venue_counts) chars.top_venues.push_back({venue, count});
    std::stable_sort(chars.top_venues.begin(), chars.top_venues.end(),
                     [](const VenueCount& a, const VenueCount& b) { return a.count > b.count; });
    if (chars.top_venues.size() > config.n_venues) chars.top_venues.resize(config.n_venues);

    std::vector<const Document*> by_citation;
    for (const auto& doc : members) by_citation.push_back(&doc);
    std::sort(by_citation.begin(), by_citation.end(), [](const Document* a, const Document* b) {
      if (a->citation_score != b->citation_score) return a->citation_score > b->citation_score;
      return natural_less(a->id, b->id);
    });
    std::set<std::string> seen_titles;
    for (const Document* doc : by_citation) {
      if (chars.top_papers.size() >= config.n_papers) break;
      if (!seen_titles.insert(doc->title).second) continue;
      chars.top_papers.push_back({doc->title, doc->citation_score});
    }
    out.push_back(std::move(chars));
  }
  return out;
}

std::string render_characteristic_label(const ClusterCharacteristics& chars) {
  if (chars.top_concepts.empty()) {
    throw ValidationError("cluster '" + chars.cluster_id +
                          "' has no concepts and cannot receive a characteristic label");
  }
  return join(chars.concept_terms(), "; ");
}

std::string summary_sentence(const ClusterCharacteristics& chars) {
  std::string out = "This cluster of scientific documents covers: " +
                    join(chars.concept_terms(), ", ") + ".";
  if (!chars.top_venues.empty()) {
    out += " Representative venues: " + join(chars.venue_names(), ", ") + ".";
  }
  if (!chars.top_papers.empty()) {
    out += " Representative papers: " + join(chars.paper_titles(), ", ") + ".";
  }
  return out;
}

const ClusterCharacteristics& find_characteristics(const std::vector<ClusterCharacteristics>& all,
                                                   const std::string& cluster_id) {
  for (const auto& c : all) {
    if (c.cluster_id == cluster_id) return c;
  }
  throw ValidationError("no characteristics for cluster '" + cluster_id + "'");
}

void to_json(json& j, const ClusterCharacteristics& c) {
  json concepts = json::array();
  for (const auto& s : c.top_concepts) {
    concepts.push_back({{"term", s.term}, {"tfidf", s.tfidf}, {"tf", s.tf}});
  }
  json venues = json::array();
  for (const auto& v : c.top_venues) venues.push_back({{"venue", v.venue}, {"count", v.count}});
  json papers = json::array();
  for (const auto& p : c.top_papers) {
    papers.push_back({{"title", p.title}, {"citation_score", p.citation_score}});
  }
  j = json{{"cluster_id", c.cluster_id},
           {"top_concepts", std::move(concepts)},
           {"top_venues", std::move(venues)},
           {"top_papers", std::move(papers)}};
}

void from_json(const json& j, ClusterCharacteristics& c) {
  c = ClusterCharacteristics{};
  c.cluster_id = j.at("cluster_id").get<std::string>();
  for (const auto& s : j.at("top_concepts")) {
    c.top_concepts.push_back(
        {s.at("term").get<std::string>(), s.at("tfidf").get<double>(), s.value("tf", std::size_t{0})});
  }
  for (const auto& v : j.at("top_venues")) {
    c.top_venues.push_back({v.at("venue").get<std::string>(), v.at("count").get<std::size_t>()});
  }
  for (const auto& p : j.at("top_papers")) {
    c.top_papers.push_back({p.at("title").get<std::string>(), p.at("citation_score").get<double>()});
  }
}

void to_json(json& j, const CharacteristicsConfig& c) {
  j = json{{"n_concepts", c.n_concepts},
           {"n_venues", c.n_venues},
           {"n_papers", c.n_papers},
           {"relevance_threshold", c.relevance_threshold},
           {"idf", c.idf == IdfVariant::plain ? "plain" : "smoothed"}};
}

void from_json(const json& j, CharacteristicsConfig& c) {
  c = CharacteristicsConfig{};
  c.n_concepts = j.value("n_concepts", c.n_concepts);
  c.n_venues = j.value("n_venues", c.n_venues);
  c.n_papers = j.value("n_papers", c.n_papers);
  c.relevance_threshold = j.value("relevance_threshold", c.relevance_threshold);
  const auto idf = j.value("idf", std::string("plain"));
  if (idf == "plain") {
    c.idf = IdfVariant::plain;
  } else if (idf == "smoothed") {
    c.idf = IdfVariant::smoothed;
  } else {
    throw ValidationError("unknown idf variant '" + idf + "'");
  }
  c.validate();
}

json characteristics_to_json(const std::vector<ClusterCharacteristics>& all) {
  json out = json::object();
  for (const auto& c : all) out[c.cluster_id] = c;
  return out;
}

std::vector<ClusterCharacteristics> characteristics_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("characteristics JSON must be an object keyed by cluster id");
  std::vector<ClusterCharacteristics> out;
  for (const auto& [key, value] : j.items()) {
    auto c = value.get<ClusterCharacteristics>();
    if (c.cluster_id != key) {
      throw ParseError("characteristics key '" + key + "' does not match cluster_id '" +
                       c.cluster_id + "'");
    }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return natural_less(a.cluster_id, b.cluster_id);
  });
  return out;
}

void save_characteristics(const std::filesystem::path& path,
                          const std::vector<ClusterCharacteristics>& all) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << characteristics_to_json(all).dump(2) << '\n';
}

std::vector<ClusterCharacteristics> load_characteristics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return characteristics_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace labelforge
