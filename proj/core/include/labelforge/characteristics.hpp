#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "labelforge/corpus.hpp"

namespace labelforge {

enum class IdfVariant {
  /// ln(N / df): exactly zero for terms present in every cluster.
  plain,
  /// ln((1 + N) / (1 + df)) + 1
  smoothed,
};

struct CharacteristicsConfig {
  std::size_t n_concepts = 12;
  std::size_t n_venues = 3;
  std::size_t n_papers = 3;
  /// Concepts with relevance strictly below this are ignored.
  double relevance_threshold = 0.5;
  IdfVariant idf = IdfVariant::plain;

  void validate() const;
};

struct ScoredConcept {
  std::string term;
  double tfidf = 0.0;
  /// Occurrences within the cluster after the relevance filter.
  std::size_t tf = 0;

  friend bool operator==(const ScoredConcept&, const ScoredConcept&) = default;
};

struct VenueCount {
  std::string venue;
  std::size_t count = 0;

  friend bool operator==(const VenueCount&, const VenueCount&) = default;
};

struct PaperRef {
  std::string title;
  double citation_score = 0.0;

  friend bool operator==(const PaperRef&, const PaperRef&) = default;
};

struct ClusterCharacteristics {
  std::string cluster_id;
  std::vector<ScoredConcept> top_concepts;
  std::vector<VenueCount> top_venues;
  std::vector<PaperRef> top_papers;

  std::vector<std::string> concept_terms() const;
  std::vector<std::string> venue_names() const;
  std::vector<std::string> paper_titles() const;

  friend bool operator==(const ClusterCharacteristics&, const ClusterCharacteristics&) = default;
};

/// IDF of a term present in `df` of `n_clusters` clusters.
double inverse_cluster_frequency(std::size_t n_clusters, std::size_t df, IdfVariant variant);

/// Full concept ranking per cluster: score descending, then raw TF
/// descending, then term ascending.
std::map<std::string, std::vector<ScoredConcept>> score_concepts_tfidf(
    const ClusteredCorpus& corpus, const CharacteristicsConfig& config);

/// One entry per cluster, in cluster_ids order. Zero-score concepts are kept
/// only for clusters with no positive-score concept.
std::vector<ClusterCharacteristics> extract_characteristics(const ClusteredCorpus& corpus,
                                                            const CharacteristicsConfig& config);

/// Top concepts joined with "; " in rank order. Throws ValidationError when
/// the cluster has no concepts.
std::string render_characteristic_label(const ClusterCharacteristics& chars);

/// Deterministic sentence describing a cluster, used as the embedding target
/// of the specificity check. Empty venue or paper lists drop their clause.
std::string summary_sentence(const ClusterCharacteristics& chars);

const ClusterCharacteristics& find_characteristics(const std::vector<ClusterCharacteristics>& all,
                                                   const std::string& cluster_id);

void to_json(nlohmann::json& j, const ClusterCharacteristics& c);
void from_json(const nlohmann::json& j, ClusterCharacteristics& c);
void to_json(nlohmann::json& j, const CharacteristicsConfig& c);
void from_json(const nlohmann::json& j, CharacteristicsConfig& c);

/// JSON object keyed by cluster id, in cluster order.
nlohmann::json characteristics_to_json(const std::vector<ClusterCharacteristics>& all);
std::vector<ClusterCharacteristics> characteristics_from_json(const nlohmann::json& j);

void save_characteristics(const std::filesystem::path& path,
                          const std::vector<ClusterCharacteristics>& all);
std::vector<ClusterCharacteristics> load_characteristics(const std::filesystem::path& path);

}  // namespace labelforge
