#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace labelforge {

/// A pre-extracted noun phrase with its relevance to one document.
struct Concept {
  std::string term;
  double relevance = 0.0;

  friend bool operator==(const Concept&, const Concept&) = default;
};

struct Document {
  std::string id;
  std::string title;
  std::optional<std::string> abstract;
  std::string venue;
  int year = 0;
  std::vector<Concept> concepts;
  /// Field-normalized citation metric used to rank prominent papers.
  double citation_score = 0.0;
  std::string field_tag;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Cluster id reserved for documents the upstream clustering marked as noise.
inline constexpr const char* kNoiseClusterId = "-1";

/// Clusters smaller than this trigger an ingest warning.
inline constexpr std::size_t kSmallClusterWarning = 20;

/// Documents plus their cluster membership. Immutable after construction.
class ClusteredCorpus {
 public:
  ClusteredCorpus() = default;

  /// Validates and builds a corpus. Throws ValidationError when an invariant
  /// is violated (duplicate ids, unassigned documents, stray assignments,
  /// bad relevance or citation values).
  static ClusteredCorpus build(std::vector<Document> documents,
                               std::map<std::string, std::string> assignment);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  /// Sorted ascending with natural ordering of embedded numbers.
  const std::vector<std::string>& cluster_ids() const noexcept { return cluster_ids_; }
  const std::map<std::string, std::string>& assignment() const noexcept { return assignment_; }

  bool has_cluster(const std::string& cluster_id) const;
  const std::string& cluster_of(const std::string& document_id) const;

  /// All and only the documents of one cluster, in corpus order.
  std::vector<Document> members(const std::string& cluster_id) const;
  std::size_t cluster_size(const std::string& cluster_id) const;

  bool empty() const noexcept { return documents_.empty(); }

  friend bool operator==(const ClusteredCorpus& a, const ClusteredCorpus& b) {
    return a.documents_ == b.documents_ && a.assignment_ == b.assignment_ &&
           a.cluster_ids_ == b.cluster_ids_;
  }

 private:
  std::vector<Document> documents_;
  std::map<std::string, std::string> assignment_;
  std::vector<std::string> cluster_ids_;
  std::map<std::string, std::vector<std::size_t>> members_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct IngestReport {
  std::size_t lines_read = 0;
  std::size_t noise_dropped = 0;
  std::vector<std::string> small_clusters;
};

/// Reads a corpus from JSONL. When `assignments` is given, cluster ids come
/// from that file of {id, cluster_id} records; otherwise each document line
/// carries its own `cluster_id`.
ClusteredCorpus load_corpus(const std::filesystem::path& path,
                            const std::optional<std::filesystem::path>& assignments = std::nullopt,
                            IngestReport* report = nullptr);

ClusteredCorpus parse_corpus(std::istream& documents, std::istream* assignments = nullptr,
                             IngestReport* report = nullptr);

/// Writes one JSON object per line with an inline cluster_id.
void write_corpus(std::ostream& out, const ClusteredCorpus& corpus);
void save_corpus(const std::filesystem::path& path, const ClusteredCorpus& corpus);

void to_json(nlohmann::json& j, const Document& doc);
void from_json(const nlohmann::json& j, Document& doc);

// ---------------------------------------------------------------------------
// Synthetic corpora

struct SyntheticSpec {
  std::uint64_t seed = 1;
  std::size_t n_clusters = 3;
  std::size_t docs_per_cluster = 5;
  std::size_t vocab_per_cluster = 12;
  std::size_t shared_vocab = 0;

  void validate() const;
};

/// A generated corpus together with what the generator knows about it.
struct SyntheticCorpus {
  ClusteredCorpus corpus;
  /// Cluster id -> distinctive terms, dominant term first.
  std::map<std::string, std::vector<std::string>> vocabulary;
  std::vector<std::string> shared_terms;
  /// Cluster id -> ids of the documents generated for it.
  std::map<std::string, std::vector<std::string>> assignment_log;
};

/// Deterministic for a fixed seed. Every cluster gets its own dominant
/// vocabulary; shared terms occur in every cluster above the default
/// relevance threshold.
SyntheticCorpus synthesize_corpus(const SyntheticSpec& spec);

}  // namespace labelforge
