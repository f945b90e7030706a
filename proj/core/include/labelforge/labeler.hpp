#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "labelforge/characteristics.hpp"
#include "labelforge/corpus.hpp"
#include "labelforge/error.hpp"
#include "labelforge/prompting.hpp"
#include "labelforge/providers.hpp"

namespace labelforge {

enum class Issue { format, duplicate, nonspecific };

const char* to_string(Issue issue) noexcept;
Issue issue_from_string(std::string_view name);

struct LabelProvenance {
  int iterations_used = 1;
  std::string final_prompt_hash;

  friend bool operator==(const LabelProvenance&, const LabelProvenance&) = default;
};

/// One label per cluster.
struct LabelSet {
  std::string run_id;
  std::map<std::string, std::string> labels;
  std::map<std::string, LabelProvenance> provenance;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

struct ValidationReport {
  std::map<std::string, std::vector<Issue>> failing;

  bool empty() const noexcept { return failing.empty(); }
  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

struct LoopConfig {
  int max_iterations = 10;
  std::size_t min_len = 3;
  std::size_t max_len = 50;
  std::set<Issue> checks_enabled{Issue::format, Issue::duplicate, Issue::nonspecific};
  /// Compare labels byte-for-byte instead of casefolded and trimmed.
  bool exact_duplicates = false;
  /// Concurrent generation requests within one iteration.
  std::size_t parallelism = 1;

  void validate() const;
};

/// Passes iff min_len <= (Unicode scalar count) <= max_len.
bool check_format(std::string_view label, const LoopConfig& cfg);

/// Key used to compare labels for duplication.
std::string duplicate_key(std::string_view label, bool exact);

/// Every cluster whose label occurs at least twice.
std::set<std::string> check_duplicates(const LabelSet& labels, bool exact = false);

/// Clusters whose label is at least as similar to another cluster's summary
/// sentence as to its own. When `subset` is given only those clusters are
/// judged; all summaries still compete. Single-cluster sets are never flagged.
std::set<std::string> check_specificity(const LabelSet& labels,
                                        const std::vector<ClusterCharacteristics>& chars,
                                        Embedder& embedder,
                                        const std::set<std::string>* subset = nullptr);

/// Strips surrounding whitespace and quote characters from a completion.
std::string clean_completion(std::string_view raw);

/// Runs all enabled checks over a label set, in format, duplicate,
/// non-specific order.
ValidationReport validate_labels(const LabelSet& labels,
                                 const std::vector<ClusterCharacteristics>& chars,
                                 const LoopConfig& cfg, Embedder* embedder);

struct GenerationResult {
  LabelSet labels;
  /// Report after each generation pass; the last one is empty on convergence.
  std::vector<ValidationReport> reports;
};

/// Thrown when a provider fails mid-run; carries whatever was produced.
class GenerationAborted : public ProviderError {
 public:
  GenerationAborted(const ProviderError& cause, GenerationResult partial);
  const GenerationResult& partial() const noexcept { return partial_; }

 private:
  GenerationResult partial_;
};

struct FirstPassCounts {
  double duplicates = 0.0;
  double vague = 0.0;
  int runs = 1;

  friend bool operator==(const FirstPassCounts&, const FirstPassCounts&) = default;
};

/// Iterative generate-validate-regenerate loop. `embedder` is required when
/// the non-specific check is enabled.
GenerationResult generate_labels(const ClusteredCorpus& corpus,
                                 const std::vector<ClusterCharacteristics>& chars,
                                 const PromptTemplate& tpl, ChatProvider& provider,
                                 const GenerationParams& params, const LoopConfig& cfg,
                                 Embedder* embedder, std::string run_id = "run");

/// One generation pass without regeneration, plus how many initial labels
/// are duplicated or vague.
std::pair<LabelSet, FirstPassCounts> first_pass(const ClusteredCorpus& corpus,
                                                const std::vector<ClusterCharacteristics>& chars,
                                                const PromptTemplate& tpl, ChatProvider& provider,
                                                const GenerationParams& params, Embedder& embedder,
                                                const LoopConfig& cfg = {},
                                                std::string run_id = "run");

void to_json(nlohmann::json& j, const LabelSet& s);
void from_json(const nlohmann::json& j, LabelSet& s);
void to_json(nlohmann::json& j, const ValidationReport& r);
void from_json(const nlohmann::json& j, ValidationReport& r);
void to_json(nlohmann::json& j, const LoopConfig& c);
void from_json(const nlohmann::json& j, LoopConfig& c);
void to_json(nlohmann::json& j, const FirstPassCounts& c);
void from_json(const nlohmann::json& j, FirstPassCounts& c);

}  // namespace labelforge
