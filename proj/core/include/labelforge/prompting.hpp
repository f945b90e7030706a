#pragma once

#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "labelforge/characteristics.hpp"

namespace labelforge {

enum class ClauseKind { concepts, journals, papers };

const char* to_string(ClauseKind kind) noexcept;
ClauseKind clause_kind_from_string(std::string_view name);

/// Where characteristic clauses are inserted in a template body.
inline constexpr std::string_view kClauseMarker = "{clauses}";

struct PromptTemplate {
  std::string id = "custom";
  std::string body;
  std::optional<std::string> system_prompt;
  std::vector<ClauseKind> clause_order{ClauseKind::concepts, ClauseKind::journals,
                                       ClauseKind::papers};

  /// Throws ValidationError unless the body has exactly one marker and the
  /// clause order is nonempty without duplicates.
  void validate() const;
};

enum class TemplateVariant { minimal, system };

/// Bundled task template. The system variant adds the librarian persona.
PromptTemplate default_template(TemplateVariant variant);

PromptTemplate load_template(const std::filesystem::path& path);
void to_json(nlohmann::json& j, const PromptTemplate& t);
void from_json(const nlohmann::json& j, PromptTemplate& t);

/// Labels to steer away from, one list per validation issue. Each list keeps
/// the most recent `kFeedbackCap` distinct entries.
class FeedbackState {
 public:
  static constexpr std::size_t kFeedbackCap = 20;

  void add_invalid_format(const std::string& label) { push(invalid_format_, label); }
  void add_duplicate(const std::string& label) { push(duplicate_, label); }
  void add_nonspecific(const std::string& label) { push(nonspecific_, label); }

  const std::deque<std::string>& invalid_format() const noexcept { return invalid_format_; }
  const std::deque<std::string>& duplicate() const noexcept { return duplicate_; }
  const std::deque<std::string>& nonspecific() const noexcept { return nonspecific_; }

  bool empty() const noexcept {
    return invalid_format_.empty() && duplicate_.empty() && nonspecific_.empty();
  }

 private:
  static void push(std::deque<std::string>& list, const std::string& label);

  std::deque<std::string> invalid_format_;
  std::deque<std::string> duplicate_;
  std::deque<std::string> nonspecific_;
};

struct RenderedPrompt {
  std::optional<std::string> system;
  std::string user;
  std::string cluster_id;

  /// Stable digest of the system and user text.
  std::string hash() const;
};

namespace clause_text {
inline constexpr std::string_view kConcepts =
    "The concepts most associated with these documents in order from most to least relevant are: ";
inline constexpr std::string_view kJournals = "Most documents come from journals such as ";
inline constexpr std::string_view kPapers = "The most prominent articles in this cluster are titled ";
inline constexpr std::string_view kFormat = "The following labels are invalid and should not be used: ";
inline constexpr std::string_view kDuplicate = "The label should not be any of the following: ";
inline constexpr std::string_view kNonspecific =
    "The new label should be different from and more specific than: ";
}  // namespace clause_text

/// Renders one cluster's prompt. Clauses for which the characteristics carry
/// no data are dropped with a warning; if every clause drops, throws
/// ValidationError.
RenderedPrompt render_prompt(const PromptTemplate& tpl, const ClusterCharacteristics& chars,
                             const FeedbackState& feedback = {});

}  // namespace labelforge
