#include "labelforge/prompting.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/error.hpp"
#include "labelforge/util.hpp"

namespace labelforge {

using nlohmann::json;

namespace {

constexpr std::string_view kTemplateBody =
    "Generate a label for the scientific specialty represented with the following information "
    "extracted from a cluster of related documents. {clauses}. The label should resemble "
    "something that is already present in existing ontologies. The label should be as specific "
    "as possible while still representing all of the provided information. Additionally, the "
    "label should be short and not use any redundant words.";

constexpr std::string_view kSystemPrompt =
    "You are a librarian with an expertise in the taxonomy of knowledge and scholarship. Your "
    "job is to examine characteristics about clusters of scientific publications and to assign "
    "an appropriate label.";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string comma_list(const std::deque<std::string>& items) {
  return join(std::vector<std::string>(items.begin(), items.end()), ", ");
}

}  // namespace

const char* to_string(ClauseKind kind) noexcept {
  switch (kind) {
    case ClauseKind::concepts:
      return "concepts";
    case ClauseKind::journals:
      return "journals";
    case ClauseKind::papers:
      return "papers";
  }
  return "unknown";
}

ClauseKind clause_kind_from_string(std::string_view name) {
  if (name == "concepts") return ClauseKind::concepts;
  if (name == "journals" || name == "venues") return ClauseKind::journals;
  if (name == "papers") return ClauseKind::papers;
  throw ValidationError("unknown clause kind '" + std::string(name) + "'");
}

void PromptTemplate::validate() const {
  if (count_occurrences(body, kClauseMarker) != 1) {
    throw ValidationError("template '" + id + "' must contain exactly one " +
                          std::string(kClauseMarker) + " marker");
  }
  if (clause_order.empty()) throw ValidationError("template '" + id + "' has no clauses");
  std::set<ClauseKind> seen(clause_order.begin(), clause_order.end());
  if (seen.size() != clause_order.size()) {
    throw ValidationError("template '" + id + "' repeats a clause kind");
  }
}

PromptTemplate default_template(TemplateVariant variant) {
  PromptTemplate t;
  t.body = std::string(kTemplateBody);
  if (variant == TemplateVariant::system) {
    t.id = "system";
    t.system_prompt = std::string(kSystemPrompt);
  } else {
    t.id = "minimal";
  }
  return t;
}

void to_json(json& j, const PromptTemplate& t) {
  json order = json::array();
  for (auto k : t.clause_order) order.push_back(to_string(k));
  j = json{{"id", t.id},
           {"body", t.body},
           {"system_prompt", t.system_prompt ? json(*t.system_prompt) : json(nullptr)},
           {"clause_order", std::move(order)}};
}

void from_json(const json& j, PromptTemplate& t) {
  t = PromptTemplate{};
  t.id = j.value("id", std::string("custom"));
  if (auto it = j.find("body"); it != j.end() && !it->is_null()) {
    t.body = it->get<std::string>();
  } else {
    t.body = std::string(kTemplateBody);
  }
  if (auto it = j.find("system_prompt"); it != j.end() && !it->is_null()) {
    t.system_prompt = it->get<std::string>();
  }
  if (auto it = j.find("clause_order"); it != j.end()) {
    t.clause_order.clear();
    for (const auto& k : *it) t.clause_order.push_back(clause_kind_from_string(k.get<std::string>()));
  }
  t.validate();
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open template file '" + path.string() + "'");
  try {
    return json::parse(in).get<PromptTemplate>();
  } catch (const json::exception& e) {
    throw ParseError("template '" + path.string() + "': " + e.what());
  }
}

void FeedbackState::push(std::deque<std::string>& list, const std::string& label) {
  if (auto it = std::find(list.begin(), list.end(), label); it != list.end()) list.erase(it);
  list.push_back(label);
  while (list.size() > kFeedbackCap) list.pop_front();
}

std::string RenderedPrompt::hash() const {
  return sha256_hex((system ? *system : std::string()) + '\x1f' + user);
}

RenderedPrompt render_prompt(const PromptTemplate& tpl, const ClusterCharacteristics& chars,
                             const FeedbackState& feedback) {
  tpl.validate();

  std::vector<std::string> clauses;
  for (auto kind : tpl.clause_order) {
    std::vector<std::string> items;
    std::string_view prefix;
    switch (kind) {
      case ClauseKind::concepts:
        items = chars.concept_terms();
        prefix = clause_text::kConcepts;
        break;
      case ClauseKind::journals:
        items = chars.venue_names();
        prefix = clause_text::kJournals;
        break;
      case ClauseKind::papers:
        items = chars.paper_titles();
        prefix = clause_text::kPapers;
        break;
    }
    if (items.empty()) {
      spdlog::warn("cluster '{}': no data for {} clause, dropping it", chars.cluster_id,
                   to_string(kind));
      continue;
    }
    clauses.push_back(std::string(prefix) + join(items, ", "));
  }
  if (clauses.empty()) {
    throw ValidationError("cluster '" + chars.cluster_id +
                          "': every requested clause is empty, prompt would carry no cluster data");
  }

  std::string user = tpl.body;
  user.replace(user.find(kClauseMarker), kClauseMarker.size(), join(clauses, ". "));

  if (!feedback.invalid_format().empty()) {
    user += " " + std::string(clause_text::kFormat) + comma_list(feedback.invalid_format()) + ".";
  }
  if (!feedback.duplicate().empty()) {
    user += " " + std::string(clause_text::kDuplicate) + comma_list(feedback.duplicate()) + ".";
  }
  if (!feedback.nonspecific().empty()) {
    user += " " + std::string(clause_text::kNonspecific) + comma_list(feedback.nonspecific()) + ".";
  }

  return RenderedPrompt{tpl.system_prompt, std::move(user), chars.cluster_id};
}

}  // namespace labelforge
