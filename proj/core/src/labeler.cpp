#include "labelforge/labeler.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/util.hpp"

namespace labelforge {

using nlohmann::json;

const char* to_string(Issue issue) noexcept {
  switch (issue) {
    case Issue::format:
      return "format";
    case Issue::duplicate:
      return "duplicate";
    case Issue::nonspecific:
      return "nonspecific";
  }
  return "unknown";
}

Issue issue_from_string(std::string_view name) {
  if (name == "format") return Issue::format;
  if (name == "duplicate") return Issue::duplicate;
  if (name == "nonspecific" || name == "non-specific") return Issue::nonspecific;
  throw ValidationError("unknown validation check '" + std::string(name) + "'");
}

void LoopConfig::validate() const {
  if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (min_len > max_len) throw ValidationError("min_len must not exceed max_len");
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
}

bool check_format(std::string_view label, const LoopConfig& cfg) {
  const auto n = utf8_length(label);
  return n >= cfg.min_len && n <= cfg.max_len;
}

std::string duplicate_key(std::string_view label, bool exact) {
  return exact ? std::string(label) : ascii_lower(trim(label));
}

std::set<std::string> check_duplicates(const LabelSet& labels, bool exact) {
  std::unordered_map<std::string, std::vector<std::string>> by_key;
  for (const auto& [cid, label] : labels.labels) by_key[duplicate_key(label, exact)].push_back(cid);
  std::set<std::string> out;
  for (const auto& [key, clusters] : by_key) {
    if (clusters.size() >= 2) out.insert(clusters.begin(), clusters.end());
  }
  return out;
}

std::set<std::string> check_specificity(const LabelSet& labels,
                                        const std::vector<ClusterCharacteristics>& chars,
                                        Embedder& embedder, const std::set<std::string>* subset) {
  if (labels.labels.size() <= 1) return {};

  std::map<std::string, std::vector<double>> summaries;
  for (const auto& [cid, label] : labels.labels) {
    summaries[cid] = embedder.embed(summary_sentence(find_characteristics(chars, cid))).values;
  }

  std::set<std::string> flagged;
  for (const auto& [cid, label] : labels.labels) {
    if (subset != nullptr && !subset->contains(cid)) continue;
    const auto vec = embedder.embed(label).values;
    const double own = cosine_similarity(vec, summaries.at(cid));
    bool vague = false;
    for (const auto& [other, summary] : summaries) {
      if (other == cid) continue;
      if (cosine_similarity(vec, summary) >= own) {
        vague = true;
        break;
      }
    }
    if (vague) flagged.insert(cid);
  }
  return flagged;
}

std::string clean_completion(std::string_view raw) {
  static constexpr std::array<std::string_view, 7> kQuotes = {"\"", "'", "`", "“", "”",
                                                             "‘", "’"};
  std::string s = trim(raw);
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    for (auto q : kQuotes) {
      if (s.size() >= q.size() && s.compare(0, q.size(), q) == 0) {
        s = trim(std::string_view(s).substr(q.size()));
        changed = true;
      }
      if (s.size() >= q.size() && s.compare(s.size() - q.size(), q.size(), q) == 0) {
        s = trim(std::string_view(s).substr(0, s.size() - q.size()));
        changed = true;
      }
    }
  }
  return s;
}

ValidationReport validate_labels(const LabelSet& labels,
                                 const std::vector<ClusterCharacteristics>& chars,
                                 const LoopConfig& cfg, Embedder* embedder) {
  ValidationReport report;
  const auto& enabled = cfg.checks_enabled;

  std::set<std::string> format_failures;
  if (enabled.contains(Issue::format)) {
    for (const auto& [cid, label] : labels.labels) {
      if (!check_format(label, cfg)) {
        format_failures.insert(cid);
        report.failing[cid].push_back(Issue::format);
      }
    }
  }
  if (enabled.contains(Issue::duplicate)) {
    for (const auto& cid : check_duplicates(labels, cfg.exact_duplicates)) {
      report.failing[cid].push_back(Issue::duplicate);
    }
  }
  if (enabled.contains(Issue::nonspecific)) {
    if (embedder == nullptr) throw ValidationError("non-specific check requires an embedder");
    std::set<std::string> judged;
    for (const auto& [cid, label] : labels.labels) {
      if (!format_failures.contains(cid) && !label.empty()) judged.insert(cid);
    }
    for (const auto& cid : check_specificity(labels, chars, *embedder, &judged)) {
      report.failing[cid].push_back(Issue::nonspecific);
    }
  }
  return report;
}

GenerationAborted::GenerationAborted(const ProviderError& cause, GenerationResult partial)
    : ProviderError(cause.kind(), std::string("run aborted: ") + cause.what()),
      partial_(std::move(partial)) {}

namespace {

struct Generated {
  std::string label;
  std::string prompt_hash;
};

/// Generates labels for `pending` with at most `parallelism` requests in
/// flight. Results are index-aligned with `pending`.
std::vector<Generated> generate_batch(const std::vector<std::string>& pending,
                                      const std::map<std::string, const ClusterCharacteristics*>& chars,
                                      const std::map<std::string, FeedbackState>& feedback,
                                      const PromptTemplate& tpl, ChatProvider& provider,
                                      const GenerationParams& params, std::size_t parallelism) {
  std::vector<RenderedPrompt> prompts;
  prompts.reserve(pending.size());
  for (const auto& cid : pending) {
    auto fb = feedback.find(cid);
    prompts.push_back(render_prompt(tpl, *chars.at(cid), fb == feedback.end() ? FeedbackState{} : fb->second));
  }

  std::vector<Generated> out(pending.size());
  const auto work = [&](std::size_t i) {
    out[i] = {clean_completion(provider.complete(prompts[i], params)), prompts[i].hash()};
  };

  const std::size_t workers = std::min(parallelism, pending.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < pending.size(); ++i) work(i);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < pending.size(); i = next++) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = pending.size();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace

GenerationResult generate_labels(const ClusteredCorpus& corpus,
                                 const std::vector<ClusterCharacteristics>& chars,
                                 const PromptTemplate& tpl, ChatProvider& provider,
                                 const GenerationParams& params, const LoopConfig& cfg,
                                 Embedder* embedder, std::string run_id) {
  cfg.validate();
  params.validate();
  tpl.validate();
  if (cfg.checks_enabled.contains(Issue::nonspecific) && embedder == nullptr) {
    throw ValidationError("non-specific check requires an embedder");
  }

  std::map<std::string, const ClusterCharacteristics*> by_cluster;
  for (const auto& cid : corpus.cluster_ids()) by_cluster[cid] = &find_characteristics(chars, cid);

  GenerationResult result;
  result.labels.run_id = std::move(run_id);
  std::map<std::string, FeedbackState> feedback;
  std::vector<std::string> pending = corpus.cluster_ids();

  for (int iteration = 1; iteration <= cfg.max_iterations; ++iteration) {
    std::vector<Generated> generated;
    try {
      generated = generate_batch(pending, by_cluster, feedback, tpl, provider, params, cfg.parallelism);
    } catch (const ProviderError& e) {
      throw GenerationAborted(e, std::move(result));
    }
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const auto& cid = pending[i];
      result.labels.labels[cid] = std::move(generated[i].label);
      auto& prov = result.labels.provenance[cid];
      prov.iterations_used = iteration == 1 ? 1 : prov.iterations_used + 1;
      prov.final_prompt_hash = std::move(generated[i].prompt_hash);
    }

    ValidationReport report;
    try {
      report = validate_labels(result.labels, chars, cfg, embedder);
    } catch (const ProviderError& e) {
      throw GenerationAborted(e, std::move(result));
    }
    spdlog::debug("{} iteration {}: {} clusters failing", result.labels.run_id, iteration,
                  report.failing.size());
    result.reports.push_back(report);
    if (report.empty() || iteration == cfg.max_iterations) break;

    pending.clear();
    for (const auto& [cid, issues] : report.failing) {
      pending.push_back(cid);
      const auto& label = result.labels.labels.at(cid);
      auto& fb = feedback[cid];
      for (auto issue : issues) {
        switch (issue) {
          case Issue::format:
            fb.add_invalid_format(label);
            break;
          case Issue::duplicate:
            fb.add_duplicate(label);
            break;
          case Issue::nonspecific:
            fb.add_nonspecific(label);
            break;
        }
      }
    }
    std::sort(pending.begin(), pending.end(),
              [](const std::string& a, const std::string& b) { return natural_less(a, b); });
  }
  return result;
}

std::pair<LabelSet, FirstPassCounts> first_pass(const ClusteredCorpus& corpus,
                                                const std::vector<ClusterCharacteristics>& chars,
                                                const PromptTemplate& tpl, ChatProvider& provider,
                                                const GenerationParams& params, Embedder& embedder,
                                                const LoopConfig& cfg, std::string run_id) {
  LoopConfig single = cfg;
  single.checks_enabled.clear();
  single.max_iterations = 1;
  auto result = generate_labels(corpus, chars, tpl, provider, params, single, nullptr, std::move(run_id));

  FirstPassCounts counts;
  counts.runs = 1;
  counts.duplicates = static_cast<double>(check_duplicates(result.labels, cfg.exact_duplicates).size());
  std::set<std::string> judged;
  for (const auto& [cid, label] : result.labels.labels) {
    if (check_format(label, cfg) && !label.empty()) judged.insert(cid);
  }
  counts.vague = static_cast<double>(check_specificity(result.labels, chars, embedder, &judged).size());
  return {std::move(result.labels), counts};
}

void to_json(json& j, const LabelSet& s) {
  json provenance = json::object();
  for (const auto& [cid, p] : s.provenance) {
    provenance[cid] = {{"iterations_used", p.iterations_used}, {"final_prompt_hash", p.final_prompt_hash}};
  }
  j = json{{"run_id", s.run_id}, {"labels", s.labels}, {"provenance", std::move(provenance)}};
}

void from_json(const json& j, LabelSet& s) {
  s = LabelSet{};
  s.run_id = j.value("run_id", std::string{});
  s.labels = j.at("labels").get<std::map<std::string, std::string>>();
  if (auto it = j.find("provenance"); it != j.end()) {
    for (const auto& [cid, p] : it->items()) {
      s.provenance[cid] = {p.at("iterations_used").get<int>(),
                           p.value("final_prompt_hash", std::string{})};
    }
  }
}

void to_json(json& j, const ValidationReport& r) {
  j = json::object();
  for (const auto& [cid, issues] : r.failing) {
    json list = json::array();
    for (auto issue : issues) list.push_back(to_string(issue));
    j[cid] = std::move(list);
  }
}

void from_json(const json& j, ValidationReport& r) {
  r = ValidationReport{};
  for (const auto& [cid, list] : j.items()) {
    auto& issues = r.failing[cid];
    for (const auto& name : list) issues.push_back(issue_from_string(name.get<std::string>()));
  }
}

void to_json(json& j, const LoopConfig& c) {
  json checks = json::array();
  for (auto issue : c.checks_enabled) checks.push_back(to_string(issue));
  j = json{{"max_iterations", c.max_iterations},
           {"min_len", c.min_len},
           {"max_len", c.max_len},
           {"checks", std::move(checks)},
           {"exact_duplicates", c.exact_duplicates}};
}

void from_json(const json& j, LoopConfig& c) {
  c = LoopConfig{};
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.min_len = j.value("min_len", c.min_len);
  c.max_len = j.value("max_len", c.max_len);
  if (auto it = j.find("checks"); it != j.end()) {
    c.checks_enabled.clear();
    for (const auto& name : *it) c.checks_enabled.insert(issue_from_string(name.get<std::string>()));
  }
  c.exact_duplicates = j.value("exact_duplicates", c.exact_duplicates);
  c.parallelism = j.value("parallelism", c.parallelism);
  c.validate();
}

void to_json(json& j, const FirstPassCounts& c) {
  j = json{{"duplicates", c.duplicates}, {"vague", c.vague}, {"runs", c.runs}};
}

void from_json(const json& j, FirstPassCounts& c) {
  c.duplicates = j.at("duplicates").get<double>();
  c.vague = j.at("vague").get<double>();
  c.runs = j.value("runs", 1);
}

}  // namespace labelforge
