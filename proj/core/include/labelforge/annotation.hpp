#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "labelforge/characteristics.hpp"
#include "labelforge/corpus.hpp"
#include "labelforge/labeler.hpp"

namespace labelforge {

enum class LabelKind { characteristic, descriptive };

const char* to_string(LabelKind kind) noexcept;
LabelKind label_kind_from_string(std::string_view name);

inline constexpr std::size_t kQuizOptions = 4;

/// One multiple-choice question: which of four labels belongs to the cluster
/// whose prominent venues and papers are shown.
struct AnnotationTask {
  std::string task_id;
  std::string dataset;
  std::string cluster_id;
  std::vector<std::string> shown_venues;
  std::vector<std::string> shown_titles;
  std::vector<std::string> options;
  int correct_index = 0;
  LabelKind label_kind = LabelKind::descriptive;

  friend bool operator==(const AnnotationTask&, const AnnotationTask&) = default;
};

struct AnnotationResponse {
  std::string task_id;
  std::string annotator_id;
  int selected_index = 0;
  /// ISO-8601 UTC.
  std::string timestamp;

  friend bool operator==(const AnnotationResponse&, const AnnotationResponse&) = default;
};

struct EvaluationSummary {
  std::string dataset;
  LabelKind label_kind = LabelKind::descriptive;
  std::size_t n_tasks = 0;
  std::size_t n_scored = 0;
  std::size_t n_correct = 0;
  std::size_t n_unanswered = 0;
  double accuracy = 0.0;
  std::optional<double> agreement;
};

struct TaskBuildOptions {
  std::string dataset = "dataset";
  std::uint64_t seed = 0;
  std::size_t n_clusters = 50;
  LabelKind kind = LabelKind::descriptive;
};

/// Samples clusters without replacement and builds one quiz task per sampled
/// cluster. The cluster sample depends only on the seed and cluster list, so
/// both label kinds built with one seed cover the same clusters.
std::vector<AnnotationTask> build_tasks(const ClusteredCorpus& corpus,
                                        const std::vector<ClusterCharacteristics>& chars,
                                        const LabelSet& descriptive, const TaskBuildOptions& options);

/// Accuracy over the tasks `annotator_id` answered. Throws ValidationError for
/// unknown task ids or duplicate (task, annotator) responses.
EvaluationSummary score(std::span<const AnnotationTask> tasks,
                        std::span<const AnnotationResponse> responses,
                        const std::string& annotator_id);

/// Raw fraction of tasks on which two annotators chose the same option. Both
/// must have answered the same task set.
double agreement(std::span<const AnnotationTask> tasks, std::span<const AnnotationResponse> a,
                 std::span<const AnnotationResponse> b);

/// Task payload for annotators: everything except the answer key.
nlohmann::json public_task_json(const AnnotationTask& task);

void to_json(nlohmann::json& j, const AnnotationTask& t);
void from_json(const nlohmann::json& j, AnnotationTask& t);
void to_json(nlohmann::json& j, const AnnotationResponse& r);
void from_json(const nlohmann::json& j, AnnotationResponse& r);
void to_json(nlohmann::json& j, const EvaluationSummary& s);

void save_tasks(const std::filesystem::path& path, std::span<const AnnotationTask> tasks);
std::vector<AnnotationTask> load_tasks(const std::filesystem::path& path);
std::vector<AnnotationResponse> load_responses(const std::filesystem::path& path);

/// Append-only JSONL response log. One response per (task, annotator); a
/// repeat with the same selection is acknowledged without writing, a repeat
/// with a different selection is refused. When loading, the last record for a
/// key wins.
class ResponseStore {
 public:
  enum class Outcome { recorded, duplicate, conflict };

  explicit ResponseStore(std::filesystem::path path);

  /// Throws Error when the file cannot be written; state is unchanged then.
  Outcome record(const AnnotationResponse& response);
  std::vector<AnnotationResponse> responses() const;
  std::vector<AnnotationResponse> responses_for(const std::string& annotator_id) const;
  std::optional<AnnotationResponse> find(const std::string& task_id,
                                         const std::string& annotator_id) const;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, AnnotationResponse> by_key_;
  std::vector<std::pair<std::string, std::string>> order_;
};

/// Per-kind summaries over every annotator in the store, pooled, plus
/// agreement when at least two annotators finished the same tasks.
nlohmann::json summarize(std::span<const AnnotationTask> tasks,
                         std::span<const AnnotationResponse> responses);

std::string utc_timestamp();

/// HTTP front end for the quiz.
///   GET  /api/session/{annotator}  next unanswered task (no answer key)
///   POST /api/response             {task_id, annotator_id, selected_index}
///   GET  /api/summary              accuracy and agreement per label kind
///   GET  /                         static quiz assets
class AnnotationServer {
 public:
  AnnotationServer(std::vector<AnnotationTask> tasks, ResponseStore& store,
                   std::filesystem::path static_dir = {});
  ~AnnotationServer();

  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds and serves in a background thread. Port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace labelforge
