#include "labelforge/annotation.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/error.hpp"
#include "labelforge/util.hpp"

namespace labelforge {

using nlohmann::json;

const char* to_string(LabelKind kind) noexcept {
  return kind == LabelKind::characteristic ? "characteristic" : "descriptive";
}

LabelKind label_kind_from_string(std::string_view name) {
  if (name == "characteristic") return LabelKind::characteristic;
  if (name == "descriptive") return LabelKind::descriptive;
  throw ValidationError("unknown label kind '" + std::string(name) + "'");
}

std::vector<AnnotationTask> build_tasks(const ClusteredCorpus& corpus,
                                        const std::vector<ClusterCharacteristics>& chars,
                                        const LabelSet& descriptive, const TaskBuildOptions& options) {
  const auto& clusters = corpus.cluster_ids();
  if (clusters.size() < kQuizOptions) {
    throw ValidationError("a four-option quiz needs at least 4 clusters, corpus has " +
                          std::to_string(clusters.size()));
  }
  if (options.n_clusters < 1 || options.n_clusters > clusters.size()) {
    throw ValidationError("cannot sample " + std::to_string(options.n_clusters) + " of " +
                          std::to_string(clusters.size()) + " clusters");
  }

  // Label of each cluster under the requested kind, if it has one.
  std::map<std::string, std::string> labels;
  for (const auto& cid : clusters) {
    if (options.kind == LabelKind::characteristic) {
      const auto& c = find_characteristics(chars, cid);
      if (!c.top_concepts.empty()) labels[cid] = render_characteristic_label(c);
    } else if (auto it = descriptive.labels.find(cid); it != descriptive.labels.end()) {
      labels[cid] = it->second;
    }
  }

  std::vector<std::string> sample = clusters;
  Rng sample_rng(mix_seed(options.seed, 0xA11CE));
  sample_rng.shuffle(sample);
  sample.resize(options.n_clusters);

  std::vector<AnnotationTask> tasks;
  tasks.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto& cid = sample[i];
    auto own = labels.find(cid);
    if (own == labels.end()) {
      throw ValidationError("cluster '" + cid + "' has no " + to_string(options.kind) + " label");
    }
    Rng rng(mix_seed(mix_seed(options.seed, i + 1), static_cast<std::uint64_t>(options.kind) + 7));

    std::vector<std::string> pool;
    for (const auto& other : clusters) {
      if (other != cid && labels.contains(other)) pool.push_back(other);
    }
    rng.shuffle(pool);

    std::vector<std::string> options_text{own->second};
    std::set<std::string> seen{duplicate_key(own->second, false)};
    for (const auto& other : pool) {
      if (options_text.size() == kQuizOptions) break;
      const auto& text = labels.at(other);
      if (seen.insert(duplicate_key(text, false)).second) options_text.push_back(text);
    }
    if (options_text.size() < kQuizOptions) {
      throw ValidationError("not enough distinct labels to build distractors for cluster '" + cid + "'");
    }

    std::vector<std::size_t> order{0, 1, 2, 3};
    rng.shuffle(order);
    AnnotationTask task;
    task.task_id = options.dataset + ":" + to_string(options.kind) + ":" + cid;
    task.dataset = options.dataset;
    task.cluster_id = cid;
    task.label_kind = options.kind;
    const auto& c = find_characteristics(chars, cid);
    task.shown_venues = c.venue_names();
    task.shown_titles = c.paper_titles();
    if (task.shown_venues.size() > 3) task.shown_venues.resize(3);
    if (task.shown_titles.size() > 3) task.shown_titles.resize(3);
    for (std::size_t slot = 0; slot < kQuizOptions; ++slot) {
      task.options.push_back(options_text[order[slot]]);
      if (order[slot] == 0) task.correct_index = static_cast<int>(slot);
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

namespace {

std::map<std::string, const AnnotationTask*> index_tasks(std::span<const AnnotationTask> tasks) {
  std::map<std::string, const AnnotationTask*> out;
  for (const auto& t : tasks) {
    if (!out.emplace(t.task_id, &t).second) {
      throw ValidationError("duplicate task id '" + t.task_id + "'");
    }
  }
  return out;
}

std::map<std::string, int> selections(const std::map<std::string, const AnnotationTask*>& tasks,
                                      std::span<const AnnotationResponse> responses,
                                      const std::string* annotator_id) {
  std::map<std::string, int> out;
  for (const auto& r : responses) {
    if (annotator_id != nullptr && r.annotator_id != *annotator_id) continue;
    if (!tasks.contains(r.task_id)) {
      throw ValidationError("response references unknown task '" + r.task_id + "'");
    }
    if (!out.emplace(r.task_id, r.selected_index).second) {
      throw ValidationError("duplicate response for task '" + r.task_id + "' by annotator '" +
                            r.annotator_id + "'");
    }
  }
  return out;
}

}  // namespace

EvaluationSummary score(std::span<const AnnotationTask> tasks,
                        std::span<const AnnotationResponse> responses,
                        const std::string& annotator_id) {
  const auto by_id = index_tasks(tasks);
  const auto chosen = selections(by_id, responses, &annotator_id);

  EvaluationSummary s;
  if (!tasks.empty()) {
    s.dataset = tasks.front().dataset;
    s.label_kind = tasks.front().label_kind;
  }
  s.n_tasks = tasks.size();
  for (const auto& [task_id, selected] : chosen) {
    ++s.n_scored;
    if (by_id.at(task_id)->correct_index == selected) ++s.n_correct;
  }
  s.n_unanswered = s.n_tasks - s.n_scored;
  s.accuracy = s.n_scored == 0 ? 0.0
                               : static_cast<double>(s.n_correct) / static_cast<double>(s.n_scored);
  return s;
}

double agreement(std::span<const AnnotationTask> tasks, std::span<const AnnotationResponse> a,
                 std::span<const AnnotationResponse> b) {
  const auto by_id = index_tasks(tasks);
  const auto sa = selections(by_id, a, nullptr);
  const auto sb = selections(by_id, b, nullptr);
  if (sa.size() != sb.size() ||
      !std::equal(sa.begin(), sa.end(), sb.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; })) {
    throw ValidationError("agreement requires both annotators to answer the same tasks");
  }
  if (sa.empty()) throw ValidationError("agreement of empty response sets");
  std::size_t same = 0;
  for (const auto& [task_id, selected] : sa) {
    if (sb.at(task_id) == selected) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(sa.size());
}

json public_task_json(const AnnotationTask& t) {
  return json{{"task_id", t.task_id},
              {"dataset", t.dataset},
              {"cluster_id", t.cluster_id},
              {"shown_venues", t.shown_venues},
              {"shown_titles", t.shown_titles},
              {"options", t.options},
              {"label_kind", to_string(t.label_kind)}};
}

void to_json(json& j, const AnnotationTask& t) {
  j = public_task_json(t);
  j["correct_index"] = t.correct_index;
}

void from_json(const json& j, AnnotationTask& t) {
  t.task_id = j.at("task_id").get<std::string>();
  t.dataset = j.value("dataset", std::string{});
  t.cluster_id = j.at("cluster_id").get<std::string>();
  t.shown_venues = j.value("shown_venues", std::vector<std::string>{});
  t.shown_titles = j.value("shown_titles", std::vector<std::string>{});
  t.options = j.at("options").get<std::vector<std::string>>();
  t.correct_index = j.at("correct_index").get<int>();
  t.label_kind = label_kind_from_string(j.at("label_kind").get<std::string>());
  if (t.options.size() != kQuizOptions) {
    throw ValidationError("task '" + t.task_id + "' must have exactly 4 options");
  }
  if (t.correct_index < 0 || t.correct_index >= static_cast<int>(kQuizOptions)) {
    throw ValidationError("task '" + t.task_id + "' has correct_index outside [0,3]");
  }
}

void to_json(json& j, const AnnotationResponse& r) {
  j = json{{"task_id", r.task_id},
           {"annotator_id", r.annotator_id},
           {"selected_index", r.selected_index},
           {"timestamp", r.timestamp}};
}

void from_json(const json& j, AnnotationResponse& r) {
  r.task_id = j.at("task_id").get<std::string>();
  r.annotator_id = j.at("annotator_id").get<std::string>();
  r.selected_index = j.at("selected_index").get<int>();
  r.timestamp = j.value("timestamp", std::string{});
}

void to_json(json& j, const EvaluationSummary& s) {
  j = json{{"dataset", s.dataset},
           {"label_kind", to_string(s.label_kind)},
           {"n_tasks", s.n_tasks},
           {"n_scored", s.n_scored},
           {"n_correct", s.n_correct},
           {"n_unanswered", s.n_unanswered},
           {"accuracy", s.accuracy},
           {"agreement", s.agreement ? json(*s.agreement) : json(nullptr)}};
}

void save_tasks(const std::filesystem::path& path, std::span<const AnnotationTask> tasks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write tasks file '" + path.string() + "'");
  for (const auto& t : tasks) out << json(t).dump() << '\n';
}

namespace {

template <typename T>
std::vector<T> load_jsonl(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ParseError(std::string("cannot open ") + what + " file '" + path.string() + "'");
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace

std::vector<AnnotationTask> load_tasks(const std::filesystem::path& path) {
  return load_jsonl<AnnotationTask>(path, "tasks");
}

std::vector<AnnotationResponse> load_responses(const std::filesystem::path& path) {
  return load_jsonl<AnnotationResponse>(path, "responses");
}

ResponseStore::ResponseStore(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto r = json::parse(line).get<AnnotationResponse>();
      auto key = std::make_pair(r.task_id, r.annotator_id);
      if (!by_key_.contains(key)) order_.push_back(key);
      by_key_[key] = std::move(r);
    } catch (const json::exception& e) {
      spdlog::warn("response store {}: skipping line {}: {}", path_.string(), line_no, e.what());
    }
  }
}

ResponseStore::Outcome ResponseStore::record(const AnnotationResponse& response) {
  std::lock_guard lock(mutex_);
  auto key = std::make_pair(response.task_id, response.annotator_id);
  if (auto it = by_key_.find(key); it != by_key_.end()) {
    return it->second.selected_index == response.selected_index ? Outcome::duplicate
                                                                : Outcome::conflict;
  }
  {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot open response store '" + path_.string() + "'");
    out << json(response).dump() << '\n';
    out.flush();
    if (!out) throw Error("write to response store '" + path_.string() + "' failed");
  }
  order_.push_back(key);
  by_key_.emplace(std::move(key), response);
  return Outcome::recorded;
}

std::vector<AnnotationResponse> ResponseStore::responses() const {
  std::lock_guard lock(mutex_);
  std::vector<AnnotationResponse> out;
  out.reserve(order_.size());
  for (const auto& key : order_) out.push_back(by_key_.at(key));
  return out;
}

std::vector<AnnotationResponse> ResponseStore::responses_for(const std::string& annotator_id) const {
  auto all = responses();
  std::erase_if(all, [&](const AnnotationResponse& r) { return r.annotator_id != annotator_id; });
  return all;
}

std::optional<AnnotationResponse> ResponseStore::find(const std::string& task_id,
                                                      const std::string& annotator_id) const {
  std::lock_guard lock(mutex_);
  auto it = by_key_.find({task_id, annotator_id});
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

json summarize(std::span<const AnnotationTask> tasks, std::span<const AnnotationResponse> responses) {
  json out = json::array();
  for (auto kind : {LabelKind::characteristic, LabelKind::descriptive}) {
    std::vector<AnnotationTask> subset;
    std::set<std::string> ids;
    for (const auto& t : tasks) {
      if (t.label_kind == kind) {
        subset.push_back(t);
        ids.insert(t.task_id);
      }
    }
    if (subset.empty()) continue;

    std::map<std::string, std::vector<AnnotationResponse>> per_annotator;
    for (const auto& r : responses) {
      if (ids.contains(r.task_id)) per_annotator[r.annotator_id].push_back(r);
    }

    EvaluationSummary pooled;
    pooled.dataset = subset.front().dataset;
    pooled.label_kind = kind;
    pooled.n_tasks = subset.size();
    json annotators = json::array();
    std::vector<std::string> finished;
    for (const auto& [annotator, rs] : per_annotator) {
      const auto s = score(subset, rs, annotator);
      pooled.n_scored += s.n_scored;
      pooled.n_correct += s.n_correct;
      annotators.push_back({{"annotator_id", annotator},
                            {"n_scored", s.n_scored},
                            {"accuracy", s.accuracy}});
      if (s.n_unanswered == 0) finished.push_back(annotator);
    }
    pooled.accuracy = pooled.n_scored == 0 ? 0.0
                                           : static_cast<double>(pooled.n_correct) /
                                                 static_cast<double>(pooled.n_scored);
    pooled.n_unanswered = pooled.n_tasks * std::max<std::size_t>(per_annotator.size(), 1) - pooled.n_scored;
    if (finished.size() >= 2) {
      pooled.agreement = agreement(subset, per_annotator.at(finished[0]), per_annotator.at(finished[1]));
    }
    json entry = pooled;
    entry["annotators"] = std::move(annotators);
    out.push_back(std::move(entry));
  }
  return json{{"summaries", std::move(out)}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace labelforge
