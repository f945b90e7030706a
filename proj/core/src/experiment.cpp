#include "labelforge/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "labelforge/corpus.hpp"
#include "labelforge/error.hpp"
#include "labelforge/util.hpp"

namespace labelforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string run_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%03d.json", index + 1);
  return buf;
}

std::string run_id_for(const std::string& hash, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "-run-%03d", index + 1);
  return hash.substr(0, 12) + buf;
}

const char* variant_name(TemplateVariant v) { return v == TemplateVariant::minimal ? "minimal" : "system"; }

TemplateVariant variant_from_string(const std::string& name) {
  if (name == "minimal") return TemplateVariant::minimal;
  if (name == "system") return TemplateVariant::system;
  throw ValidationError("unknown template variant '" + name + "'");
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

struct EmbedderStack {
  std::unique_ptr<Embedder> base;
  std::unique_ptr<EmbeddingCache> cache;
  std::unique_ptr<CachedEmbedder> cached;

  explicit EmbedderStack(const ProviderConfig& provider)
      : base(make_embedder(provider)),
        cache(std::make_unique<EmbeddingCache>(provider.cache_path)),
        cached(std::make_unique<CachedEmbedder>(*base, *cache)) {}

  Embedder& get() { return *cached; }
};

json run_record(const LabelSet& labels, const GenerationResult& result, const PromptTemplate& tpl,
                const GenerationParams& params, std::uint64_t seed, const char* status) {
  const json ls = labels;
  json reports = json::array();
  for (const auto& r : result.reports) reports.push_back(r);
  return json{{"run_id", labels.run_id},
              {"model", params.model_name},
              {"template_id", tpl.id},
              {"params", params},
              {"seed", seed},
              {"labels", ls.at("labels")},
              {"provenance", ls.at("provenance")},
              {"iteration_reports", std::move(reports)},
              {"status", status}};
}

void require_same_clusters(const std::vector<LabelSet>& sets, const std::string& where) {
  if (sets.empty()) return;
  std::set<std::string> first;
  for (const auto& [cid, _] : sets.front().labels) first.insert(cid);
  for (const auto& s : sets) {
    std::set<std::string> ids;
    for (const auto& [cid, _] : s.labels) ids.insert(cid);
    if (ids != first) {
      throw ValidationError("run '" + s.run_id + "' in " + where + " covers a different cluster set");
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_runs < 1) throw ValidationError("n_runs must be at least 1");
  if (corpus.empty()) throw ValidationError("config needs a corpus path");
  if (output_dir.empty()) throw ValidationError("config needs an output_dir");
  if (dataset.empty()) throw ValidationError("dataset name is empty");
  if (name.empty()) throw ValidationError("configuration name is empty");
  characteristics.validate();
  provider.validate();
  loop.validate();
  if (clauses && clauses->empty()) throw ValidationError("clause override is empty");
}

void to_json(json& j, const ExperimentConfig& c) {
  json clauses = nullptr;
  if (c.clauses) {
    clauses = json::array();
    for (auto k : *c.clauses) clauses.push_back(to_string(k));
  }
  j = json{{"dataset", c.dataset},
           {"name", c.name},
           {"corpus", c.corpus.string()},
           {"assignments", c.assignments ? json(c.assignments->string()) : json(nullptr)},
           {"characteristics", c.characteristics},
           {"template",
            {{"variant", variant_name(c.template_variant)},
             {"file", c.template_file ? json(c.template_file->string()) : json(nullptr)}}},
           {"clauses", std::move(clauses)},
           {"provider", c.provider},
           {"loop", c.loop},
           {"n_runs", c.n_runs},
           {"seed", c.seed},
           {"output_dir", c.output_dir.string()}};
}

void from_json(const json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  c.dataset = j.value("dataset", c.dataset);
  c.name = j.value("name", c.name);
  c.corpus = j.at("corpus").get<std::string>();
  if (auto it = j.find("assignments"); it != j.end() && !it->is_null()) {
    c.assignments = it->get<std::string>();
  }
  if (auto it = j.find("characteristics"); it != j.end()) {
    c.characteristics = it->get<CharacteristicsConfig>();
  }
  if (auto it = j.find("template"); it != j.end()) {
    c.template_variant = variant_from_string(it->value("variant", std::string("system")));
    if (auto f = it->find("file"); f != it->end() && !f->is_null()) c.template_file = f->get<std::string>();
  }
  if (auto it = j.find("clauses"); it != j.end() && !it->is_null()) {
    std::vector<ClauseKind> kinds;
    for (const auto& name : *it) kinds.push_back(clause_kind_from_string(name.get<std::string>()));
    c.clauses = std::move(kinds);
  }
  if (auto it = j.find("provider"); it != j.end()) c.provider = it->get<ProviderConfig>();
  if (auto it = j.find("loop"); it != j.end()) c.loop = it->get<LoopConfig>();
  c.n_runs = j.value("n_runs", c.n_runs);
  c.seed = j.value("seed", c.seed);
  c.output_dir = j.value("output_dir", std::string{});
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  auto c = read_json(path).get<ExperimentConfig>();
  const auto base = path.parent_path();
  c.corpus = resolve(base, c.corpus);
  if (c.assignments) c.assignments = resolve(base, *c.assignments);
  if (c.template_file) c.template_file = resolve(base, *c.template_file);
  c.output_dir = resolve(base, c.output_dir);
  if (!c.provider.cache_path.empty()) c.provider.cache_path = resolve(base, c.provider.cache_path);
  return c;
}

PromptTemplate resolve_template(const ExperimentConfig& config) {
  auto tpl = config.template_file ? load_template(*config.template_file)
                                  : default_template(config.template_variant);
  if (config.clauses) {
    tpl.clause_order = *config.clauses;
    std::string suffix;
    for (auto k : *config.clauses) suffix += std::string(suffix.empty() ? "" : ",") + to_string(k);
    tpl.id += "[" + suffix + "]";
  }
  tpl.validate();
  return tpl;
}

namespace {

json semantic_config(const ExperimentConfig& config) {
  json j = config;
  j.erase("output_dir");
  j["corpus"] = sha256_hex(read_file(config.corpus));
  if (config.assignments) j["assignments"] = sha256_hex(read_file(*config.assignments));
  j["template"] = resolve_template(config);
  j.erase("clauses");
  auto& p = j["provider"];
  for (const char* key : {"cache_path", "parallelism", "request_timeout_ms", "retry_backoff_ms",
                          "max_retries", "api_key_env"}) {
    p.erase(key);
  }
  return j;
}

}  // namespace

std::string config_hash(const ExperimentConfig& config) {
  return sha256_hex(semantic_config(config).dump());
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto semantic = semantic_config(config);
  const auto hash = sha256_hex(semantic.dump());
  const auto corpus = load_corpus(config.corpus, config.assignments);
  const auto chars = extract_characteristics(corpus, config.characteristics);
  const auto tpl = resolve_template(config);
  const auto& params = config.provider.chat_params;

  const fs::path out = config.output_dir;
  fs::create_directories(out);
  fs::remove_all(out / "runs");
  fs::remove(out / "manifest.json");
  fs::create_directories(out / "runs");

  std::vector<std::string> files;
  save_characteristics(out / "characteristics.json", chars);
  files.push_back("characteristics.json");

  EmbedderStack embedder(config.provider);
  ExperimentOutcome outcome;
  outcome.output_dir = out;
  outcome.config_hash = hash;

  LoopConfig loop = config.loop;
  loop.parallelism = std::max<std::size_t>(loop.parallelism, config.provider.parallelism);

  json runs = json::array();
  std::string provider_identity;
  for (int i = 0; i < config.n_runs; ++i) {
    const auto seed = config.seed + static_cast<std::uint64_t>(i);
    const auto run_id = run_id_for(hash, i);
    const auto file = fs::path("runs") / run_file_name(i);
    auto provider = make_chat_provider(config.provider, seed);
    provider_identity = provider->identity();
    spdlog::info("run {}/{} ({})", i + 1, config.n_runs, run_id);
    try {
      auto result = generate_labels(corpus, chars, tpl, *provider, params, loop, &embedder.get(), run_id);
      write_json(out / file, run_record(result.labels, result, tpl, params, seed, "complete"));
      runs.push_back({{"run_id", run_id}, {"seed", seed}, {"file", file.generic_string()},
                      {"status", "complete"}});
      files.push_back(file.generic_string());
      ++outcome.runs_completed;
    } catch (const GenerationAborted& e) {
      write_json(out / file,
                 run_record(e.partial().labels, e.partial(), tpl, params, seed, "aborted"));
      runs.push_back({{"run_id", run_id}, {"seed", seed}, {"file", file.generic_string()},
                      {"status", "aborted"}});
      files.push_back(file.generic_string());
      outcome.error = e.what();
      break;
    } catch (const ProviderError& e) {
      outcome.error = e.what();
      break;
    }
  }
  outcome.complete = !outcome.error && outcome.runs_completed == config.n_runs;

  json manifest{{"config_hash", hash},
                {"config", semantic},
                {"dataset", config.dataset},
                {"name", config.name},
                {"corpus_sha256", semantic.at("corpus")},
                {"provider", provider_identity},
                {"embedding_model", embedder.get().model_name()},
                {"template_id", tpl.id},
                {"n_runs", config.n_runs},
                {"runs", std::move(runs)},
                {"status", outcome.complete ? "complete" : "incomplete"},
                {"files", files}};
  if (outcome.error) manifest["error"] = *outcome.error;
  write_json(out / "manifest.json", manifest);
  return outcome;
}

FirstPassCounts run_first_pass_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto hash = config_hash(config);
  const auto corpus = load_corpus(config.corpus, config.assignments);
  const auto chars = extract_characteristics(corpus, config.characteristics);
  const auto tpl = resolve_template(config);
  const auto& params = config.provider.chat_params;

  const fs::path out = config.output_dir / "first-pass";
  fs::remove_all(out);
  fs::create_directories(out);
  EmbedderStack embedder(config.provider);
  LoopConfig loop = config.loop;
  loop.parallelism = std::max<std::size_t>(loop.parallelism, config.provider.parallelism);

  std::vector<FirstPassCounts> counts;
  json per_run = json::array();
  std::vector<std::string> files;
  for (int i = 0; i < config.n_runs; ++i) {
    const auto seed = config.seed + static_cast<std::uint64_t>(i);
    auto provider = make_chat_provider(config.provider, seed);
    auto [labels, c] = first_pass(corpus, chars, tpl, *provider, params, embedder.get(), loop,
                                  run_id_for(hash, i));
    json record = labels;
    record["seed"] = seed;
    record["counts"] = c;
    write_json(out / run_file_name(i), record);
    files.push_back(run_file_name(i));
    per_run.push_back(c);
    counts.push_back(c);
  }
  const auto mean = aggregate_first_pass(counts);

  const std::vector<FirstPassRow> rows{{config.dataset, config.name, mean}};
  const auto stem = report_file_stem(config.dataset, "first-pass");
  write_file(out / (stem + ".csv"), render_first_pass_csv(rows));
  write_file(out / (stem + ".txt"), render_first_pass_text(rows));
  files.push_back(stem + ".csv");
  files.push_back(stem + ".txt");
  write_json(out / "first_pass.json", json{{"config_hash", hash},
                                           {"dataset", config.dataset},
                                           {"name", config.name},
                                           {"runs", std::move(per_run)},
                                           {"mean", mean},
                                           {"files", files}});
  return mean;
}

RunDirectory load_run_directory(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw IncompleteExperiment("'" + dir.string() + "' has no manifest.json");
  }
  RunDirectory rd;
  rd.path = dir;
  rd.manifest = read_json(manifest_path);
  if (rd.manifest.value("status", std::string{}) != "complete") {
    throw IncompleteExperiment("experiment in '" + dir.string() + "' is incomplete");
  }
  rd.dataset = rd.manifest.value("dataset", std::string{});
  rd.name = rd.manifest.value("name", dir.filename().string());
  for (const auto& run : rd.manifest.at("runs")) {
    rd.runs.push_back(read_json(dir / run.at("file").get<std::string>()).get<LabelSet>());
  }
  require_same_clusters(rd.runs, dir.string());
  return rd;
}

std::vector<ZReportRow> compare_runs(const RunDirectory& baseline,
                                     const std::vector<RunDirectory>& alternatives,
                                     VectorMode mode, Embedder* embedder, ZFormula formula) {
  std::vector<ZReportRow> rows;
  for (const auto& alt : alternatives) {
    if (alt.dataset != baseline.dataset) {
      spdlog::warn("comparing dataset '{}' against baseline dataset '{}'", alt.dataset, baseline.dataset);
    }
    std::vector<LabelSet> all = baseline.runs;
    all.insert(all.end(), alt.runs.begin(), alt.runs.end());
    require_same_clusters(all, baseline.path.string() + " and " + alt.path.string());
    rows.push_back({baseline.dataset, alt.name, z_score(baseline.runs, alt.runs, mode, embedder, formula)});
  }
  return rows;
}

std::vector<fs::path> write_z_report(const fs::path& out_dir, std::string_view dataset,
                                     std::string_view comparison, std::span<const ZReportRow> rows) {
  fs::create_directories(out_dir);
  const auto stem = report_file_stem(dataset, comparison);
  const auto csv = out_dir / (stem + ".csv");
  const auto txt = out_dir / (stem + ".txt");
  write_file(csv, render_z_csv(rows));
  write_file(txt, render_z_text(rows));
  return {csv, txt};
}

std::vector<fs::path> run_batch_report(const json& spec, const fs::path& base_dir,
                                       const fs::path& out_dir, const ProviderConfig& provider) {
  const auto comparison = spec.value("comparison", std::string("comparison"));
  const auto mode = vector_mode_from_string(spec.value("mode", std::string("embedding")));
  const auto formula = z_formula_from_string(spec.value("formula", std::string("effect-size")));
  if (!spec.contains("datasets") || spec.at("datasets").empty()) {
    throw ValidationError("report spec lists no datasets");
  }

  std::unique_ptr<EmbedderStack> embedder;
  if (mode == VectorMode::embedding) embedder = std::make_unique<EmbedderStack>(provider);

  fs::create_directories(out_dir);
  std::vector<ZReportRow> all_rows;
  std::vector<fs::path> written;
  for (const auto& entry : spec.at("datasets")) {
    const auto baseline = load_run_directory(resolve(base_dir, entry.at("baseline").get<std::string>()));
    std::vector<RunDirectory> alts;
    for (const auto& a : entry.at("alternatives")) {
      alts.push_back(load_run_directory(resolve(base_dir, a.get<std::string>())));
    }
    auto rows = compare_runs(baseline, alts, mode, embedder ? &embedder->get() : nullptr, formula);
    const auto dataset = entry.value("dataset", baseline.dataset);
    for (auto& r : rows) r.dataset = dataset;
    const auto csv = out_dir / (report_file_stem(dataset, comparison) + ".csv");
    write_file(csv, render_z_csv(rows));
    written.push_back(csv);
    all_rows.insert(all_rows.end(), rows.begin(), rows.end());
  }
  const auto txt = out_dir / (report_file_stem("all", comparison) + ".txt");
  write_file(txt, render_z_text(all_rows));
  written.push_back(txt);
  return written;
}

}  // namespace labelforge
