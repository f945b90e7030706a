// labelforge command-line front end.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "labelforge/annotation.hpp"
#include "labelforge/characteristics.hpp"
#include "labelforge/corpus.hpp"
#include "labelforge/error.hpp"
#include "labelforge/experiment.hpp"
#include "labelforge/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace labelforge;

namespace {

struct ConfigOverrides {
  std::string config;
  std::optional<int> n_runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> corpus;
  std::optional<std::string> name;
  std::optional<double> temperature;
  std::optional<std::string> mock_mode;
  std::optional<int> max_iterations;
};

void add_config_options(CLI::App* cmd, ConfigOverrides& o) {
  cmd->add_option("-c,--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--runs", o.n_runs, "number of runs");
  cmd->add_option("--seed", o.seed, "base seed; run i uses seed + i");
  cmd->add_option("--output-dir", o.output_dir, "output directory");
  cmd->add_option("--corpus", o.corpus, "corpus JSONL");
  cmd->add_option("--name", o.name, "configuration name used in reports");
  cmd->add_option("--temperature", o.temperature, "sampling temperature");
  cmd->add_option("--mock-mode", o.mock_mode, "mock provider behaviour");
  cmd->add_option("--max-iterations", o.max_iterations, "validation loop cap");
}

ExperimentConfig resolve_config(const ConfigOverrides& o) {
  auto c = load_experiment_config(o.config);
  if (o.n_runs) c.n_runs = *o.n_runs;
  if (o.seed) c.seed = *o.seed;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.corpus) c.corpus = *o.corpus;
  if (o.name) c.name = *o.name;
  if (o.temperature) c.provider.chat_params.temperature = *o.temperature;
  if (o.mock_mode) c.provider.mock_mode = mock_mode_from_string(*o.mock_mode);
  if (o.max_iterations) c.loop.max_iterations = *o.max_iterations;
  c.validate();
  return c;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ValidationError("--bind expects host:port");
  try {
    return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ValidationError("invalid port in --bind '" + bind + "'");
  }
}

AnnotationServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster labeling toolkit: characteristics, LLM labels, evaluation, annotation"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic clustered corpus");
  SyntheticSpec spec;
  std::string synth_out;
  synth->add_option("--seed", spec.seed, "generator seed");
  synth->add_option("--clusters", spec.n_clusters, "number of clusters");
  synth->add_option("--docs-per-cluster", spec.docs_per_cluster, "documents per cluster");
  synth->add_option("--vocab-per-cluster", spec.vocab_per_cluster, "distinct terms per cluster");
  synth->add_option("--shared-vocab", spec.shared_vocab, "terms common to every cluster");
  synth->add_option("--out", synth_out, "output JSONL")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate a corpus and print a summary");
  std::string corpus_path;
  std::optional<std::string> assignments_path;
  std::optional<std::string> ingest_out;
  ingest->add_option("--corpus", corpus_path, "corpus JSONL")->required()->check(CLI::ExistingFile);
  ingest->add_option("--assignments", assignments_path, "separate {id, cluster_id} JSONL")
      ->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "write the normalized corpus here");

  // characterize
  auto* characterize = app.add_subcommand("characterize", "rank concepts, venues, and papers per cluster");
  CharacteristicsConfig chars_cfg;
  std::string idf = "plain";
  std::string chars_out;
  characterize->add_option("--corpus", corpus_path, "corpus JSONL")->required()->check(CLI::ExistingFile);
  characterize->add_option("--assignments", assignments_path, "separate assignments JSONL")
      ->check(CLI::ExistingFile);
  characterize->add_option("--concepts", chars_cfg.n_concepts, "concepts per cluster");
  characterize->add_option("--venues", chars_cfg.n_venues, "venues per cluster");
  characterize->add_option("--papers", chars_cfg.n_papers, "papers per cluster");
  characterize->add_option("--threshold", chars_cfg.relevance_threshold, "minimum concept relevance");
  characterize->add_option("--idf", idf, "plain|smoothed")->check(CLI::IsMember({"plain", "smoothed"}));
  characterize->add_option("--out", chars_out, "output JSON")->required();

  // label / first-pass
  auto* label = app.add_subcommand("label", "run labeling experiments with validation");
  ConfigOverrides label_opts;
  add_config_options(label, label_opts);
  auto* first = app.add_subcommand("first-pass", "count duplicate and vague first-pass labels");
  ConfigOverrides first_opts;
  add_config_options(first, first_opts);

  // compare
  auto* compare = app.add_subcommand("compare", "Z score of alternative runs against a baseline");
  std::string baseline_dir;
  std::vector<std::string> alternative_dirs;
  std::string mode_name = "embedding";
  std::string formula_name = "effect-size";
  std::string comparison = "compare";
  std::string compare_out = ".";
  compare->add_option("--baseline", baseline_dir, "baseline run directory")->required();
  compare->add_option("--alternative", alternative_dirs, "alternative run directory")->required();
  compare->add_option("--mode", mode_name, "embedding|one-hot");
  compare->add_option("--formula", formula_name, "effect-size|standard-error");
  compare->add_option("--comparison", comparison, "comparison name used in file names");
  compare->add_option("--out", compare_out, "report directory");

  // report
  auto* report = app.add_subcommand("report", "batch comparison report over several datasets");
  std::string report_spec;
  std::string report_out = ".";
  report->add_option("--spec", report_spec, "report spec (JSON)")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "report directory");

  // annotate
  auto* annotate = app.add_subcommand("annotate", "multiple-choice label quiz");
  annotate->require_subcommand(1);
  auto* a_build = annotate->add_subcommand("build", "build quiz tasks");
  std::string labels_path;
  std::string chars_path;
  std::string dataset = "dataset";
  std::uint64_t quiz_seed = 0;
  std::size_t quiz_n = 50;
  std::string kind_name = "both";
  std::string tasks_path;
  a_build->add_option("--corpus", corpus_path, "corpus JSONL")->required()->check(CLI::ExistingFile);
  a_build->add_option("--assignments", assignments_path, "separate assignments JSONL");
  a_build->add_option("--labels", labels_path, "run file with descriptive labels")->check(CLI::ExistingFile);
  a_build->add_option("--characteristics", chars_path, "characteristics JSON")->check(CLI::ExistingFile);
  a_build->add_option("--dataset", dataset, "dataset name");
  a_build->add_option("--seed", quiz_seed, "sampling seed");
  a_build->add_option("-n,--clusters", quiz_n, "clusters to sample");
  a_build->add_option("--kind", kind_name, "characteristic|descriptive|both")
      ->check(CLI::IsMember({"characteristic", "descriptive", "both"}));
  a_build->add_option("--out", tasks_path, "tasks JSONL")->required();

  auto* a_serve = annotate->add_subcommand("serve", "serve the quiz over HTTP");
  std::string responses_path = "responses.jsonl";
  std::string bind = "127.0.0.1:8080";
  std::string static_dir;
  a_serve->add_option("--tasks", tasks_path, "tasks JSONL")->required()->check(CLI::ExistingFile);
  a_serve->add_option("--responses", responses_path, "response log JSONL");
  a_serve->add_option("--bind", bind, "host:port");
  a_serve->add_option("--static", static_dir, "quiz UI assets");

  auto* a_report = annotate->add_subcommand("report", "accuracy and agreement from recorded responses");
  std::optional<std::string> a_report_out;
  a_report->add_option("--tasks", tasks_path, "tasks JSONL")->required()->check(CLI::ExistingFile);
  a_report->add_option("--responses", responses_path, "response log JSONL")->check(CLI::ExistingFile);
  a_report->add_option("--out", a_report_out, "write the summary JSON here");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("labelforge"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    const auto assignments = assignments_path ? std::optional<fs::path>(*assignments_path) : std::nullopt;

    if (*synth) {
      auto generated = synthesize_corpus(spec);
      save_corpus(synth_out, generated.corpus);
      spdlog::info("wrote {} documents in {} clusters to {}", generated.corpus.documents().size(),
                   generated.corpus.cluster_ids().size(), synth_out);
    } else if (*ingest) {
      IngestReport rep;
      auto corpus = load_corpus(corpus_path, assignments, &rep);
      json sizes = json::object();
      for (const auto& cid : corpus.cluster_ids()) sizes[cid] = corpus.cluster_size(cid);
      std::cout << json{{"documents", corpus.documents().size()},
                        {"clusters", corpus.cluster_ids().size()},
                        {"noise_dropped", rep.noise_dropped},
                        {"small_clusters", rep.small_clusters},
                        {"cluster_sizes", sizes}}
                       .dump(2)
                << '\n';
      if (ingest_out) save_corpus(*ingest_out, corpus);
    } else if (*characterize) {
      chars_cfg.idf = idf == "plain" ? IdfVariant::plain : IdfVariant::smoothed;
      chars_cfg.validate();
      auto corpus = load_corpus(corpus_path, assignments);
      save_characteristics(chars_out, extract_characteristics(corpus, chars_cfg));
    } else if (*label) {
      auto outcome = run_experiment(resolve_config(label_opts));
      std::cout << outcome.output_dir.string() << '\n';
      if (!outcome.complete) {
        spdlog::error("experiment incomplete after {} runs: {}", outcome.runs_completed,
                      outcome.error.value_or("unknown error"));
        return exit_code::provider;
      }
    } else if (*first) {
      auto mean = run_first_pass_experiment(resolve_config(first_opts));
      std::cout << json(mean).dump() << '\n';
    } else if (*compare) {
      const auto mode = vector_mode_from_string(mode_name);
      const auto formula = z_formula_from_string(formula_name);
      auto base = load_run_directory(baseline_dir);
      std::vector<RunDirectory> alts;
      for (const auto& d : alternative_dirs) alts.push_back(load_run_directory(d));
      std::unique_ptr<Embedder> embedder;
      std::unique_ptr<EmbeddingCache> cache;
      std::unique_ptr<CachedEmbedder> cached;
      if (mode == VectorMode::embedding) {
        auto provider = base.manifest.at("config").at("provider").get<ProviderConfig>();
        embedder = make_embedder(provider);
        cache = std::make_unique<EmbeddingCache>();
        cached = std::make_unique<CachedEmbedder>(*embedder, *cache);
      }
      auto rows = compare_runs(base, alts, mode, cached.get(), formula);
      for (const auto& path : write_z_report(compare_out, base.dataset, comparison, rows)) {
        std::cout << path.string() << '\n';
      }
    } else if (*report) {
      const auto spec_json = read_json_file(report_spec);
      ProviderConfig provider;
      if (auto it = spec_json.find("provider"); it != spec_json.end()) provider = it->get<ProviderConfig>();
      for (const auto& path :
           run_batch_report(spec_json, fs::path(report_spec).parent_path(), report_out, provider)) {
        std::cout << path.string() << '\n';
      }
    } else if (*a_build) {
      auto corpus = load_corpus(corpus_path, assignments);
      auto chars = chars_path.empty() ? extract_characteristics(corpus, CharacteristicsConfig{})
                                      : load_characteristics(chars_path);
      LabelSet descriptive;
      if (!labels_path.empty()) descriptive = read_json_file(labels_path).get<LabelSet>();
      std::vector<AnnotationTask> tasks;
      for (auto kind : {LabelKind::characteristic, LabelKind::descriptive}) {
        if (kind_name != "both" && kind_name != to_string(kind)) continue;
        if (kind == LabelKind::descriptive && labels_path.empty()) {
          throw ValidationError("descriptive tasks need --labels");
        }
        auto built = build_tasks(corpus, chars, descriptive, {dataset, quiz_seed, quiz_n, kind});
        tasks.insert(tasks.end(), built.begin(), built.end());
      }
      save_tasks(tasks_path, tasks);
      spdlog::info("wrote {} tasks to {}", tasks.size(), tasks_path);
    } else if (*a_serve) {
      auto tasks = load_tasks(tasks_path);
      ResponseStore store(responses_path);
      AnnotationServer server(std::move(tasks), store, static_dir);
      const auto [host, port] = parse_bind(bind);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      spdlog::info("serving quiz on http://{}:{}/", host, port);
      server.run(host, port);
      g_server = nullptr;
    } else if (*a_report) {
      auto tasks = load_tasks(tasks_path);
      auto responses = fs::exists(responses_path) ? load_responses(responses_path)
                                                  : std::vector<AnnotationResponse>{};
      const auto summary = summarize(tasks, responses).dump(2) + "\n";
      if (a_report_out) {
        std::ofstream(*a_report_out) << summary;
      } else {
        std::cout << summary;
      }
    }
  } catch (const IncompleteExperiment& e) {
    spdlog::error("{}", e.what());
    return exit_code::incomplete;
  } catch (const ProviderError& e) {
    spdlog::error("provider failure ({}): {}", to_string(e.kind()), e.what());
    return exit_code::provider;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return exit_code::invalid;
  }
  return exit_code::ok;
}
