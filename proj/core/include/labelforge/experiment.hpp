#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "labelforge/characteristics.hpp"
#include "labelforge/labeler.hpp"
#include "labelforge/metrics.hpp"
#include "labelforge/prompting.hpp"
#include "labelforge/providers.hpp"

namespace labelforge {

struct ExperimentConfig {
  std::string dataset = "dataset";
  /// Row label for this configuration in comparison reports.
  std::string name = "baseline";
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> assignments;
  CharacteristicsConfig characteristics;
  TemplateVariant template_variant = TemplateVariant::system;
  std::optional<std::filesystem::path> template_file;
  /// Overrides the template's clause order when set.
  std::optional<std::vector<ClauseKind>> clauses;
  ProviderConfig provider;
  LoopConfig loop;
  int n_runs = 10;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Relative paths in the file are resolved against the file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// The template the config selects, with any clause override applied.
PromptTemplate resolve_template(const ExperimentConfig& config);

/// Hash of every field that can change results. Input files contribute their
/// contents rather than their paths; output and cache locations and
/// parallelism are excluded.
std::string config_hash(const ExperimentConfig& config);

struct ExperimentOutcome {
  std::filesystem::path output_dir;
  std::string config_hash;
  int runs_completed = 0;
  bool complete = false;
  /// Set when a provider failure stopped the experiment.
  std::optional<std::string> error;
};

/// Executes n_runs labeling runs with seeds seed + index and writes
///   manifest.json, characteristics.json, runs/run-NNN.json
/// under output_dir. A provider failure stops the experiment; finished runs
/// and the partial run are kept and the manifest is marked incomplete.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// One first-pass generation per run; writes per-run label files, a
/// first_pass.json summary, and {dataset}_first-pass.{csv,txt}.
FirstPassCounts run_first_pass_experiment(const ExperimentConfig& config);

struct RunDirectory {
  std::filesystem::path path;
  nlohmann::json manifest;
  std::string dataset;
  std::string name;
  std::vector<LabelSet> runs;
};

/// Loads a finished experiment. Throws IncompleteExperiment when the
/// manifest is missing or not complete.
RunDirectory load_run_directory(const std::filesystem::path& dir);

/// Z score of each alternative directory against the baseline directory.
std::vector<ZReportRow> compare_runs(const RunDirectory& baseline,
                                     const std::vector<RunDirectory>& alternatives,
                                     VectorMode mode, Embedder* embedder, ZFormula formula);

/// Writes {stem}.csv and {stem}.txt into out_dir and returns their paths.
std::vector<std::filesystem::path> write_z_report(const std::filesystem::path& out_dir,
                                                  std::string_view dataset,
                                                  std::string_view comparison,
                                                  std::span<const ZReportRow> rows);

/// Batch report over several datasets, read from a JSON spec:
///   {"comparison": "prompts", "mode": "embedding", "formula": "effect-size",
///    "datasets": [{"dataset": "...", "baseline": dir, "alternatives": [dir, ...]}]}
/// Writes one CSV per dataset and one grouped text report.
std::vector<std::filesystem::path> run_batch_report(const nlohmann::json& spec,
                                                    const std::filesystem::path& base_dir,
                                                    const std::filesystem::path& out_dir,
                                                    const ProviderConfig& provider);

/// Process exit codes used by the command-line tool.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int invalid = 1;
inline constexpr int provider = 2;
inline constexpr int incomplete = 3;
}  // namespace exit_code

}  // namespace labelforge
