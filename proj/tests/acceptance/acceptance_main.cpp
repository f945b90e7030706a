// Acceptance checks, one line per criterion. Exit status is nonzero if any
// criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/annotation.hpp"
#include "labelforge/characteristics.hpp"
#include "labelforge/corpus.hpp"
#include "labelforge/experiment.hpp"
#include "labelforge/labeler.hpp"
#include "labelforge/metrics.hpp"
#include "test_support.hpp"

using namespace labelforge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and limits.
constexpr int kMaxIterations = 10;
constexpr double kLoopSeconds = 5.0;
constexpr int kFormatSamples = 10000;
constexpr int kOracleCorpora = 200;
constexpr double kOracleAggregateTol = 1e-12;
constexpr double kIdentityTol = 1e-9;
constexpr double kSymmetryTol = 1e-12;
constexpr int kShiftPairs = 100;
constexpr double kZeroZTol = 1e-9;
constexpr double kAccuracyTol = 1e-12;
constexpr int kRandomTasks = 10000;
constexpr double kChance = 0.25;
constexpr double kChanceTol = 0.03;
constexpr double kPipelineSeconds = 60.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome loop_soundness() {
  const auto synth = synthesize_corpus({2024, 100, 6, 10, 2});
  const auto chars = extract_characteristics(synth.corpus, CharacteristicsConfig{});
  const auto tpl = default_template(TemplateVariant::system);
  LoopConfig cfg;
  cfg.max_iterations = kMaxIterations;
  MockEmbedder embedder;
  Outcome out;
  double slowest = 0.0;
  struct Case {
    MockMode mode;
    bool diversify;
  };
  for (const Case c : {Case{MockMode::duplicate, false}, Case{MockMode::verbose, false},
                       Case{MockMode::duplicate, true}, Case{MockMode::verbose, true}}) {
    MockChatProvider mock(c.mode, 1, c.diversify);
    const auto start = Clock::now();
    const auto result = generate_labels(synth.corpus, chars, tpl, mock, {}, cfg, &embedder);
    slowest = std::max(slowest, seconds_since(start));
    const int iterations = static_cast<int>(result.reports.size());
    if (iterations < 1 || iterations > kMaxIterations) out.pass = false;
    if (result.reports.back().empty() && !validate_labels(result.labels, chars, cfg, &embedder).empty()) {
      out.pass = false;
    }
    // The diversifying mocks answer feedback well and must converge.
    if (c.diversify && !result.reports.back().empty()) out.pass = false;
    out.detail += std::string(to_string(c.mode)) + (c.diversify ? "+diversify" : "") + "=" +
                  std::to_string(iterations) + " it; ";
  }
  if (slowest >= kLoopSeconds) out.pass = false;
  out.detail += fmt("slowest %.2fs on 100 clusters", slowest);
  return out;
}

Outcome format_boundaries() {
  Rng rng(77);
  LoopConfig cfg;
  int mismatches = 0;
  int boundary_hits = 0;
  for (int i = 0; i < kFormatSamples; ++i) {
    const auto n = rng.below(64);
    const auto s = lf_test::random_utf8(rng, n);
    const bool expected = n >= 3 && n <= 50;
    if (check_format(s, cfg) != expected) ++mismatches;
    if (n == 2 || n == 3 || n == 50 || n == 51) ++boundary_hits;
  }
  return {mismatches == 0 && boundary_hits > 0,
          std::to_string(mismatches) + " mismatches over " + std::to_string(kFormatSamples) +
              " strings, " + std::to_string(boundary_hits) + " at boundaries"};
}

Outcome tfidf_oracle() {
  Rng rng(2023);
  int exact_failures = 0;
  double worst_sum = 0.0;
  for (int i = 0; i < kOracleCorpora; ++i) {
    const auto corpus = lf_test::random_small_corpus(rng);
    CharacteristicsConfig cfg;
    cfg.relevance_threshold = static_cast<double>(rng.below(11)) / 10.0;
    cfg.idf = rng.below(2) == 0 ? IdfVariant::plain : IdfVariant::smoothed;
    const auto got = score_concepts_tfidf(corpus, cfg);
    const auto want = lf_test::tfidf_oracle(corpus, cfg);
    if (got.size() != want.size()) {
      ++exact_failures;
      continue;
    }
    for (const auto& [cid, terms] : want) {
      const auto& ranked = got.at(cid);
      if (ranked.size() != terms.size()) {
        ++exact_failures;
        continue;
      }
      double sum_got = 0.0;
      double sum_want = 0.0;
      for (const auto& s : ranked) {
        if (s.tfidf != terms.at(s.term)) ++exact_failures;
        sum_got += s.tfidf;
      }
      for (const auto& [term, v] : terms) sum_want += v;
      worst_sum = std::max(worst_sum, std::abs(sum_got - sum_want));
    }
  }
  return {exact_failures == 0 && worst_sum <= kOracleAggregateTol,
          std::to_string(exact_failures) + " score mismatches over " + std::to_string(kOracleCorpora) +
              " corpora" + fmt("; aggregate diff %.1e", worst_sum)};
}

Outcome label_shift_checks() {
  Rng rng(31);
  MockEmbedder embedder;
  double worst_identity = 0.0;
  double worst_symmetry = 0.0;
  int onehot_mismatch = 0;
  for (int i = 0; i < kShiftPairs; ++i) {
    const auto n = 1 + rng.below(15);
    std::vector<std::string> a, b;
    std::size_t same = 0;
    for (std::size_t k = 0; k < n; ++k) {
      a.push_back("Label " + std::to_string(rng.below(5)));
      b.push_back(rng.below(3) == 0 ? lf_test::random_utf8(rng, 3 + rng.below(12))
                                    : "Label " + std::to_string(rng.below(5)));
      if (a.back() == b.back()) ++same;
    }
    const auto sa = lf_test::make_label_set("a", a);
    const auto sb = lf_test::make_label_set("b", b);
    const std::vector<LabelSet> both{sa, sb};
    const OneHotVocabulary vocab(both);
    const auto ha = vectorize_one_hot(sa, vocab);
    const auto hb = vectorize_one_hot(sb, vocab);
    if (label_shift(ha, hb).ls != static_cast<double>(same) / static_cast<double>(n)) ++onehot_mismatch;
    const auto ea = vectorize_embedding(sa, embedder);
    const auto eb = vectorize_embedding(sb, embedder);
    worst_identity = std::max(worst_identity, std::abs(label_shift(ea, ea).ls - 1.0));
    worst_identity = std::max(worst_identity, std::abs(label_shift(ha, ha).ls - 1.0));
    worst_symmetry = std::max(worst_symmetry, std::abs(label_shift(ea, eb).ls - label_shift(eb, ea).ls));
    worst_symmetry = std::max(worst_symmetry, std::abs(label_shift(ha, hb).ls - label_shift(hb, ha).ls));
  }
  return {onehot_mismatch == 0 && worst_identity <= kIdentityTol && worst_symmetry <= kSymmetryTol,
          std::to_string(onehot_mismatch) + " one-hot mismatches" +
              fmt("; identity err %.1e; symmetry err %.1e", worst_identity, worst_symmetry)};
}

/// Labels for `n_runs` seeds from the descriptive mock at a nonzero temperature.
std::vector<LabelSet> mock_runs(const SyntheticCorpus& synth, const std::vector<ClusterCharacteristics>& chars,
                                int n_runs, std::uint64_t seed0, const std::string& prefix) {
  GenerationParams params;
  params.temperature = 0.7;
  MockEmbedder embedder;
  std::vector<LabelSet> runs;
  for (int r = 0; r < n_runs; ++r) {
    MockChatProvider mock(MockMode::descriptive, seed0 + static_cast<std::uint64_t>(r), true);
    runs.push_back(generate_labels(synth.corpus, chars, default_template(TemplateVariant::system), mock, params,
                                   LoopConfig{}, &embedder, prefix + std::to_string(r))
                       .labels);
  }
  return runs;
}

Outcome z_behavior() {
  const auto synth = synthesize_corpus({99, 30, 6, 10, 0});
  const auto chars = extract_characteristics(synth.corpus, CharacteristicsConfig{});
  const auto baseline = mock_runs(synth, chars, 10, 1000, "base-");
  MockEmbedder embedder;
  const double z0 = z_score(baseline, baseline, VectorMode::embedding, &embedder).z;

  // Perturbation: a fraction eps of clusters take another cluster's label.
  const auto& ids = synth.corpus.cluster_ids();
  std::vector<double> zs;
  const std::vector<double> levels{0.1, 0.3, 0.6};
  for (double eps : levels) {
    auto alt = mock_runs(synth, chars, 10, 2000, "alt-");
    Rng rng(mix_seed(7, static_cast<std::uint64_t>(eps * 1000)));
    for (auto& run : alt) {
      const auto original = run.labels;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (rng.uniform() < eps) run.labels[ids[i]] = original.at(ids[(i + 1 + rng.below(ids.size() - 1)) % ids.size()]);
      }
    }
    zs.push_back(z_score(baseline, alt, VectorMode::embedding, &embedder).z);
  }
  const bool monotone = zs[0] > zs[1] && zs[1] > zs[2];
  return {std::abs(z0) <= kZeroZTol && monotone,
          fmt("self z=%.2e; ", z0) + fmt("eps 0.1/0.3/0.6 -> z %.3f > %.3f > %.3f", zs[0], zs[1], zs[2])};
}

Outcome first_pass_counts() {
  Outcome out;
  MockEmbedder embedder;
  for (std::size_t k : {4u, 10u, 25u}) {
    const auto synth = synthesize_corpus({5, k, 4, 8, 0});
    const auto chars = extract_characteristics(synth.corpus, CharacteristicsConfig{});
    MockChatProvider mock(MockMode::duplicate);
    const auto [labels, counts] =
        first_pass(synth.corpus, chars, default_template(TemplateVariant::system), mock, {}, embedder);
    if (counts.duplicates != static_cast<double>(k)) out.pass = false;
    out.detail += "k=" + std::to_string(k) + " dup=" + fmt("%g", counts.duplicates) + "; ";
  }
  const std::vector<FirstPassCounts> runs{{1, 2, 1}, {0, 0, 1}};
  const auto mean = aggregate_first_pass(runs);
  if (!(mean == FirstPassCounts{0.5, 1.0, 2})) out.pass = false;
  const std::vector<FirstPassCounts> five{{1, 6, 1}, {0, 7, 1}, {1, 6, 1}, {0, 7, 1}, {1, 6, 1}};
  const auto paper = aggregate_first_pass(five);
  if (std::abs(paper.duplicates - 0.6) > 1e-12 || std::abs(paper.vague - 6.4) > 1e-12) out.pass = false;
  const std::vector<FirstPassRow> rows{{"Plant biology", "Papers", paper}};
  const auto text = render_first_pass_text(rows);
  const auto csv = render_first_pass_csv(rows);
  if (text.rfind("Prompt  Duplicate  Vague\n", 0) != 0 || text.find("Papers      0.600  6.400\n") == std::string::npos)
    out.pass = false;
  if (csv.rfind("Prompt,Duplicate,Vague\n", 0) != 0) out.pass = false;
  out.detail += fmt("mean(1,2|0,0)=(%g,%g); columns Prompt|Duplicate|Vague", mean.duplicates, mean.vague);
  return out;
}

std::vector<AnnotationTask> fixture_tasks(std::size_t n) {
  std::vector<AnnotationTask> tasks;
  for (std::size_t i = 0; i < n; ++i) {
    AnnotationTask t;
    t.task_id = "t" + std::to_string(i);
    t.dataset = "Plant biology";
    t.cluster_id = std::to_string(i);
    t.options = {"A", "B", "C", "D"};
    t.correct_index = static_cast<int>((i * 7) % 4);
    tasks.push_back(t);
  }
  return tasks;
}

std::vector<AnnotationResponse> answers(const std::vector<AnnotationTask>& tasks, std::size_t correct,
                                        const std::string& who) {
  std::vector<AnnotationResponse> out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const int key = tasks[i].correct_index;
    out.push_back({tasks[i].task_id, who, i < correct ? key : (key + 2) % 4, ""});
  }
  return out;
}

Outcome annotation_scoring() {
  const auto tasks = fixture_tasks(50);
  const double a39 = score(tasks, answers(tasks, 39, "a"), "a").accuracy;
  const double a35 = score(tasks, answers(tasks, 35, "b"), "b").accuracy;
  const double agree = agreement(tasks, answers(tasks, 50, "a"), answers(tasks, 38, "b"));

  const auto synth = synthesize_corpus({8, 100, 3, 5, 0});
  const auto chars = extract_characteristics(synth.corpus, CharacteristicsConfig{});
  LabelSet labels;
  for (const auto& cid : synth.corpus.cluster_ids()) labels.labels[cid] = "Topic " + cid;
  std::vector<AnnotationTask> sim;
  for (std::uint64_t seed = 0; sim.size() < static_cast<std::size_t>(kRandomTasks); ++seed) {
    auto batch = build_tasks(synth.corpus, chars, labels, {"sim" + std::to_string(seed), seed, 50, LabelKind::descriptive});
    sim.insert(sim.end(), batch.begin(), batch.end());
  }
  sim.resize(kRandomTasks);
  Rng rng(4242);
  std::vector<AnnotationResponse> random;
  for (const auto& t : sim) random.push_back({t.task_id, "random", static_cast<int>(rng.below(4)), ""});
  const double chance = score(sim, random, "random").accuracy;

  const bool pass = std::abs(a39 - 0.78) <= kAccuracyTol && std::abs(a35 - 0.70) <= kAccuracyTol &&
                    std::abs(agree - 0.76) <= kAccuracyTol && std::abs(chance - kChance) <= kChanceTol;
  return {pass, fmt("39/50=%.2f 35/50=%.2f ", a39, a35) + fmt("agreement 38/50=%.2f random=%.4f", agree, chance)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = lf_test::read_file(e.path());
  }
  return out;
}

/// synth -> characterize -> label x10 (two configurations) -> compare -> report.
void pipeline(const fs::path& root) {
  fs::create_directories(root);
  save_corpus(root / "corpus.jsonl", synthesize_corpus({7, 20, 8, 12, 3}).corpus);
  const auto corpus = load_corpus(root / "corpus.jsonl", std::nullopt);
  save_characteristics(root / "characteristics.json", extract_characteristics(corpus, CharacteristicsConfig{}));

  ExperimentConfig base;
  base.dataset = "Synthetic";
  base.name = "Concepts, Papers, Journals";
  base.corpus = root / "corpus.jsonl";
  base.n_runs = 10;
  base.seed = 1;
  base.provider.chat_params.temperature = 0.7;
  base.provider.mock_diversify_on_feedback = true;
  base.output_dir = root / "baseline";
  auto papers = base;
  papers.name = "Papers";
  papers.clauses = std::vector<ClauseKind>{ClauseKind::papers};
  papers.output_dir = root / "papers";
  if (!run_experiment(base).complete || !run_experiment(papers).complete) {
    throw Error("pipeline experiment incomplete");
  }
  const nlohmann::json spec{{"comparison", "prompts"},
                            {"mode", "embedding"},
                            {"datasets", {{{"dataset", "Synthetic"}, {"baseline", "baseline"}, {"alternatives", {"papers"}}}}}};
  run_batch_report(spec, root, root / "reports", base.provider);
}

Outcome end_to_end(const fs::path& scratch) {
  const auto start = Clock::now();
  pipeline(scratch / "first");
  const double first_seconds = seconds_since(start);
  pipeline(scratch / "second");
  const auto a = snapshot(scratch / "first");
  const auto b = snapshot(scratch / "second");
  const bool identical = a == b;
  return {identical && first_seconds < kPipelineSeconds && a.size() > 20,
          std::to_string(a.size()) + " files, " + (identical ? "byte-identical" : "DIFFER") +
              fmt("; one pipeline %.2fs", first_seconds)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  lf_test::TempDir scratch;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"validation-loop soundness", loop_soundness},
      {"format boundaries", format_boundaries},
      {"tf-idf oracle equivalence", tfidf_oracle},
      {"label-shift correctness", label_shift_checks},
      {"z-score behavior", z_behavior},
      {"first-pass counts", first_pass_counts},
      {"annotation scoring", annotation_scoring},
      {"end-to-end reproducibility", [&] { return end_to_end(scratch.path()); }},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
