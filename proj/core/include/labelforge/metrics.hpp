#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labelforge/labeler.hpp"
#include "labelforge/providers.hpp"

namespace labelforge {

enum class VectorMode { one_hot, embedding };

const char* to_string(VectorMode mode) noexcept;
VectorMode vector_mode_from_string(std::string_view name);

struct LabelVectorSet {
  std::string run_id;
  std::map<std::string, std::vector<double>> vectors;
  VectorMode mode = VectorMode::embedding;
  std::size_t dimension = 0;
};

/// The distinct labels of every set under comparison, in first-seen order.
class OneHotVocabulary {
 public:
  OneHotVocabulary() = default;
  explicit OneHotVocabulary(std::span<const LabelSet> sets);

  void add(const LabelSet& set);
  std::size_t size() const noexcept { return labels_.size(); }
  /// Throws ValidationError for labels outside the vocabulary.
  std::size_t index_of(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> index_;
};

LabelVectorSet vectorize_one_hot(const LabelSet& labels, const OneHotVocabulary& vocabulary);
LabelVectorSet vectorize_embedding(const LabelSet& labels, Embedder& embedder);

struct LabelShiftResult {
  std::string run_a;
  std::string run_b;
  std::map<std::string, double> per_cluster_sim;
  double ls = 0.0;
};

/// Mean cosine similarity of the two sets' vectors, paired by cluster id.
LabelShiftResult label_shift(const LabelVectorSet& a, const LabelVectorSet& b);

enum class ZFormula {
  /// (cross_mean - within_mean) / within_std
  effect_size,
  /// (cross_mean - within_mean) / sqrt(within_std^2/n_within + cross_std^2/n_cross)
  standard_error,
};

const char* to_string(ZFormula formula) noexcept;
ZFormula z_formula_from_string(std::string_view name);

/// Conventional one-sided critical value used to read Z scores.
inline constexpr double kZCritical = -1.645;

struct ZScoreResult {
  double within_mean = 0.0;
  double within_std = 0.0;
  double cross_mean = 0.0;
  double cross_std = 0.0;
  double z = 0.0;
  std::size_t n_within = 0;
  std::size_t n_cross = 0;
  ZFormula formula = ZFormula::effect_size;
};

/// Sample mean and standard deviation (n - 1 denominator; 0 for n = 1).
std::pair<double, double> mean_std(std::span<const double> values);

/// Z from summary statistics. Throws ValidationError when within_std is 0.
double z_from_summary(double within_mean, double within_std, std::size_t n_within,
                      double cross_mean, double cross_std, std::size_t n_cross, ZFormula formula);

/// Within distribution: LS over unordered distinct baseline pairs. Cross
/// distribution: LS over every baseline x alternative pair.
ZScoreResult z_score_vectors(std::span<const LabelVectorSet> baseline,
                             std::span<const LabelVectorSet> alternative,
                             ZFormula formula = ZFormula::effect_size);

/// Vectorizes the runs (one-hot vocabulary spans all of them) and scores.
ZScoreResult z_score(std::span<const LabelSet> baseline, std::span<const LabelSet> alternative,
                     VectorMode mode, Embedder* embedder,
                     ZFormula formula = ZFormula::effect_size);

/// Arithmetic means across runs; runs sums the inputs' run counts.
FirstPassCounts aggregate_first_pass(std::span<const FirstPassCounts> runs);

// ---------------------------------------------------------------------------
// Reports

struct ZReportRow {
  std::string dataset;
  std::string group;
  ZScoreResult result;
};

struct FirstPassRow {
  std::string dataset;
  std::string group;
  FirstPassCounts counts;
};

/// Columns: Prompt, Mean, std, Z score. The Z header names the formula.
/// Numbers carry full precision so the file parses back exactly.
std::string render_z_csv(std::span<const ZReportRow> rows, std::string_view group_header = "Prompt");
/// Aligned table with one heading line per dataset, three decimals.
std::string render_z_text(std::span<const ZReportRow> rows, std::string_view group_header = "Prompt");

/// Columns: Prompt, Duplicate, Vague.
std::string render_first_pass_csv(std::span<const FirstPassRow> rows,
                                  std::string_view group_header = "Prompt");
std::string render_first_pass_text(std::span<const FirstPassRow> rows,
                                   std::string_view group_header = "Prompt");

/// File stem "{dataset}_{comparison}" with unsafe characters replaced.
std::string report_file_stem(std::string_view dataset, std::string_view comparison);

}  // namespace labelforge
