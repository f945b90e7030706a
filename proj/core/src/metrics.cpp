#include "labelforge/metrics.hpp"

#include <cmath>
#include <numeric>
#include <tuple>

#include "labelforge/error.hpp"

namespace labelforge {

const char* to_string(VectorMode mode) noexcept {
  return mode == VectorMode::one_hot ? "one-hot" : "embedding";
}

VectorMode vector_mode_from_string(std::string_view name) {
  if (name == "one-hot" || name == "one_hot" || name == "onehot") return VectorMode::one_hot;
  if (name == "embedding") return VectorMode::embedding;
  throw ValidationError("unknown vector mode '" + std::string(name) + "'");
}

const char* to_string(ZFormula formula) noexcept {
  return formula == ZFormula::effect_size ? "effect-size" : "standard-error";
}

ZFormula z_formula_from_string(std::string_view name) {
  if (name == "effect-size" || name == "effect_size") return ZFormula::effect_size;
  if (name == "standard-error" || name == "standard_error") return ZFormula::standard_error;
  throw ValidationError("unknown z formula '" + std::string(name) + "'");
}

OneHotVocabulary::OneHotVocabulary(std::span<const LabelSet> sets) {
  for (const auto& s : sets) add(s);
}

void OneHotVocabulary::add(const LabelSet& set) {
  for (const auto& [cid, label] : set.labels) {
    if (index_.emplace(label, labels_.size()).second) labels_.push_back(label);
  }
}

std::size_t OneHotVocabulary::index_of(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) {
    throw ValidationError("label '" + label + "' is not in the one-hot vocabulary");
  }
  return it->second;
}

LabelVectorSet vectorize_one_hot(const LabelSet& labels, const OneHotVocabulary& vocabulary) {
  LabelVectorSet out;
  out.run_id = labels.run_id;
  out.mode = VectorMode::one_hot;
  out.dimension = vocabulary.size();
  for (const auto& [cid, label] : labels.labels) {
    std::vector<double> v(vocabulary.size(), 0.0);
    v[vocabulary.index_of(label)] = 1.0;
    out.vectors.emplace(cid, std::move(v));
  }
  return out;
}

LabelVectorSet vectorize_embedding(const LabelSet& labels, Embedder& embedder) {
  LabelVectorSet out;
  out.run_id = labels.run_id;
  out.mode = VectorMode::embedding;
  for (const auto& [cid, label] : labels.labels) {
    auto v = embedder.embed(label);
    v.validate();
    if (out.dimension == 0) out.dimension = v.values.size();
    if (v.values.size() != out.dimension) {
      throw ValidationError("embedding dimension changed within one label set");
    }
    out.vectors.emplace(cid, std::move(v.values));
  }
  return out;
}

LabelShiftResult label_shift(const LabelVectorSet& a, const LabelVectorSet& b) {
  if (a.mode != b.mode) throw ValidationError("label sets were vectorized in different modes");
  if (a.dimension != b.dimension) throw ValidationError("label sets have different dimensions");
  if (a.vectors.size() != b.vectors.size()) {
    throw ValidationError("label sets '" + a.run_id + "' and '" + b.run_id +
                          "' cover different numbers of clusters");
  }
  if (a.vectors.empty()) throw ValidationError("label shift of empty label sets");

  LabelShiftResult out;
  out.run_a = a.run_id;
  out.run_b = b.run_id;
  double sum = 0.0;
  for (const auto& [cid, va] : a.vectors) {
    auto it = b.vectors.find(cid);
    if (it == b.vectors.end()) {
      throw ValidationError("cluster '" + cid + "' missing from label set '" + b.run_id + "'");
    }
    const double sim = cosine_similarity(va, it->second);
    out.per_cluster_sim.emplace(cid, sim);
    sum += sim;
  }
  out.ls = sum / static_cast<double>(a.vectors.size());
  return out;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

double z_from_summary(double within_mean, double within_std, std::size_t n_within,
                      double cross_mean, double cross_std, std::size_t n_cross, ZFormula formula) {
  if (!(within_std > 0.0)) {
    throw ValidationError(
        "baseline runs have zero label-shift variance; check for degenerate (identical) runs");
  }
  const double diff = cross_mean - within_mean;
  if (formula == ZFormula::effect_size) return diff / within_std;
  const double se = std::sqrt(within_std * within_std / static_cast<double>(n_within) +
                              cross_std * cross_std / static_cast<double>(n_cross));
  return diff / se;
}

ZScoreResult z_score_vectors(std::span<const LabelVectorSet> baseline,
                             std::span<const LabelVectorSet> alternative, ZFormula formula) {
  if (baseline.size() < 2) throw ValidationError("z score needs at least 2 baseline runs");
  if (alternative.empty()) throw ValidationError("z score needs at least 1 alternative run");

  std::vector<double> within;
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    for (std::size_t j = i + 1; j < baseline.size(); ++j) {
      within.push_back(label_shift(baseline[i], baseline[j]).ls);
    }
  }
  std::vector<double> cross;
  for (const auto& b : baseline) {
    for (const auto& a : alternative) {
      // A run is never paired with itself.
      if (!b.run_id.empty() && b.run_id == a.run_id) continue;
      cross.push_back(label_shift(b, a).ls);
    }
  }
  if (cross.empty()) throw ValidationError("no cross pairs: alternative runs equal baseline runs");

  ZScoreResult r;
  r.formula = formula;
  std::tie(r.within_mean, r.within_std) = mean_std(within);
  std::tie(r.cross_mean, r.cross_std) = mean_std(cross);
  r.n_within = within.size();
  r.n_cross = cross.size();
  r.z = z_from_summary(r.within_mean, r.within_std, r.n_within, r.cross_mean, r.cross_std,
                       r.n_cross, formula);
  return r;
}

ZScoreResult z_score(std::span<const LabelSet> baseline, std::span<const LabelSet> alternative,
                     VectorMode mode, Embedder* embedder, ZFormula formula) {
  std::vector<LabelVectorSet> bv;
  std::vector<LabelVectorSet> av;
  if (mode == VectorMode::one_hot) {
    OneHotVocabulary vocab(baseline);
    for (const auto& s : alternative) vocab.add(s);
    for (const auto& s : baseline) bv.push_back(vectorize_one_hot(s, vocab));
    for (const auto& s : alternative) av.push_back(vectorize_one_hot(s, vocab));
  } else {
    if (embedder == nullptr) throw ValidationError("embedding mode requires an embedder");
    for (const auto& s : baseline) bv.push_back(vectorize_embedding(s, *embedder));
    for (const auto& s : alternative) av.push_back(vectorize_embedding(s, *embedder));
  }
  return z_score_vectors(bv, av, formula);
}

FirstPassCounts aggregate_first_pass(std::span<const FirstPassCounts> runs) {
  if (runs.empty()) throw ValidationError("aggregate_first_pass needs at least one run");
  FirstPassCounts out{0.0, 0.0, 0};
  for (const auto& r : runs) {
    out.duplicates += r.duplicates;
    out.vague += r.vague;
    out.runs += r.runs;
  }
  out.duplicates /= static_cast<double>(runs.size());
  out.vague /= static_cast<double>(runs.size());
  return out;
}

}  // namespace labelforge
