#include <array>
#include <cmath>
#include <set>

#include "labelforge/error.hpp"
#include "labelforge/providers.hpp"
#include "labelforge/util.hpp"

namespace labelforge {

namespace {

constexpr std::array<std::string_view, 6> kSuffixes = {"Studies",  "Research", "Science",
                                                       "Dynamics", "Systems",  "Theory"};

const std::set<std::string, std::less<>> kTitleStopwords = {"and", "in", "of", "the", "for", "on",
                                                            "with", "a", "an", "to", "systems"};

/// Items of a rendered comma-separated clause, or empty if absent.
std::vector<std::string> clause_items(std::string_view text, std::string_view prefix) {
  const auto pos = text.find(prefix);
  if (pos == std::string_view::npos) return {};
  const auto start = pos + prefix.size();
  auto end = text.find(". ", start);
  if (end == std::string_view::npos) {
    end = text.size();
    if (end > start && text[end - 1] == '.') --end;
  }
  std::vector<std::string> items;
  std::string_view list = text.substr(start, end - start);
  while (!list.empty()) {
    const auto comma = list.find(", ");
    const auto item = trim(list.substr(0, comma));
    if (!item.empty()) items.push_back(item);
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 2);
  }
  return items;
}

std::string title_case(std::string_view phrase) {
  std::string out(phrase);
  bool start = true;
  for (char& c : out) {
    if (start && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    start = c == ' ' || c == '-';
  }
  return out;
}

}  // namespace

const char* to_string(MockMode mode) noexcept {
  switch (mode) {
    case MockMode::descriptive:
      return "descriptive";
    case MockMode::verbose:
      return "verbose";
    case MockMode::duplicate:
      return "duplicate";
    case MockMode::empty:
      return "empty";
    case MockMode::over_length:
      return "over-length";
  }
  return "unknown";
}

MockMode mock_mode_from_string(std::string_view name) {
  if (name == "descriptive") return MockMode::descriptive;
  if (name == "verbose") return MockMode::verbose;
  if (name == "duplicate") return MockMode::duplicate;
  if (name == "empty") return MockMode::empty;
  if (name == "over-length" || name == "over_length") return MockMode::over_length;
  throw ValidationError("unknown mock mode '" + std::string(name) + "'");
}

MockChatProvider::MockChatProvider(MockMode mode, std::uint64_t seed, bool diversify_on_feedback)
    : mode_(mode), seed_(seed), diversify_(diversify_on_feedback) {}

std::string MockChatProvider::identity() const {
  std::string id = std::string("mock/") + to_string(mode_);
  if (diversify_) id += "+diversify";
  return id;
}

std::string MockChatProvider::descriptive_label(const RenderedPrompt& prompt,
                                                const GenerationParams& params) const {
  const std::string_view user = prompt.user;

  auto items = clause_items(user, clause_text::kConcepts);
  if (items.empty()) items = clause_items(user, clause_text::kJournals);
  if (items.empty()) {
    std::set<std::string> seen;
    for (const auto& title : clause_items(user, clause_text::kPapers)) {
      for (const auto& word : tokenize(title)) {
        if (kTitleStopwords.contains(word) || (word[0] >= '0' && word[0] <= '9')) continue;
        if (seen.insert(word).second) items.push_back(word);
      }
    }
  }
  if (items.empty()) items.push_back("general topics");

  std::set<std::string> forbidden;
  for (auto prefix : {clause_text::kFormat, clause_text::kDuplicate, clause_text::kNonspecific}) {
    for (const auto& label : clause_items(user, prefix)) forbidden.insert(ascii_lower(label));
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (items.size() == 1) {
    pairs.emplace_back(0, 0);
  } else {
    // Adjacent ranks first: (0,1), (1,2), ..., then (0,2), (1,3), ...
    for (std::size_t gap = 1; gap < items.size(); ++gap) {
      for (std::size_t i = 0; i + gap < items.size(); ++i) pairs.emplace_back(i, i + gap);
    }
  }

  std::size_t first_pair = 0;
  std::size_t first_suffix = 0;
  if (params.temperature > 0.0) {
    Rng rng(mix_seed(seed_, fnv1a64(user)));
    if (rng.uniform() < std::min(0.9, params.temperature / 2.0)) first_suffix = 1 + rng.below(2);
    if (pairs.size() > 1 && rng.uniform() < std::min(0.5, params.temperature / 4.0)) first_pair = 1;
  }

  const auto render = [&](std::size_t p, std::size_t s) {
    const auto [i, j] = pairs[p];
    std::string label = title_case(items[i]);
    if (j != i) label += " " + title_case(items[j]);
    return label + " " + std::string(kSuffixes[s]);
  };

  const std::size_t n_candidates = pairs.size() * kSuffixes.size();
  const std::size_t start = first_pair * kSuffixes.size() + first_suffix;
  for (std::size_t k = 0; k < n_candidates; ++k) {
    const std::size_t idx = (start + k) % n_candidates;
    auto label = render(idx / kSuffixes.size(), idx % kSuffixes.size());
    if (!forbidden.contains(ascii_lower(label))) return label;
  }
  const auto base = render(first_pair, first_suffix);
  for (std::size_t n = 2;; ++n) {
    auto label = base + " " + std::to_string(n);
    if (!forbidden.contains(ascii_lower(label))) return label;
  }
}

std::string MockChatProvider::complete(const RenderedPrompt& prompt, const GenerationParams& params) {
  ++calls_;
  const bool has_feedback = prompt.user.find(clause_text::kFormat) != std::string::npos ||
                            prompt.user.find(clause_text::kDuplicate) != std::string::npos ||
                            prompt.user.find(clause_text::kNonspecific) != std::string::npos;
  if (diversify_ && has_feedback) return descriptive_label(prompt, params);

  switch (mode_) {
    case MockMode::descriptive:
      return descriptive_label(prompt, params);
    case MockMode::verbose:
      return std::string(kVerbosePrefix) + descriptive_label(prompt, params);
    case MockMode::duplicate:
      return std::string(kDuplicateLabel);
    case MockMode::empty:
      return "";
    case MockMode::over_length:
      return descriptive_label(prompt, params) +
             " And Related Interdisciplinary Topics Across Many Fields";
  }
  return "";
}

MockEmbedder::MockEmbedder(std::size_t dimension, std::string model, bool nonnegative)
    : dimension_(dimension), model_(std::move(model)), nonnegative_(nonnegative) {
  if (dimension_ == 0) throw ValidationError("embedding dimension must be positive");
}

EmbeddingVector MockEmbedder::embed(std::string_view text) {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  ++calls_;
  auto tokens = tokenize(text);
  if (tokens.empty()) tokens.emplace_back(text);

  const std::uint64_t model_hash = fnv1a64(model_);
  std::vector<double> sum(dimension_, 0.0);
  std::vector<double> unit(dimension_);
  for (const auto& token : tokens) {
    Rng rng(mix_seed(model_hash, fnv1a64(token)));
    double norm = 0.0;
    for (auto& v : unit) {
      v = nonnegative_ ? rng.uniform() : 2.0 * rng.uniform() - 1.0;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < dimension_; ++i) sum[i] += unit[i] / norm;
  }
  double norm = 0.0;
  for (double v : sum) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw ProviderError(ProviderError::Kind::bad_response, "degenerate mock embedding");
  for (auto& v : sum) v /= norm;
  return EmbeddingVector{std::move(sum), model_};
}

FixtureEmbedder::FixtureEmbedder(std::map<std::string, std::vector<double>> vectors, std::string model)
    : vectors_(vectors.begin(), vectors.end()), model_(std::move(model)) {}

EmbeddingVector FixtureEmbedder::embed(std::string_view text) {
  auto it = vectors_.find(text);
  if (it == vectors_.end()) {
    throw ProviderError(ProviderError::Kind::bad_response,
                        "no fixture vector for '" + std::string(text) + "'");
  }
  return EmbeddingVector{it->second, model_};
}

}  // namespace labelforge
