#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "labelforge/prompting.hpp"

namespace labelforge {

using ScalarOption = std::variant<bool, std::int64_t, double, std::string>;

/// Model choice plus model-specific generation parameters.
struct GenerationParams {
  std::string model_name = "gpt-4o-2024-05-13";
  double temperature = 0.0;
  int max_output_tokens = 32;
  std::map<std::string, ScalarOption> extra;

  void validate() const;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_name;

  void validate() const;
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Cosine similarity. Throws ValidationError on dimension mismatch or a
/// zero-norm vector.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  /// Raw text of the first completion. Implementations must be safe to call
  /// concurrently.
  virtual std::string complete(const RenderedPrompt& prompt, const GenerationParams& params) = 0;
  virtual std::string identity() const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// Throws ValidationError on empty text; ProviderError on backend failure.
  virtual EmbeddingVector embed(std::string_view text) = 0;
  virtual std::string model_name() const = 0;
};

// ---------------------------------------------------------------------------
// Mocks

enum class MockMode {
  /// Title-cased first two characteristics plus a suffix.
  descriptive,
  /// Wraps the descriptive label in a sentence, so it exceeds 50 characters.
  verbose,
  /// Same string for every prompt.
  duplicate,
  empty,
  over_length,
};

const char* to_string(MockMode mode) noexcept;
MockMode mock_mode_from_string(std::string_view name);

/// Deterministic stand-in for a chat model. Output is a pure function of the
/// seed, temperature and prompt text, so concurrent use is reproducible.
class MockChatProvider final : public ChatProvider {
 public:
  static constexpr std::string_view kDuplicateLabel = "General Science Studies";
  static constexpr std::string_view kVerbosePrefix = "The label that best fits this cluster is ";

  explicit MockChatProvider(MockMode mode = MockMode::descriptive, std::uint64_t seed = 0,
                            bool diversify_on_feedback = false);

  std::string complete(const RenderedPrompt& prompt, const GenerationParams& params) override;
  std::string identity() const override;

  std::size_t calls() const noexcept { return calls_.load(); }

  /// The well-behaved answer for a prompt; the other modes derive from it.
  std::string descriptive_label(const RenderedPrompt& prompt, const GenerationParams& params) const;

 private:
  MockMode mode_;
  std::uint64_t seed_;
  bool diversify_;
  std::atomic<std::size_t> calls_{0};
};

/// Token-hash embedder: each lowercase token maps to a pseudo-random unit
/// vector; a text's embedding is their normalized mean.
class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(std::size_t dimension = 1024, std::string model = "mock-embedding",
                        bool nonnegative = false);

  EmbeddingVector embed(std::string_view text) override;
  std::string model_name() const override { return model_; }

  std::size_t calls() const noexcept { return calls_.load(); }
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  std::size_t dimension_;
  std::string model_;
  bool nonnegative_;
  std::atomic<std::size_t> calls_{0};
};

/// Returns fixed vectors for known texts; anything else is an error. Used to
/// pin embedding geometry in tests.
class FixtureEmbedder final : public Embedder {
 public:
  explicit FixtureEmbedder(std::map<std::string, std::vector<double>> vectors,
                           std::string model = "fixture");

  EmbeddingVector embed(std::string_view text) override;
  std::string model_name() const override { return model_; }

 private:
  std::map<std::string, std::vector<double>, std::less<>> vectors_;
  std::string model_;
};

// ---------------------------------------------------------------------------
// HTTP backends

struct ProviderConfig {
  /// "mock" or "openai".
  std::string kind = "mock";
  std::string endpoint_url = "https://api.openai.com/v1";
  /// Name of the environment variable that holds the API key.
  std::string api_key_env = "OPENAI_API_KEY";
  GenerationParams chat_params;
  std::string embedding_model = "text-embedding-3-small";
  std::chrono::milliseconds request_timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{500};
  std::size_t parallelism = 4;
  /// Empty disables the embedding cache.
  std::filesystem::path cache_path;

  MockMode mock_mode = MockMode::descriptive;
  bool mock_diversify_on_feedback = false;
  std::size_t mock_embedding_dim = 1024;

  void validate() const;
};

void to_json(nlohmann::json& j, const GenerationParams& p);
void from_json(const nlohmann::json& j, GenerationParams& p);
void to_json(nlohmann::json& j, const ProviderConfig& c);
void from_json(const nlohmann::json& j, ProviderConfig& c);

/// Shared request machinery for OpenAI-compatible endpoints: key lookup,
/// retries with exponential backoff, and error classification.
class OpenAIClient {
 public:
  explicit OpenAIClient(ProviderConfig config);

  /// POSTs a JSON body to `route` (relative to the endpoint URL) and returns
  /// the parsed response. At most max_retries + 1 attempts.
  nlohmann::json post(std::string_view route, const nlohmann::json& body) const;

  const ProviderConfig& config() const noexcept { return config_; }
  std::size_t attempts() const noexcept { return attempts_.load(); }

 private:
  ProviderConfig config_;
  std::string origin_;
  std::string base_path_;
  mutable std::atomic<std::size_t> attempts_{0};
};

class OpenAIChatProvider final : public ChatProvider {
 public:
  explicit OpenAIChatProvider(ProviderConfig config) : client_(std::move(config)) {}

  std::string complete(const RenderedPrompt& prompt, const GenerationParams& params) override;
  std::string identity() const override;
  const OpenAIClient& client() const noexcept { return client_; }

 private:
  OpenAIClient client_;
};

class OpenAIEmbedder final : public Embedder {
 public:
  explicit OpenAIEmbedder(ProviderConfig config) : client_(std::move(config)) {}

  EmbeddingVector embed(std::string_view text) override;
  std::string model_name() const override { return client_.config().embedding_model; }
  const OpenAIClient& client() const noexcept { return client_; }

 private:
  OpenAIClient client_;
};

// ---------------------------------------------------------------------------
// Embedding cache

/// Persistent (model, text) -> vector store backed by an append-only JSONL
/// file. Safe for concurrent readers and writers.
class EmbeddingCache {
 public:
  /// Empty path gives an in-memory cache.
  explicit EmbeddingCache(std::filesystem::path path = {});

  std::optional<EmbeddingVector> get(const std::string& model, std::string_view text) const;
  /// Stores in memory and appends to disk. Throws Error if the disk write
  /// fails; the in-memory entry is kept either way.
  void put(const std::string& model, std::string_view text, const EmbeddingVector& vector);

  std::size_t size() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  static std::string key(const std::string& model, std::string_view text);

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, EmbeddingVector> entries_;
};

/// Embedder decorator that consults a cache before calling the backend.
class CachedEmbedder final : public Embedder {
 public:
  CachedEmbedder(Embedder& inner, EmbeddingCache& cache) : inner_(inner), cache_(cache) {}

  EmbeddingVector embed(std::string_view text) override;
  std::string model_name() const override { return inner_.model_name(); }

 private:
  Embedder& inner_;
  EmbeddingCache& cache_;
};

std::unique_ptr<ChatProvider> make_chat_provider(const ProviderConfig& config, std::uint64_t seed);
std::unique_ptr<Embedder> make_embedder(const ProviderConfig& config);

}  // namespace labelforge
