#include "labelforge/providers.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "labelforge/error.hpp"

namespace labelforge {

using nlohmann::json;

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (max_output_tokens < 1) throw ValidationError("max_output_tokens must be positive");
}

void EmbeddingVector::validate() const {
  if (values.empty()) throw ValidationError("embedding vector is empty");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("embedding vector has a non-finite value");
  }
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw ValidationError("cosine similarity of vectors with dimensions " +
                          std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine similarity of a zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void ProviderConfig::validate() const {
  if (kind != "mock" && kind != "openai") {
    throw ValidationError("provider kind must be 'mock' or 'openai', got '" + kind + "'");
  }
  if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
  if (mock_embedding_dim < 1) throw ValidationError("mock_embedding_dim must be >= 1");
  chat_params.validate();
}

void to_json(json& j, const GenerationParams& p) {
  json extra = json::object();
  for (const auto& [key, value] : p.extra) {
    std::visit([&](const auto& v) { extra[key] = v; }, value);
  }
  j = json{{"model_name", p.model_name},
           {"temperature", p.temperature},
           {"max_output_tokens", p.max_output_tokens},
           {"extra", std::move(extra)}};
}

void from_json(const json& j, GenerationParams& p) {
  p = GenerationParams{};
  p.model_name = j.value("model_name", p.model_name);
  p.temperature = j.value("temperature", p.temperature);
  p.max_output_tokens = j.value("max_output_tokens", p.max_output_tokens);
  if (auto it = j.find("extra"); it != j.end()) {
    for (const auto& [key, value] : it->items()) {
      if (value.is_boolean()) {
        p.extra[key] = value.get<bool>();
      } else if (value.is_number_integer()) {
        p.extra[key] = value.get<std::int64_t>();
      } else if (value.is_number()) {
        p.extra[key] = value.get<double>();
      } else if (value.is_string()) {
        p.extra[key] = value.get<std::string>();
      } else {
        throw ValidationError("generation option '" + key + "' must be a scalar");
      }
    }
  }
  p.validate();
}

void to_json(json& j, const ProviderConfig& c) {
  j = json{{"kind", c.kind},
           {"endpoint_url", c.endpoint_url},
           {"api_key_env", c.api_key_env},
           {"chat", c.chat_params},
           {"embedding_model", c.embedding_model},
           {"request_timeout_ms", c.request_timeout.count()},
           {"max_retries", c.max_retries},
           {"retry_backoff_ms", c.retry_backoff.count()},
           {"parallelism", c.parallelism},
           {"cache_path", c.cache_path.string()},
           {"mock_mode", to_string(c.mock_mode)},
           {"mock_diversify_on_feedback", c.mock_diversify_on_feedback},
           {"mock_embedding_dim", c.mock_embedding_dim}};
}

void from_json(const json& j, ProviderConfig& c) {
  c = ProviderConfig{};
  c.kind = j.value("kind", c.kind);
  c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  if (auto it = j.find("chat"); it != j.end()) c.chat_params = it->get<GenerationParams>();
  c.embedding_model = j.value("embedding_model", c.embedding_model);
  c.request_timeout = std::chrono::milliseconds(j.value("request_timeout_ms", c.request_timeout.count()));
  c.max_retries = j.value("max_retries", c.max_retries);
  c.retry_backoff = std::chrono::milliseconds(j.value("retry_backoff_ms", c.retry_backoff.count()));
  c.parallelism = j.value("parallelism", c.parallelism);
  c.cache_path = j.value("cache_path", std::string{});
  c.mock_mode = mock_mode_from_string(j.value("mock_mode", std::string("descriptive")));
  c.mock_diversify_on_feedback = j.value("mock_diversify_on_feedback", c.mock_diversify_on_feedback);
  c.mock_embedding_dim = j.value("mock_embedding_dim", c.mock_embedding_dim);
  c.validate();
}

std::unique_ptr<ChatProvider> make_chat_provider(const ProviderConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.kind == "openai") return std::make_unique<OpenAIChatProvider>(config);
  return std::make_unique<MockChatProvider>(config.mock_mode, seed, config.mock_diversify_on_feedback);
}

std::unique_ptr<Embedder> make_embedder(const ProviderConfig& config) {
  config.validate();
  if (config.kind == "openai") return std::make_unique<OpenAIEmbedder>(config);
  return std::make_unique<MockEmbedder>(config.mock_embedding_dim);
}

}  // namespace labelforge
