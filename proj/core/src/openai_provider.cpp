#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/error.hpp"
#include "labelforge/providers.hpp"

namespace labelforge {

using nlohmann::json;

namespace {

std::string snippet(const std::string& body) {
  return body.size() > 200 ? body.substr(0, 200) + "..." : body;
}

}  // namespace

OpenAIClient::OpenAIClient(ProviderConfig config) : config_(std::move(config)) {
  const auto& url = config_.endpoint_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint_url must include a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

json OpenAIClient::post(std::string_view route, const json& body) const {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ProviderError(ProviderError::Kind::authentication,
                        "environment variable " + config_.api_key_env + " is not set");
  }
  const std::string path = base_path_ + std::string(route);
  const std::string payload = body.dump();
  const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

  auto last_kind = ProviderError::Kind::transport;
  std::string last_message;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(config_.retry_backoff * (1LL << (attempt - 1)));
    }
    ++attempts_;
    httplib::Client client(origin_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(config_.request_timeout);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_kind = ProviderError::Kind::transport;
      last_message = httplib::to_string(res.error());
      spdlog::debug("POST {} attempt {} failed: {}", path, attempt + 1, last_message);
      continue;
    }
    const int status = res->status;
    if (status >= 200 && status < 300) {
      try {
        return json::parse(res->body);
      } catch (const json::exception& e) {
        throw ProviderError(ProviderError::Kind::bad_response, std::string("invalid JSON: ") + e.what());
      }
    }
    if (status == 401 || status == 403) {
      throw ProviderError(ProviderError::Kind::authentication,
                          "HTTP " + std::to_string(status) + ": " + snippet(res->body));
    }
    if (status == 429) {
      last_kind = ProviderError::Kind::rate_limit;
    } else if (status >= 500) {
      last_kind = ProviderError::Kind::transport;
    } else {
      throw ProviderError(ProviderError::Kind::bad_response,
                          "HTTP " + std::to_string(status) + ": " + snippet(res->body));
    }
    last_message = "HTTP " + std::to_string(status) + ": " + snippet(res->body);
    spdlog::debug("POST {} attempt {}: {}", path, attempt + 1, last_message);
  }
  throw ProviderError(last_kind, last_message + " (after " +
                                     std::to_string(config_.max_retries + 1) + " attempts)");
}

std::string OpenAIChatProvider::complete(const RenderedPrompt& prompt, const GenerationParams& params) {
  json messages = json::array();
  if (prompt.system) messages.push_back({{"role", "system"}, {"content", *prompt.system}});
  messages.push_back({{"role", "user"}, {"content", prompt.user}});
  json body{{"model", params.model_name},
            {"messages", std::move(messages)},
            {"temperature", params.temperature},
            {"max_tokens", params.max_output_tokens}};
  for (const auto& [key, value] : params.extra) {
    std::visit([&](const auto& v) { body[key] = v; }, value);
  }
  const auto response = client_.post("/chat/completions", body);
  try {
    const auto& content = response.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(ProviderError::Kind::bad_response,
                        std::string("unexpected chat response shape: ") + e.what());
  }
}

std::string OpenAIChatProvider::identity() const {
  return "openai/" + client_.config().chat_params.model_name + "@" + client_.config().endpoint_url;
}

EmbeddingVector OpenAIEmbedder::embed(std::string_view text) {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  const json body{{"model", client_.config().embedding_model}, {"input", std::string(text)}};
  const auto response = client_.post("/embeddings", body);
  EmbeddingVector out;
  out.model_name = client_.config().embedding_model;
  try {
    out.values = response.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ProviderError(ProviderError::Kind::bad_response,
                        std::string("unexpected embedding response shape: ") + e.what());
  }
  try {
    out.validate();
  } catch (const ValidationError& e) {
    throw ProviderError(ProviderError::Kind::bad_response, e.what());
  }
  return out;
}

}  // namespace labelforge
