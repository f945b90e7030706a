#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "labelforge/error.hpp"
#include "labelforge/providers.hpp"

using namespace labelforge;
using nlohmann::json;

namespace {

/// Local stand-in for an OpenAI-compatible endpoint. Each test sets the
/// status sequence it wants; the last entry repeats.
class FakeEndpoint {
 public:
  FakeEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, json{{"choices", {{{"message", {{"content", "Space Plasma Physics"}}}}}}});
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, json{{"data", {{{"embedding", {0.6, 0.8}}}}}});
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  void set_statuses(std::vector<int> statuses) {
    std::lock_guard lock(mutex_);
    statuses_ = std::move(statuses);
  }
  int hits() const { return hits_.load(); }
  json last_body() const {
    std::lock_guard lock(mutex_);
    return last_body_;
  }
  std::string last_auth() const {
    std::lock_guard lock(mutex_);
    return last_auth_;
  }

  ProviderConfig config() const {
    ProviderConfig c;
    c.kind = "openai";
    c.endpoint_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.api_key_env = "LABELFORGE_TEST_KEY";
    c.max_retries = 2;
    c.retry_backoff = std::chrono::milliseconds(1);
    c.request_timeout = std::chrono::milliseconds(2000);
    c.embedding_model = "embed-test";
    return c;
  }

 private:
  void handle(const httplib::Request& req, httplib::Response& res, const json& ok) {
    const int n = hits_++;
    int status = 200;
    {
      std::lock_guard lock(mutex_);
      last_body_ = json::parse(req.body, nullptr, false);
      last_auth_ = req.get_header_value("Authorization");
      if (!statuses_.empty()) {
        status = statuses_[std::min<std::size_t>(n, statuses_.size() - 1)];
      }
    }
    res.status = status;
    if (status == 200) {
      res.set_content(ok.dump(), "application/json");
    } else {
      res.set_content(R"({"error":{"message":"nope"}})", "application/json");
    }
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  mutable std::mutex mutex_;
  std::vector<int> statuses_;
  json last_body_;
  std::string last_auth_;
};

RenderedPrompt sample_prompt() {
  RenderedPrompt p;
  p.system = "You are a librarian.";
  p.user = "Give a label.";
  p.cluster_id = "c1";
  return p;
}

class OpenAIProviderTest : public ::testing::Test {
 protected:
  void SetUp() override { ::setenv("LABELFORGE_TEST_KEY", "sk-test", 1); }
  void TearDown() override { ::unsetenv("LABELFORGE_TEST_KEY"); }
  FakeEndpoint endpoint;
};

}  // namespace

TEST_F(OpenAIProviderTest, ChatCompletionSendsParamsAndReturnsContent) {
  OpenAIChatProvider chat(endpoint.config());
  GenerationParams params;
  params.model_name = "chat-test";
  params.temperature = 0.3;
  params.extra["seed"] = std::int64_t{7};
  EXPECT_EQ(chat.complete(sample_prompt(), params), "Space Plasma Physics");
  const auto body = endpoint.last_body();
  EXPECT_EQ(body["model"], "chat-test");
  EXPECT_EQ(body["temperature"], 0.3);
  EXPECT_EQ(body["seed"], 7);
  EXPECT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(endpoint.last_auth(), "Bearer sk-test");
}

TEST_F(OpenAIProviderTest, EmbeddingsReturnVector) {
  OpenAIEmbedder embedder(endpoint.config());
  const auto v = embedder.embed("solar wind");
  EXPECT_EQ(v.values, (std::vector<double>{0.6, 0.8}));
  EXPECT_EQ(v.model_name, "embed-test");
  EXPECT_EQ(endpoint.last_body()["input"], "solar wind");
}

TEST_F(OpenAIProviderTest, RetriesServerErrorsThenSucceeds) {
  endpoint.set_statuses({500, 503, 200});
  OpenAIChatProvider chat(endpoint.config());
  EXPECT_EQ(chat.complete(sample_prompt(), {}), "Space Plasma Physics");
  EXPECT_EQ(chat.client().attempts(), 3u);
}

TEST_F(OpenAIProviderTest, RetryCountIsBounded) {
  endpoint.set_statuses({500});
  OpenAIChatProvider chat(endpoint.config());
  try {
    chat.complete(sample_prompt(), {});
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::transport);
  }
  EXPECT_EQ(endpoint.hits(), 3);
  EXPECT_EQ(chat.client().attempts(), 3u);
}

TEST_F(OpenAIProviderTest, RateLimitExhaustionIsRateLimitError) {
  endpoint.set_statuses({429});
  OpenAIEmbedder embedder(endpoint.config());
  try {
    embedder.embed("x");
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::rate_limit);
  }
  EXPECT_EQ(endpoint.hits(), 3);
}

TEST_F(OpenAIProviderTest, AuthenticationFailureIsNotRetried) {
  endpoint.set_statuses({401});
  OpenAIChatProvider chat(endpoint.config());
  try {
    chat.complete(sample_prompt(), {});
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::authentication);
  }
  EXPECT_EQ(endpoint.hits(), 1);
}

TEST_F(OpenAIProviderTest, ClientErrorIsBadResponse) {
  endpoint.set_statuses({400});
  OpenAIChatProvider chat(endpoint.config());
  try {
    chat.complete(sample_prompt(), {});
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::bad_response);
  }
  EXPECT_EQ(endpoint.hits(), 1);
}

TEST_F(OpenAIProviderTest, MissingKeyIsAuthenticationError) {
  ::unsetenv("LABELFORGE_TEST_KEY");
  OpenAIChatProvider chat(endpoint.config());
  try {
    chat.complete(sample_prompt(), {});
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::authentication);
  }
  EXPECT_EQ(endpoint.hits(), 0);
}

TEST_F(OpenAIProviderTest, UnreachableEndpointIsTransportError) {
  auto cfg = endpoint.config();
  cfg.endpoint_url = "http://127.0.0.1:1/v1";
  cfg.max_retries = 0;
  OpenAIEmbedder embedder(cfg);
  try {
    embedder.embed("x");
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::transport);
  }
}

TEST_F(OpenAIProviderTest, FactoryBuildsOpenAIBackends) {
  const auto cfg = endpoint.config();
  EXPECT_EQ(make_chat_provider(cfg, 0)->complete(sample_prompt(), {}), "Space Plasma Physics");
  EXPECT_EQ(make_embedder(cfg)->model_name(), "embed-test");
}
