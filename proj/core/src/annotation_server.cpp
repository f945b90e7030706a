#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/annotation.hpp"
#include "labelforge/error.hpp"

namespace labelforge {

using nlohmann::json;

namespace {

constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>Label quiz</title></head>
<body>
<p>No quiz assets are installed. The API is available under <code>/api/</code>.</p>
</body></html>
)";

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                bool retryable = false) {
  send_json(res, status, json{{"error", message}, {"retryable", retryable}});
}

}  // namespace

struct AnnotationServer::Impl {
  std::vector<AnnotationTask> tasks;
  std::map<std::string, std::size_t> index;
  ResponseStore& store;
  std::filesystem::path static_dir;
  httplib::Server server;
  std::thread worker;

  Impl(std::vector<AnnotationTask> t, ResponseStore& s, std::filesystem::path dir)
      : tasks(std::move(t)), store(s), static_dir(std::move(dir)) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (!index.emplace(tasks[i].task_id, i).second) {
        throw ValidationError("duplicate task id '" + tasks[i].task_id + "'");
      }
    }
    routes();
  }

  void routes() {
    server.Get("/api/session/:annotator", [this](const httplib::Request& req, httplib::Response& res) {
      const auto annotator = req.path_params.at("annotator");
      if (annotator.empty()) return send_error(res, 400, "annotator id is empty");
      std::size_t answered = 0;
      const AnnotationTask* next = nullptr;
      for (const auto& t : tasks) {
        if (store.find(t.task_id, annotator)) {
          ++answered;
        } else if (next == nullptr) {
          next = &t;
        }
      }
      send_json(res, 200,
                json{{"annotator_id", annotator},
                     {"answered", answered},
                     {"total", tasks.size()},
                     {"task", next ? public_task_json(*next) : json(nullptr)}});
    });

    server.Post("/api/response", [this](const httplib::Request& req, httplib::Response& res) {
      AnnotationResponse r;
      try {
        const auto body = json::parse(req.body);
        if (!body.is_object()) return send_error(res, 400, "body must be a JSON object");
        if (!body.contains("task_id") || !body["task_id"].is_string()) {
          return send_error(res, 400, "task_id must be a string");
        }
        if (!body.contains("annotator_id") || !body["annotator_id"].is_string()) {
          return send_error(res, 400, "annotator_id must be a string");
        }
        if (!body.contains("selected_index") || !body["selected_index"].is_number_integer()) {
          return send_error(res, 400, "selected_index must be an integer");
        }
        r.task_id = body["task_id"].get<std::string>();
        r.annotator_id = body["annotator_id"].get<std::string>();
        const auto selected = body["selected_index"].get<long long>();
        if (selected < 0 || selected >= static_cast<long long>(kQuizOptions)) {
          return send_error(res, 400, "selected_index must be in [0,3]");
        }
        r.selected_index = static_cast<int>(selected);
      } catch (const json::exception& e) {
        return send_error(res, 400, std::string("malformed JSON: ") + e.what());
      }
      if (r.annotator_id.empty()) return send_error(res, 400, "annotator_id is empty");
      if (!index.contains(r.task_id)) return send_error(res, 400, "unknown task '" + r.task_id + "'");
      r.timestamp = utc_timestamp();

      try {
        switch (store.record(r)) {
          case ResponseStore::Outcome::recorded:
            return send_json(res, 200, json{{"status", "recorded"}});
          case ResponseStore::Outcome::duplicate:
            return send_json(res, 200, json{{"status", "duplicate"}});
          case ResponseStore::Outcome::conflict:
            return send_error(res, 409, "a different answer was already recorded for this task");
        }
      } catch (const Error& e) {
        spdlog::error("response store: {}", e.what());
        return send_error(res, 503, "response could not be saved; retry", true);
      }
    });

    server.Get("/api/summary", [this](const httplib::Request&, httplib::Response& res) {
      const auto responses = store.responses();
      send_json(res, 200, summarize(tasks, responses));
    });

    if (!static_dir.empty()) {
      if (!server.set_mount_point("/", static_dir.string())) {
        throw ValidationError("static directory '" + static_dir.string() + "' does not exist");
      }
    } else {
      server.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
      });
    }
  }
};

AnnotationServer::AnnotationServer(std::vector<AnnotationTask> tasks, ResponseStore& store,
                                   std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>(std::move(tasks), store, std::move(static_dir))) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void AnnotationServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error("cannot serve on " + host + ":" + std::to_string(port));
  }
}

void AnnotationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace labelforge
