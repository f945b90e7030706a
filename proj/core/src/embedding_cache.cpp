#include <fstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "labelforge/error.hpp"
#include "labelforge/providers.hpp"

namespace labelforge {

using nlohmann::json;

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  if (!in) return;  // first use
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto model = j.at("model").get<std::string>();
      const auto text = j.at("text").get<std::string>();
      EmbeddingVector v{j.at("values").get<std::vector<double>>(), model};
      entries_[key(model, text)] = std::move(v);
    } catch (const json::exception& e) {
      // A torn final write leaves a partial line; skip it.
      spdlog::warn("embedding cache {}: skipping line {}: {}", path_.string(), line_no, e.what());
    }
  }
}

std::string EmbeddingCache::key(const std::string& model, std::string_view text) {
  std::string k;
  k.reserve(model.size() + 1 + text.size());
  k.append(model).push_back('\0');
  k.append(text);
  return k;
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& model,
                                                   std::string_view text) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key(model, text));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const std::string& model, std::string_view text,
                         const EmbeddingVector& vector) {
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.insert_or_assign(key(model, text), vector);
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot append to embedding cache '" + path_.string() + "'");
  const json j{{"model", model}, {"text", std::string(text)}, {"values", vector.values}};
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw Error("write to embedding cache '" + path_.string() + "' failed");
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

EmbeddingVector CachedEmbedder::embed(std::string_view text) {
  const auto model = inner_.model_name();
  if (auto hit = cache_.get(model, text)) return *hit;
  auto vector = inner_.embed(text);
  try {
    cache_.put(model, text, vector);
  } catch (const Error& e) {
    spdlog::warn("embedding cache unavailable, continuing uncached: {}", e.what());
  }
  return vector;
}

}  // namespace labelforge
