#include "hikester/api/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

namespace hikester::api {

nlohmann::json to_json(const Config& c) {
  return {{"host", c.host},
          {"port", c.port},
          {"data_dir", c.data_dir},
          {"snapshot_every", c.snapshot_every},
          {"trigger_retry_limit", c.trigger_retry_limit},
          {"spam_classifier", c.spam_classifier},
          {"spam_threshold", c.spam_threshold},
          {"recommend_threshold", c.recommend_threshold},
          {"recommender_retrain_threshold", c.recommender_retrain_threshold},
          {"kmeans_k", c.kmeans_k},
          {"optimizer_retrain_threshold", c.optimizer_retrain_threshold},
          {"geohash_precision", c.geohash_precision},
          {"optimizer_epochs", c.optimizer_epochs},
          {"heartbeat_seconds", c.heartbeat_seconds},
          {"http_threads", c.http_threads},
          {"default_page_limit", c.default_page_limit},
          {"max_page_limit", c.max_page_limit},
          {"completion_sweep_seconds", c.completion_sweep_seconds},
          {"log_level", c.log_level}};
}

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void check(const Config& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.port < 0 || c.port > 65535) fail("port out of range");
  if (c.spam_threshold < 0.0 || c.spam_threshold > 1.0) fail("spam_threshold must be within [0, 1]");
  if (c.recommend_threshold < 0.0 || c.recommend_threshold > 1.0) fail("recommend_threshold must be within [0, 1]");
  if (c.recommender_retrain_threshold == 0) fail("recommender_retrain_threshold must be positive");
  if (c.optimizer_retrain_threshold == 0) fail("optimizer_retrain_threshold must be positive");
  if (c.kmeans_k <= 0) fail("kmeans_k must be positive");
  if (c.geohash_precision < 1 || c.geohash_precision > 12) fail("geohash_precision must be within [1, 12]");
  if (c.heartbeat_seconds <= 0.0) fail("heartbeat_seconds must be positive");
  if (c.http_threads <= 0) fail("http_threads must be positive");
  if (c.default_page_limit <= 0 || c.max_page_limit < c.default_page_limit) fail("invalid page limits");
  if (c.optimizer_epochs <= 0) fail("optimizer_epochs must be positive");
  if (c.trigger_retry_limit < 0) fail("trigger_retry_limit must be non-negative");
}

}  // namespace

Config config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  Config c;
  auto known = to_json(c);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.contains(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
  read(j, "host", c.host);
  read(j, "port", c.port);
  read(j, "data_dir", c.data_dir);
  read(j, "snapshot_every", c.snapshot_every);
  read(j, "trigger_retry_limit", c.trigger_retry_limit);
  read(j, "spam_classifier", c.spam_classifier);
  read(j, "spam_threshold", c.spam_threshold);
  read(j, "recommend_threshold", c.recommend_threshold);
  read(j, "recommender_retrain_threshold", c.recommender_retrain_threshold);
  read(j, "kmeans_k", c.kmeans_k);
  read(j, "optimizer_retrain_threshold", c.optimizer_retrain_threshold);
  read(j, "geohash_precision", c.geohash_precision);
  read(j, "optimizer_epochs", c.optimizer_epochs);
  read(j, "heartbeat_seconds", c.heartbeat_seconds);
  read(j, "http_threads", c.http_threads);
  read(j, "default_page_limit", c.default_page_limit);
  read(j, "max_page_limit", c.max_page_limit);
  read(j, "completion_sweep_seconds", c.completion_sweep_seconds);
  read(j, "log_level", c.log_level);
  check(c);
  return c;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

std::string env_name(const std::string& key) {
  std::string out = "HIKESTER_";
  for (char ch : key) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  return out;
}

Config load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  nlohmann::json merged = to_json(Config{});
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config file " + file->string());
    nlohmann::json from_file;
    try {
      from_file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!from_file.is_object()) throw ConfigError("config must be a JSON object");
    for (auto it = from_file.begin(); it != from_file.end(); ++it) {
      if (!merged.contains(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
      merged[it.key()] = it.value();
    }
  }
  for (auto it = merged.begin(); it != merged.end(); ++it) {
    auto raw = env(env_name(it.key()));
    if (!raw) continue;
    if (it.value().is_string()) {
      it.value() = *raw;
      continue;
    }
    try {
      it.value() = nlohmann::json::parse(*raw);
    } catch (const nlohmann::json::parse_error&) {
      throw ConfigError(env_name(it.key()) + " is not a valid value");
    }
  }
  return config_from_json(merged);
}

}  // namespace hikester::api
