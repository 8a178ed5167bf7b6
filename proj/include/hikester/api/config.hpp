#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace hikester::api {

struct Config {
  std::string host = "0.0.0.0";
  int port = 8080;
  /// Empty keeps the store in memory only.
  std::string data_dir;
  std::uint64_t snapshot_every = 1000;
  int trigger_retry_limit = 3;

  std::string spam_classifier = "naive_bayes";
  double spam_threshold = 0.9;

  double recommend_threshold = 0.3;
  std::uint64_t recommender_retrain_threshold = 100;
  int kmeans_k = 8;

  std::uint64_t optimizer_retrain_threshold = 50;
  int geohash_precision = 5;
  int optimizer_epochs = 1500;

  double heartbeat_seconds = 30.0;
  int http_threads = 64;
  int default_page_limit = 50;
  int max_page_limit = 500;
  /// How often `serve` sweeps for events whose start time has passed.
  double completion_sweep_seconds = 60.0;
  std::string log_level = "info";
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const Config& c);
/// Keys missing from `j` keep their defaults; unknown keys are rejected.
Config config_from_json(const nlohmann::json& j);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads std::getenv.
std::optional<std::string> process_env(const std::string& name);

/// "spam_threshold" -> "HIKESTER_SPAM_THRESHOLD".
std::string env_name(const std::string& key);

/// Defaults, then the file (if given), then HIKESTER_* environment overrides.
Config load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env);

}  // namespace hikester::api
