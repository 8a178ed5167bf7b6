#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "hikester/core/model.hpp"
#include "hikester/spam/mlp.hpp"
#include "hikester/util/atomic_model.hpp"

namespace hikester::optimizer {

/// One completed event: what it was, when and where it ran, how many came.
struct TrainingTuple {
  TagSet tags;
  int hour = 0;
  int day_of_week = 0;
  std::string geo_cell;
  std::int64_t attendance = 0;

  friend bool operator==(const TrainingTuple&, const TrainingTuple&) = default;
};

void to_json(Json& j, const TrainingTuple& t);
void from_json(const Json& j, TrainingTuple& t);

/// Throws std::invalid_argument on out-of-range fields.
void validate(const TrainingTuple& t);

/// Tuple for a finished event: final participant count, cell at `precision`.
TrainingTuple tuple_from_event(const EventRecord& e, int geo_precision = 5);

enum class Target { time, date };

/// 24 for time (hours), 7 for date (days of week).
int candidate_count(Target t);
int candidate_of(const TrainingTuple& t, Target target);

/// Candidate values ordered by descending score, ties by ascending value.
struct RankedValue {
  int value = 0;
  double score = 0.0;
};
using Ranking = std::vector<RankedValue>;

Ranking rank(std::vector<double> scores);

/// Mean attendance per candidate over tuples sharing a tag with `tags`
/// (all tuples when none do). Equal zero scores on empty history.
Ranking histogram_ranking(const std::vector<TrainingTuple>& history, const TagSet& tags, Target target);

struct ParamModelConfig {
  std::size_t max_tag_vocabulary = 64;
  int hidden_size = 12;
  int epochs = 1500;
  double learning_rate = 0.5;
  std::uint64_t seed = 42;
};

/// MLP scorer over tag one-hot ⊕ candidate one-hot with an attendance target.
struct ParamModel {
  Target target = Target::time;
  std::vector<std::string> tag_vocabulary;
  double target_scale = 1.0;
  spam::MlpModel mlp;

  std::size_t input_size() const { return tag_vocabulary.size() + static_cast<std::size_t>(candidate_count(target)); }
  std::vector<double> encode(const TagSet& tags, int candidate) const;
  double predict(const TagSet& tags, int candidate) const;
  Ranking ranking(const TagSet& tags) const;
};

/// Tag vocabulary: most frequent tags first (ties alphabetical), capped.
std::vector<std::string> build_tag_vocabulary(const std::vector<TrainingTuple>& history, std::size_t cap);

/// nullopt on an empty history.
std::optional<ParamModel> train_param_model(const std::vector<TrainingTuple>& history, Target target,
                                            const ParamModelConfig& config = {});

nlohmann::json to_json(const ParamModel& m);
ParamModel param_model_from_json(const nlohmann::json& j);

struct PlaceSuggestion {
  std::string geo_cell;
  GeoPoint center;
  std::int64_t attendance = 0;
};

/// Cumulative attendance per geohash cell, keyed by (tag, hour, day).
class PopularPlacesIndex {
 public:
  void insert(const TrainingTuple& t);
  std::vector<PlaceSuggestion> top(const std::string& tag, int hour, int day_of_week, std::size_t k) const;
  std::size_t key_count() const { return cells_.size(); }
  void clear() { cells_.clear(); }

 private:
  using Key = std::tuple<std::string, int, int>;
  std::map<Key, std::map<std::string, std::int64_t>> cells_;
};

struct OptimizerConfig {
  std::uint64_t retrain_threshold = 50;
  int geo_precision = 5;
  ParamModelConfig model;
};

class UnknownActivity : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A request from the user-activity handler. `kind` selects the case:
/// "event_completed" (needs tuple), "time_help", "date_help", "place_help".
struct Activity {
  std::string kind;
  TagSet tags;
  std::optional<TrainingTuple> tuple;
  int hour = 0;
  int day_of_week = 0;
  std::size_t k = 5;
};

using ActivityResult = std::variant<std::monostate, Ranking, std::vector<PlaceSuggestion>>;

class ParamOptimizer {
 public:
  explicit ParamOptimizer(OptimizerConfig config = {});

  ActivityResult handle_activity(const Activity& a);

  /// Appends to the training set and the places index; retrains both
  /// models each time `retrain_threshold` new tuples have arrived.
  void insert_training_tuple(const TrainingTuple& t);

  Ranking suggest_time(const TagSet& tags) const { return suggest(tags, Target::time); }
  Ranking suggest_date(const TagSet& tags) const { return suggest(tags, Target::date); }
  std::vector<PlaceSuggestion> popular_places(const std::string& tag, int hour, int day_of_week,
                                              std::size_t k) const;

  /// Trains both models on the whole history and swaps them in.
  void retrain();

  std::uint64_t retrain_count() const { return retrains_.load(); }
  std::uint64_t pending_tuples() const;
  std::vector<TrainingTuple> history() const;
  std::shared_ptr<const ParamModel> model(Target t) const;
  const OptimizerConfig& config() const { return config_; }

 private:
  Ranking suggest(const TagSet& tags, Target target) const;

  OptimizerConfig config_;
  mutable std::shared_mutex mu_;
  std::vector<TrainingTuple> history_;
  PopularPlacesIndex places_;
  std::uint64_t pending_ = 0;
  std::atomic<std::uint64_t> retrains_{0};
  util::AtomicModel<ParamModel> time_model_;
  util::AtomicModel<ParamModel> date_model_;
  std::mutex retrain_mu_;
};

}  // namespace hikester::optimizer
