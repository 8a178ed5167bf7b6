#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "hikester/core/model.hpp"
#include "hikester/store/store.hpp"
#include "hikester/util/atomic_model.hpp"

namespace hikester::recommender {

using TagWeights = std::map<std::string, double>;

struct ActionWeights {
  double join = 2.0;
  double view = 0.5;
  double search_filtered = 0.25;
  double decline = -1.0;

  double of(InteractionAction a) const;
};

struct InterestProfile {
  UserId user_id;
  TagWeights weights;
  std::optional<int> group_id;
  std::uint64_t samples_seen = 0;

  friend bool operator==(const InterestProfile&, const InterestProfile&) = default;
};

/// Tags a sample acts on: filter_tags for searches, event_tags otherwise.
const TagSet& sample_tags(const InteractionSample& s);

/// Applies one sample. Weights that reach zero are dropped from the map,
/// so a profile never stores a zero or negative weight.
InterestProfile update_profile(InterestProfile profile, const InteractionSample& s,
                               const ActionWeights& weights = {});

/// Cosine similarity between `weights` and the 0/1 indicator vector of `tags`.
double score_interest(const TagWeights& weights, const TagSet& tags);

double cosine_similarity(const TagWeights& a, const TagWeights& b);

/// Unit-norm group centroids from spherical k-means.
struct RecommendationModel {
  std::vector<TagWeights> centroids;
  std::uint64_t generation = 0;
};

struct KMeansConfig {
  int k = 8;
  int max_iterations = 20;
  std::uint64_t seed = 7;
};

struct KMeansResult {
  RecommendationModel model;
  /// Cluster per input profile; -1 for zero profiles, which join no group.
  std::vector<int> assignment;
  int iterations = 0;
};

KMeansResult spherical_kmeans(const std::vector<TagWeights>& profiles, const KMeansConfig& config = {});

/// Nearest centroid by cosine similarity (lowest index on ties); nullopt
/// for a zero profile or an empty model.
std::optional<int> assign_group(const RecommendationModel& model, const TagWeights& profile);

struct RecommenderConfig {
  ActionWeights action_weights;
  double threshold = 0.3;
  std::uint64_t retrain_threshold = 100;
  KMeansConfig kmeans;
};

/// In-memory recommender state: profiles are a fold over recorded samples,
/// groups come from the last retrain. Thread-safe.
class Recommender {
 public:
  explicit Recommender(RecommenderConfig config = {});

  /// Updates the sender's profile and retrains once `retrain_threshold`
  /// samples have accumulated since the previous retrain.
  void record_interaction(const InteractionSample& s);

  /// Users to notify about `e`, best match first (ties by user id).
  std::vector<UserId> generate_recommendations(const EventRecord& e) const;

  double score(const UserId& user, const TagSet& tags) const;

  std::optional<InterestProfile> profile(const UserId& user) const;
  std::vector<InterestProfile> profiles() const;
  /// Registers a user with an empty profile so it exists before any sample.
  void ensure_user(const UserId& user);

  /// Runs k-means over all profiles and swaps the model in. Returns the new model.
  std::shared_ptr<const RecommendationModel> retrain();
  std::optional<int> group_of(const UserId& user) const;

  std::shared_ptr<const RecommendationModel> model() const { return model_.load(); }
  std::uint64_t pending_samples() const;
  std::uint64_t retrain_count() const { return retrains_.load(); }
  const RecommenderConfig& config() const { return config_; }

 private:
  std::optional<int> group_for_locked(const TagWeights& weights) const;

  RecommenderConfig config_;
  mutable std::shared_mutex mu_;
  std::map<UserId, InterestProfile> profiles_;
  std::uint64_t pending_ = 0;
  std::atomic<std::uint64_t> retrains_{0};
  util::AtomicModel<RecommendationModel> model_;
  std::mutex retrain_mu_;
};

/// Path of the recommendation notification for (recipient, event).
store::DocumentPath notification_path(const UserId& recipient, const EventId& event);

/// Writes one recommendation notification per user. Existing notifications
/// for the same (recipient, event) are left alone, so repeated delivery is
/// harmless. Returns the number of new notifications.
std::size_t notify(store::Store& store, const std::vector<UserId>& users, const EventRecord& e);

nlohmann::json to_json(const RecommendationModel& m);
RecommendationModel recommendation_model_from_json(const nlohmann::json& j);

}  // namespace hikester::recommender
