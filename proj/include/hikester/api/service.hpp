#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hikester/api/config.hpp"
#include "hikester/core/model.hpp"
#include "hikester/geo/geo_index.hpp"
#include "hikester/optimizer/optimizer.hpp"
#include "hikester/recommender/recommender.hpp"
#include "hikester/search/search_index.hpp"
#include "hikester/spam/classifier.hpp"
#include "hikester/spam/dataset.hpp"
#include "hikester/store/store.hpp"

namespace hikester::api {

/// Error surfaced to API clients as {code, message} with an HTTP status.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, std::string message, Json details = nullptr)
      : std::runtime_error(message), status_(status), code_(std::move(code)), details_(std::move(details)) {}

  int status() const { return status_; }
  const std::string& code() const { return code_; }
  const Json& details() const { return details_; }
  Json body() const;

 private:
  int status_;
  std::string code_;
  Json details_;
};

ApiError bad_request(std::string message, Json details = nullptr);
ApiError not_found(std::string message);
ApiError conflict(std::string message);

/// Offset-based page over an already ordered list. `cursor` is the token a
/// previous page returned as next_cursor.
struct Page {
  std::size_t limit = 50;
  std::optional<std::string> cursor;
};

Json paginate(std::vector<Json> items, const Page& page);

namespace paths {
store::DocumentPath events();
store::DocumentPath event(const EventId& id);
store::DocumentPath users();
store::DocumentPath user(const UserId& id);
store::DocumentPath recommender_samples();
store::DocumentPath optimizer_samples();
store::DocumentPath notifications(const UserId& user);
store::DocumentPath model(const std::string& name);
}  // namespace paths

struct NearbyResult {
  geo::GeoMatch match;
  EventRecord event;
};

struct SearchResult {
  search::SearchHit hit;
  EventRecord event;
};

/// Application core behind the HTTP layer. Owns the store and every derived
/// structure. Request-path methods only read indexes and write the store;
/// moderation, recommendation, indexing and optimizer training run on store
/// triggers.
class Service {
 public:
  explicit Service(Config config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  UserProfile create_user(const Json& body);
  UserProfile get_user(const UserId& id) const;

  EventRecord create_event(const Json& body);
  /// A viewer, when given, gets a view sample recorded.
  EventRecord get_event(const EventId& id, const std::optional<UserId>& viewer = std::nullopt);
  EventRecord join_event(const EventId& id, const UserId& user);
  EventRecord leave_event(const EventId& id, const UserId& user);

  std::vector<SearchResult> search(const search::SearchQuery& q, const std::optional<UserId>& user = std::nullopt);
  std::vector<NearbyResult> nearby(const geo::GeoQuery& q) const;

  optimizer::Ranking suggest_time(const TagSet& tags) const;
  optimizer::Ranking suggest_date(const TagSet& tags) const;
  std::vector<optimizer::PlaceSuggestion> suggest_places(const std::string& tag, int hour, int day_of_week,
                                                         std::size_t k) const;

  /// Recommendation notifications for `user`, newest first.
  std::vector<Notification> recommendations(const UserId& user) const;

  /// Records a training tuple for every active event that started before
  /// `now`. Each event is recorded once. Returns the number recorded.
  std::size_t complete_due_events(std::chrono::system_clock::time_point now);

  /// Trains the spam classifier on `corpus`, stores it and activates it.
  void train_spam(const std::vector<spam::TextExample>& corpus);

  /// Blocks until all trigger work caused so far has finished.
  void wait_idle() { store_->wait_idle(); }

  store::Store& store() { return *store_; }
  const geo::GeoIndex& geo_index() const { return geo_; }
  const search::SearchIndex& search_index() const { return search_; }
  const recommender::Recommender& recommender() const { return *recommender_; }
  const optimizer::ParamOptimizer& optimizer() const { return *optimizer_; }
  optimizer::ParamOptimizer& optimizer() { return *optimizer_; }
  const spam::SpamModerator& moderator() const { return moderator_; }
  const Config& config() const { return config_; }

  std::optional<EventRecord> load_event(const EventId& id) const;

 private:
  void rebuild();
  void register_triggers();
  void reindex(const EventId& id);
  void on_event_change(const store::ChangeEvent& e);
  void on_recommender_sample(const store::ChangeEvent& e);
  void on_optimizer_sample(const store::ChangeEvent& e);
  void record_sample(InteractionSample s);
  void persist_model(const std::string& name, const Json& model);
  void require_user(const UserId& id) const;

  Config config_;
  std::unique_ptr<store::Store> store_;
  geo::GeoIndex geo_;
  search::SearchIndex search_;
  spam::SpamModerator moderator_;
  std::unique_ptr<recommender::Recommender> recommender_;
  std::unique_ptr<optimizer::ParamOptimizer> optimizer_;

  // Touched only from the owning trigger's worker (or during rebuild).
  std::set<std::string> applied_recommender_samples_;
  std::set<std::string> applied_optimizer_samples_;
  std::uint64_t persisted_recommender_generation_ = 0;
  std::uint64_t persisted_optimizer_retrains_ = 0;

  std::vector<std::uint64_t> triggers_;
};

}  // namespace hikester::api
