#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "hikester/core/model.hpp"
#include "hikester/geo/geohash.hpp"
#include "hikester/store/store.hpp"

namespace hikester::geo {

struct GeoQuery {
  GeoPoint center;
  double radius_km = 1.0;
  /// Applied to event documents by live queries; radius_query ignores it.
  store::Filter filter;
};

struct GeoMatch {
  EventId event_id;
  double distance_km;

  friend bool operator==(const GeoMatch&, const GeoMatch&) = default;
};

/// Throws std::invalid_argument for a non-positive radius or invalid center.
void validate(const GeoQuery& q);

/// Location index keyed by full-precision geohash. Queries take a shared
/// lock and run alongside each other; updates are exclusive.
class GeoIndex {
 public:
  void put(const EventId& id, const GeoPoint& p);
  void remove(const EventId& id);
  void clear();

  /// Every id within radius_km (inclusive), ascending by distance then id.
  std::vector<GeoMatch> radius_query(const GeoQuery& q) const;

  std::optional<GeoPoint> location(const EventId& id) const;
  std::map<EventId, GeoPoint> entries() const;
  std::size_t size() const;

  /// Number of candidates examined by the last radius_query (for reporting
  /// over-coverage).
  std::size_t last_candidate_count() const { return last_candidates_; }

 private:
  struct Entry {
    GeoPoint point;
    std::string hash;
  };

  mutable std::shared_mutex mu_;
  std::unordered_map<EventId, Entry> by_id_;
  std::set<std::pair<std::string, EventId>> by_hash_;
  mutable std::atomic<std::size_t> last_candidates_{0};
};

struct GeoQueryEvent {
  enum class Kind { entered, exited, moved };

  Kind kind = Kind::entered;
  EventId event_id;
  GeoPoint location;
  double distance_km = 0.0;
  store::Revision revision = 0;
};

std::string_view to_string(GeoQueryEvent::Kind k);
Json to_json(const GeoQueryEvent& e);

/// Turns document-level change events for an event collection into
/// entered/exited/moved deltas for one radius query.
class GeoLiveQuery {
 public:
  explicit GeoLiveQuery(GeoQuery q);

  std::optional<GeoQueryEvent> apply(const store::ChangeEvent& e);
  const std::map<EventId, GeoPoint>& members() const { return members_; }
  const GeoQuery& query() const { return query_; }

 private:
  GeoQuery query_;
  std::map<EventId, GeoPoint> members_;
};

/// Live radius query over a store collection (snapshot as `entered`, then
/// deltas in revision order).
class GeoStream {
 public:
  GeoStream(std::shared_ptr<store::ChangeStream> changes, GeoQuery q);

  std::optional<GeoQueryEvent> next(std::chrono::milliseconds timeout);
  void close() { changes_->close(); }
  const std::map<EventId, GeoPoint>& members() const { return live_.members(); }

 private:
  std::shared_ptr<store::ChangeStream> changes_;
  GeoLiveQuery live_;
};

std::unique_ptr<GeoStream> subscribe_geo(store::Store& store, const store::DocumentPath& collection,
                                         const GeoQuery& q);

}  // namespace hikester::geo
