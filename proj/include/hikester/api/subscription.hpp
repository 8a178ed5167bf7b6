#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <variant>

#include "hikester/api/service.hpp"

namespace hikester::api {

/// Live feed of active events matching every tag and the hour/day bounds.
struct EventFeedRequest {
  TagSet tags;
  std::optional<int> hour_min;
  std::optional<int> hour_max;
  std::optional<int> day_of_week;
};

/// Live radius query; `tags` narrows it to events carrying all of them.
struct GeoFeedRequest {
  GeoPoint center;
  double radius_km = 1.0;
  TagSet tags;
};

struct NotificationFeedRequest {
  UserId user;
};

using SubscriptionRequest = std::variant<EventFeedRequest, GeoFeedRequest, NotificationFeedRequest>;

/// Accepts exactly one of {"events": {...}}, {"geo": {...}},
/// {"notifications": {...}}. Throws ApiError (400) otherwise.
SubscriptionRequest parse_subscription_request(const Json& j);

store::SubscriptionSpec event_feed_spec(const EventFeedRequest& r);
geo::GeoQuery geo_feed_query(const GeoFeedRequest& r);

/// {"type": ..., "payload": ...}
Json stream_message(std::string_view type, Json payload);

/// One open subscription, yielding wire messages in delivery order.
class FeedSession {
 public:
  virtual ~FeedSession() = default;
  /// Next message, or nullopt when nothing arrived within `timeout`.
  virtual std::optional<Json> next(std::chrono::milliseconds timeout) = 0;
  virtual void close() = 0;
  virtual bool closed() const = 0;
};

/// Validates `request` against the service (for example that the user
/// exists) and opens the matching subscription.
std::unique_ptr<FeedSession> open_feed(Service& service, const SubscriptionRequest& request);

}  // namespace hikester::api
