#include "hikester/api/subscription.hpp"

namespace hikester::api {

namespace {

std::optional<int> optional_int(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw bad_request(std::string(key) + " must be an integer");
  return it->get<int>();
}

TagSet tags_of(const Json& j) {
  TagSet tags;
  auto it = j.find("tags");
  if (it == j.end()) return tags;
  if (!it->is_array() && !it->is_object()) throw bad_request("tags must be a list");
  for (const auto& raw : document_to_set(*it)) {
    auto tag = canonical_tag(raw);
    if (!is_valid_tag(tag)) throw bad_request("invalid tag '" + raw + "'");
    tags.insert(tag);
  }
  return tags;
}

double required_number(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) throw bad_request(std::string(key) + " must be a number");
  return it->get<double>();
}

class ChangeFeed final : public FeedSession {
 public:
  explicit ChangeFeed(std::shared_ptr<store::ChangeStream> s) : stream_(std::move(s)) {}
  std::optional<Json> next(std::chrono::milliseconds timeout) override {
    auto e = stream_->next(timeout);
    if (!e) return std::nullopt;
    return stream_message(e->snapshot ? "snapshot" : "change", store::to_json(*e));
  }
  void close() override { stream_->close(); }
  bool closed() const override { return stream_->closed(); }

 private:
  std::shared_ptr<store::ChangeStream> stream_;
};

class GeoFeed final : public FeedSession {
 public:
  GeoFeed(std::shared_ptr<store::ChangeStream> changes, geo::GeoQuery q)
      : changes_(changes), stream_(std::move(changes), std::move(q)) {}
  std::optional<Json> next(std::chrono::milliseconds timeout) override {
    auto e = stream_.next(timeout);
    if (!e) return std::nullopt;
    return stream_message("geo", geo::to_json(*e));
  }
  void close() override { stream_.close(); }
  bool closed() const override { return changes_->closed(); }

 private:
  std::shared_ptr<store::ChangeStream> changes_;
  geo::GeoStream stream_;
};

}  // namespace

SubscriptionRequest parse_subscription_request(const Json& j) {
  if (!j.is_object() || j.size() != 1)
    throw bad_request("subscription request needs exactly one of events, geo, notifications");
  const std::string kind = j.begin().key();
  const Json& body = j.begin().value();
  if (!body.is_object()) throw bad_request(kind + " request must be an object");

  if (kind == "events") {
    EventFeedRequest r;
    r.tags = tags_of(body);
    r.hour_min = optional_int(body, "hour_min");
    r.hour_max = optional_int(body, "hour_max");
    r.day_of_week = optional_int(body, "day_of_week");
    if (auto h = optional_int(body, "hour")) r.hour_min = r.hour_max = h;
    for (auto h : {r.hour_min, r.hour_max})
      if (h && (*h < 0 || *h > 23)) throw bad_request("hour out of range");
    if (r.hour_min && r.hour_max && *r.hour_min > *r.hour_max) throw bad_request("hour_min exceeds hour_max");
    if (r.day_of_week && (*r.day_of_week < 0 || *r.day_of_week > 6)) throw bad_request("day_of_week out of range");
    return r;
  }
  if (kind == "geo") {
    GeoFeedRequest r;
    r.center = {required_number(body, "lat"), normalize_longitude(required_number(body, "lon"))};
    r.radius_km = required_number(body, "radius_km");
    r.tags = tags_of(body);
    try {
      geo::validate(geo_feed_query(r));
    } catch (const std::invalid_argument& e) {
      throw bad_request(e.what());
    }
    return r;
  }
  if (kind == "notifications") {
    auto user = body.find("user");
    if (user == body.end() || !user->is_string()) throw bad_request("notifications request needs a user");
    return NotificationFeedRequest{user->get<std::string>()};
  }
  throw bad_request("unknown subscription kind '" + kind + "'");
}

store::SubscriptionSpec event_feed_spec(const EventFeedRequest& r) {
  store::Filter f;
  f.equals("status", "active");
  for (const auto& tag : r.tags) f.has_key("tags", tag);
  if (r.hour_min || r.hour_max)
    f.in_range("start_hour", r.hour_min ? std::optional<double>(*r.hour_min) : std::nullopt,
               r.hour_max ? std::optional<double>(*r.hour_max) : std::nullopt);
  if (r.day_of_week) f.equals("day_of_week", *r.day_of_week);
  return {paths::events(), std::move(f)};
}

geo::GeoQuery geo_feed_query(const GeoFeedRequest& r) {
  geo::GeoQuery q{r.center, r.radius_km, {}};
  q.filter.equals("status", "active");
  for (const auto& tag : r.tags) q.filter.has_key("tags", tag);
  return q;
}

Json stream_message(std::string_view type, Json payload) {
  return Json{{"type", type}, {"payload", std::move(payload)}};
}

std::unique_ptr<FeedSession> open_feed(Service& service, const SubscriptionRequest& request) {
  auto& store = service.store();
  if (const auto* events = std::get_if<EventFeedRequest>(&request))
    return std::make_unique<ChangeFeed>(store.subscribe(event_feed_spec(*events)));
  if (const auto* g = std::get_if<GeoFeedRequest>(&request)) {
    auto q = geo_feed_query(*g);
    return std::make_unique<GeoFeed>(store.subscribe({paths::events(), q.filter}), q);
  }
  const auto& n = std::get<NotificationFeedRequest>(request);
  service.get_user(n.user);
  return std::make_unique<ChangeFeed>(store.subscribe({paths::notifications(n.user), {}}));
}

}  // namespace hikester::api
