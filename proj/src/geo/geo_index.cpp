#include "hikester/geo/geo_index.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace hikester::geo {

void validate(const GeoQuery& q) {
  if (!is_valid(q.center)) throw std::invalid_argument("query center out of range");
  if (!(q.radius_km > 0.0) || !std::isfinite(q.radius_km)) throw std::invalid_argument("radius_km must be positive");
}

void GeoIndex::put(const EventId& id, const GeoPoint& p) {
  auto hash = encode_geohash(p, kMaxPrecision);
  std::unique_lock lock(mu_);
  if (auto it = by_id_.find(id); it != by_id_.end()) {
    by_hash_.erase({it->second.hash, id});
    it->second = Entry{p, hash};
  } else {
    by_id_.emplace(id, Entry{p, hash});
  }
  by_hash_.emplace(std::move(hash), id);
}

void GeoIndex::remove(const EventId& id) {
  std::unique_lock lock(mu_);
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return;
  by_hash_.erase({it->second.hash, id});
  by_id_.erase(it);
}

void GeoIndex::clear() {
  std::unique_lock lock(mu_);
  by_id_.clear();
  by_hash_.clear();
}

std::vector<GeoMatch> GeoIndex::radius_query(const GeoQuery& q) const {
  validate(q);
  auto cover = cover_radius(q.center, q.radius_km);
  std::vector<GeoMatch> out;
  std::size_t candidates = 0;
  auto consider = [&](const EventId& id, const GeoPoint& p) {
    ++candidates;
    double d = haversine_km(q.center, p);
    if (d <= q.radius_km) out.push_back({id, d});
  };

  {
    std::shared_lock lock(mu_);
    if (cover.full_scan) {
      for (const auto& [id, entry] : by_id_) consider(id, entry.point);
    } else {
      for (const auto& prefix : cover.cells) {
        for (auto it = by_hash_.lower_bound({prefix, EventId{}});
             it != by_hash_.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it) {
          consider(it->second, by_id_.at(it->second).point);
        }
      }
    }
  }
  last_candidates_ = candidates;
  std::sort(out.begin(), out.end(), [](const GeoMatch& a, const GeoMatch& b) {
    return a.distance_km != b.distance_km ? a.distance_km < b.distance_km : a.event_id < b.event_id;
  });
  return out;
}

std::optional<GeoPoint> GeoIndex::location(const EventId& id) const {
  std::shared_lock lock(mu_);
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second.point;
}

std::map<EventId, GeoPoint> GeoIndex::entries() const {
  std::shared_lock lock(mu_);
  std::map<EventId, GeoPoint> out;
  for (const auto& [id, entry] : by_id_) out.emplace(id, entry.point);
  return out;
}

std::size_t GeoIndex::size() const {
  std::shared_lock lock(mu_);
  return by_id_.size();
}

std::string_view to_string(GeoQueryEvent::Kind k) {
  switch (k) {
    case GeoQueryEvent::Kind::entered: return "entered";
    case GeoQueryEvent::Kind::exited: return "exited";
    case GeoQueryEvent::Kind::moved: return "moved";
  }
  return "entered";
}

Json to_json(const GeoQueryEvent& e) {
  return Json{{"kind", to_string(e.kind)},
              {"event_id", e.event_id},
              {"location", e.location},
              {"distance_km", e.distance_km},
              {"rev", e.revision}};
}

GeoLiveQuery::GeoLiveQuery(GeoQuery q) : query_(std::move(q)) { validate(query_); }

namespace {

std::optional<GeoPoint> location_of(const store::DocumentValue& doc) {
  const auto* loc = store::find_field(doc, "location");
  if (loc == nullptr || !loc->is_object()) return std::nullopt;
  auto lat = loc->find("lat");
  auto lon = loc->find("lon");
  if (lat == loc->end() || lon == loc->end() || !lat->is_number() || !lon->is_number()) return std::nullopt;
  GeoPoint p{lat->get<double>(), lon->get<double>()};
  if (!is_valid(p)) return std::nullopt;
  return p;
}

}  // namespace

std::optional<GeoQueryEvent> GeoLiveQuery::apply(const store::ChangeEvent& e) {
  const auto& id = e.path.leaf();
  auto previous = members_.find(id);
  bool was_inside = previous != members_.end();

  std::optional<GeoPoint> now_at;
  if (e.kind != store::ChangeKind::deleted && e.value) now_at = location_of(*e.value);
  double distance = now_at ? haversine_km(query_.center, *now_at) : 0.0;
  bool inside = now_at && distance <= query_.radius_km;

  GeoQueryEvent out;
  out.event_id = id;
  out.revision = e.revision;
  if (inside) {
    out.location = *now_at;
    out.distance_km = distance;
    if (!was_inside) {
      out.kind = GeoQueryEvent::Kind::entered;
      members_.emplace(id, *now_at);
      return out;
    }
    if (previous->second == *now_at) return std::nullopt;
    out.kind = GeoQueryEvent::Kind::moved;
    previous->second = *now_at;
    return out;
  }
  if (!was_inside) return std::nullopt;
  out.kind = GeoQueryEvent::Kind::exited;
  out.location = now_at.value_or(previous->second);
  out.distance_km = haversine_km(query_.center, out.location);
  members_.erase(previous);
  return out;
}

GeoStream::GeoStream(std::shared_ptr<store::ChangeStream> changes, GeoQuery q)
    : changes_(std::move(changes)), live_(std::move(q)) {}

std::optional<GeoQueryEvent> GeoStream::next(std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() < 0) remaining = std::chrono::milliseconds{0};
    auto change = changes_->next(remaining);
    if (!change) return std::nullopt;
    if (auto geo = live_.apply(*change)) return geo;
  }
}

std::unique_ptr<GeoStream> subscribe_geo(store::Store& store, const store::DocumentPath& collection,
                                         const GeoQuery& q) {
  validate(q);
  auto changes = store.subscribe(store::SubscriptionSpec{collection, q.filter});
  return std::make_unique<GeoStream>(std::move(changes), q);
}

}  // namespace hikester::geo
