#include "hikester/core/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <ctime>
#include <mutex>
#include <random>

namespace hikester {

double normalize_longitude(double lon) {
  if (!std::isfinite(lon)) return lon;
  double wrapped = std::fmod(lon + 180.0, 360.0);
  if (wrapped < 0) wrapped += 360.0;
  wrapped -= 180.0;
  // fmod can land exactly on +180 through rounding.
  if (wrapped >= 180.0) wrapped -= 360.0;
  return wrapped;
}

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon < 180.0;
}

std::string_view to_string(EventStatus s) {
  switch (s) {
    case EventStatus::active: return "active";
    case EventStatus::flagged_spam: return "flagged_spam";
    case EventStatus::cancelled: return "cancelled";
  }
  return "active";
}

std::optional<EventStatus> parse_event_status(std::string_view s) {
  if (s == "active") return EventStatus::active;
  if (s == "flagged_spam") return EventStatus::flagged_spam;
  if (s == "cancelled") return EventStatus::cancelled;
  return std::nullopt;
}

std::string_view to_string(NotificationKind k) {
  switch (k) {
    case NotificationKind::recommendation: return "recommendation";
    case NotificationKind::spam_flag: return "spam_flag";
    case NotificationKind::system: return "system";
  }
  return "system";
}

std::optional<NotificationKind> parse_notification_kind(std::string_view s) {
  if (s == "recommendation") return NotificationKind::recommendation;
  if (s == "spam_flag") return NotificationKind::spam_flag;
  if (s == "system") return NotificationKind::system;
  return std::nullopt;
}

std::string_view to_string(InteractionAction a) {
  switch (a) {
    case InteractionAction::search_filtered: return "search_filtered";
    case InteractionAction::view: return "view";
    case InteractionAction::join: return "join";
    case InteractionAction::decline: return "decline";
  }
  return "view";
}

std::optional<InteractionAction> parse_interaction_action(std::string_view s) {
  if (s == "search_filtered") return InteractionAction::search_filtered;
  if (s == "view") return InteractionAction::view;
  if (s == "join") return InteractionAction::join;
  if (s == "decline") return InteractionAction::decline;
  return std::nullopt;
}

bool is_consistent(const InteractionSample& s) {
  return s.filter_tags.empty() == (s.action != InteractionAction::search_filtered);
}

namespace {

std::optional<int> parse_fixed_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
  }
  auto y = parse_fixed_int(text.substr(0, 4));
  auto m = parse_fixed_int(text.substr(5, 2));
  auto d = parse_fixed_int(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                  std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

std::string format_iso_date(const std::chrono::year_month_day& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

int day_of_week(const std::chrono::year_month_day& d) {
  return static_cast<int>(std::chrono::weekday{std::chrono::sys_days{d}}.iso_encoding()) - 1;
}

std::string canonical_tag(std::string_view raw) {
  auto first = raw.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = raw.find_last_not_of(" \t\r\n");
  std::string out(raw.substr(first, last - first + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_valid_tag(std::string_view tag) {
  if (tag.empty()) return false;
  return std::all_of(tag.begin(), tag.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

namespace {

bool is_valid_key(std::string_view key) {
  if (key.empty()) return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

}  // namespace

ValidationVerdict validate_event(const EventRecord& e) {
  ValidationVerdict v;
  auto fail = [&](std::string msg) { v.violations.push_back(std::move(msg)); };

  if (e.title.empty()) fail("title empty");
  if (!std::isfinite(e.location.lat) || e.location.lat < -90.0 || e.location.lat > 90.0)
    fail("location.lat out of range");
  if (!std::isfinite(e.location.lon) || e.location.lon < -180.0 || e.location.lon >= 180.0)
    fail("location.lon out of range");
  if (e.start_hour < 0 || e.start_hour > 23) fail("start_hour out of range");
  if (e.day_of_week < 0 || e.day_of_week > 6) fail("day_of_week out of range");

  auto date = parse_iso_date(e.start_date);
  if (!date) {
    fail("start_date invalid");
  } else if (e.day_of_week >= 0 && e.day_of_week <= 6 && day_of_week(*date) != e.day_of_week) {
    fail("day_of_week inconsistent with start_date");
  }

  if (e.status == EventStatus::active && e.tags.empty()) fail("tags empty");
  for (const auto& t : e.tags) {
    if (!is_valid_tag(t)) {
      fail("tags contains invalid tag '" + t + "'");
      break;
    }
  }

  if (!is_valid_key(e.creator)) fail("creator invalid");
  for (const auto& p : e.participants) {
    if (!is_valid_key(p)) {
      fail("participants contains invalid user id");
      break;
    }
  }
  if (e.status == EventStatus::active && !e.participants.contains(e.creator))
    fail("participants missing creator");
  return v;
}

std::string generate_id() {
  static constexpr std::string_view alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string id(20, '\0');
  std::lock_guard lock(mu);
  for (auto& c : id) c = alphabet[pick(rng)];
  return id;
}

std::string wall_clock_iso() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json set_to_document(const std::set<std::string>& keys) {
  Json j = Json::object();
  for (const auto& k : keys) j[k] = true;
  return j;
}

std::set<std::string> document_to_set(const Json& j) {
  std::set<std::string> out;
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it.value().is_null() && it.value() != false) out.insert(it.key());
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (v.is_string()) out.insert(v.get<std::string>());
    }
  }
  return out;
}

void to_json(Json& j, const GeoPoint& p) { j = Json{{"lat", p.lat}, {"lon", p.lon}}; }

void from_json(const Json& j, GeoPoint& p) {
  p.lat = j.at("lat").get<double>();
  p.lon = j.at("lon").get<double>();
}

void to_json(Json& j, const EventRecord& e) {
  j = Json{{"id", e.id},
           {"title", e.title},
           {"description", e.description},
           {"tags", set_to_document(e.tags)},
           {"start_hour", e.start_hour},
           {"day_of_week", e.day_of_week},
           {"start_date", e.start_date},
           {"location", e.location},
           {"creator", e.creator},
           {"participants", set_to_document(e.participants)},
           {"status", to_string(e.status)},
           {"created_at", e.created_at}};
}

void from_json(const Json& j, EventRecord& e) {
  e.id = j.value("id", std::string{});
  e.title = j.value("title", std::string{});
  e.description = j.value("description", std::string{});
  e.tags = j.contains("tags") ? document_to_set(j.at("tags")) : TagSet{};
  e.start_hour = j.value("start_hour", 0);
  e.day_of_week = j.value("day_of_week", 0);
  e.start_date = j.value("start_date", std::string{});
  e.location = j.at("location").get<GeoPoint>();
  e.creator = j.value("creator", std::string{});
  e.participants = j.contains("participants") ? document_to_set(j.at("participants"))
                                              : std::set<UserId>{};
  auto status = parse_event_status(j.value("status", std::string{"active"}));
  if (!status) throw std::invalid_argument("unknown event status");
  e.status = *status;
  e.created_at = j.value("created_at", Revision{0});
}

void to_json(Json& j, const UserProfile& u) {
  j = Json{{"id", u.id}, {"display_name", u.display_name}};
  Json weights = Json::object();
  for (const auto& [tag, w] : u.interest_weights) weights[tag] = w;
  j["interest_weights"] = std::move(weights);
  if (u.group_id) j["group_id"] = *u.group_id;
}

void from_json(const Json& j, UserProfile& u) {
  u.id = j.value("id", std::string{});
  u.display_name = j.value("display_name", std::string{});
  u.interest_weights.clear();
  if (auto it = j.find("interest_weights"); it != j.end() && it->is_object()) {
    for (auto w = it->begin(); w != it->end(); ++w) u.interest_weights[w.key()] = w.value().get<double>();
  }
  if (auto it = j.find("group_id"); it != j.end() && it->is_number_integer())
    u.group_id = it->get<int>();
  else
    u.group_id.reset();
}

void to_json(Json& j, const Notification& n) {
  j = Json{{"id", n.id},
           {"recipient", n.recipient},
           {"event_id", n.event_id},
           {"kind", to_string(n.kind)},
           {"created_at", n.created_at},
           {"created_at_wall", n.created_at_wall},
           {"body", n.body}};
}

void from_json(const Json& j, Notification& n) {
  n.id = j.value("id", std::string{});
  n.recipient = j.value("recipient", std::string{});
  n.event_id = j.value("event_id", std::string{});
  auto kind = parse_notification_kind(j.value("kind", std::string{"system"}));
  if (!kind) throw std::invalid_argument("unknown notification kind");
  n.kind = *kind;
  n.created_at = j.value("created_at", Revision{0});
  n.created_at_wall = j.value("created_at_wall", std::string{});
  n.body = j.value("body", std::string{});
}

void to_json(Json& j, const InteractionSample& s) {
  j = Json{{"user_id", s.user_id},
           {"event_id", s.event_id},
           {"action", to_string(s.action)},
           {"filter_tags", set_to_document(s.filter_tags)},
           {"event_tags", set_to_document(s.event_tags)},
           {"at", s.at}};
}

void from_json(const Json& j, InteractionSample& s) {
  s.user_id = j.value("user_id", std::string{});
  s.event_id = j.value("event_id", std::string{});
  auto action = parse_interaction_action(j.value("action", std::string{}));
  if (!action) throw std::invalid_argument("unknown interaction action");
  s.action = *action;
  s.filter_tags = j.contains("filter_tags") ? document_to_set(j.at("filter_tags")) : TagSet{};
  s.event_tags = j.contains("event_tags") ? document_to_set(j.at("event_tags")) : TagSet{};
  s.at = j.value("at", Revision{0});
}

}  // namespace hikester
