#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hikester {

using Json = nlohmann::json;
using Revision = std::uint64_t;
using UserId = std::string;
using EventId = std::string;
using TagSet = std::set<std::string>;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Wraps any finite longitude into [-180, 180).
double normalize_longitude(double lon);
bool is_valid(const GeoPoint& p);

enum class EventStatus { active, flagged_spam, cancelled };

std::string_view to_string(EventStatus s);
std::optional<EventStatus> parse_event_status(std::string_view s);

/// Calendar date helpers over std::chrono::year_month_day.
std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view text);
std::string format_iso_date(const std::chrono::year_month_day& d);
/// 0 = Monday ... 6 = Sunday.
int day_of_week(const std::chrono::year_month_day& d);

struct EventRecord {
  EventId id;
  std::string title;
  std::string description;
  TagSet tags;
  int start_hour = 0;
  int day_of_week = 0;
  std::string start_date;  // ISO 8601, YYYY-MM-DD
  GeoPoint location;
  UserId creator;
  std::set<UserId> participants;
  EventStatus status = EventStatus::active;
  Revision created_at = 0;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct UserProfile {
  UserId id;
  std::string display_name;
  std::map<std::string, double> interest_weights;
  std::optional<int> group_id;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

enum class NotificationKind { recommendation, spam_flag, system };

std::string_view to_string(NotificationKind k);
std::optional<NotificationKind> parse_notification_kind(std::string_view s);

struct Notification {
  std::string id;
  UserId recipient;
  EventId event_id;
  NotificationKind kind = NotificationKind::system;
  Revision created_at = 0;
  std::string created_at_wall;
  std::string body;

  friend bool operator==(const Notification&, const Notification&) = default;
};

enum class InteractionAction { search_filtered, view, join, decline };

std::string_view to_string(InteractionAction a);
std::optional<InteractionAction> parse_interaction_action(std::string_view s);

struct InteractionSample {
  UserId user_id;
  EventId event_id;  // empty for search_filtered
  InteractionAction action = InteractionAction::view;
  TagSet filter_tags;
  Revision at = 0;
  // Tags of the event the action was taken on, captured when the sample is
  // recorded so profiles stay a pure fold over the sample log.
  TagSet event_tags;

  friend bool operator==(const InteractionSample&, const InteractionSample&) = default;
};

/// filter_tags is non-empty exactly when the action is search_filtered.
bool is_consistent(const InteractionSample& s);

/// Lowercases and trims; returns empty string for blank input.
std::string canonical_tag(std::string_view raw);
/// True for a canonical tag usable as a document key: [a-z0-9_-]+.
bool is_valid_tag(std::string_view tag);

struct ValidationVerdict {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every EventRecord field range and invariant. The id and
/// created_at fields are ignored (they are assigned server-side).
ValidationVerdict validate_event(const EventRecord& candidate);

/// 20 characters from the URL-safe alphabet [A-Za-z0-9_-].
std::string generate_id();

/// Current UTC wall-clock time as ISO 8601 (seconds precision).
std::string wall_clock_iso();

// Canonical document form. Sets are stored as maps of key -> true.
void to_json(Json& j, const GeoPoint& p);
void from_json(const Json& j, GeoPoint& p);
void to_json(Json& j, const EventRecord& e);
void from_json(const Json& j, EventRecord& e);
void to_json(Json& j, const UserProfile& u);
void from_json(const Json& j, UserProfile& u);
void to_json(Json& j, const Notification& n);
void from_json(const Json& j, Notification& n);
void to_json(Json& j, const InteractionSample& s);
void from_json(const Json& j, InteractionSample& s);

Json set_to_document(const std::set<std::string>& keys);
std::set<std::string> document_to_set(const Json& j);

}  // namespace hikester
