#include "hikester/api/service.hpp"

#include <algorithm>
#include <charconv>

#include <spdlog/spdlog.h>

#include "hikester/geo/geohash.hpp"

namespace hikester::api {

using store::DocumentPath;

Json ApiError::body() const {
  Json j{{"code", code_}, {"message", what()}};
  if (!details_.is_null()) j["details"] = details_;
  return j;
}

ApiError bad_request(std::string message, Json details) {
  return ApiError(400, "bad_request", std::move(message), std::move(details));
}
ApiError not_found(std::string message) { return ApiError(404, "not_found", std::move(message)); }
ApiError conflict(std::string message) { return ApiError(409, "conflict", std::move(message)); }

Json paginate(std::vector<Json> items, const Page& page) {
  std::size_t offset = 0;
  if (page.cursor && !page.cursor->empty()) {
    const auto& c = *page.cursor;
    auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), offset);
    if (ec != std::errc{} || ptr != c.data() + c.size()) throw bad_request("invalid cursor");
  }
  Json out{{"items", Json::array()}, {"next_cursor", nullptr}};
  for (std::size_t i = offset; i < items.size() && i < offset + page.limit; ++i)
    out["items"].push_back(std::move(items[i]));
  if (offset + page.limit < items.size()) out["next_cursor"] = std::to_string(offset + page.limit);
  return out;
}

namespace paths {
DocumentPath events() { return DocumentPath({"events"}); }
DocumentPath event(const EventId& id) { return DocumentPath({"events", id}); }
DocumentPath users() { return DocumentPath({"users"}); }
DocumentPath user(const UserId& id) { return DocumentPath({"users", id}); }
DocumentPath recommender_samples() { return DocumentPath({"samples", "recommender"}); }
DocumentPath optimizer_samples() { return DocumentPath({"samples", "optimizer"}); }
DocumentPath notifications(const UserId& user) { return DocumentPath({"notifications", user}); }
DocumentPath model(const std::string& name) { return DocumentPath({"system", "models", name}); }
}  // namespace paths

namespace {

bool valid_id(const std::string& id) { return !id.empty() && store::is_valid_segment(id); }

// Stored documents are ordered by a revision field, then by key.
template <typename T>
std::vector<std::pair<std::string, T>> ordered_children(const std::optional<Json>& doc, const char* rev_field) {
  std::vector<std::tuple<std::uint64_t, std::string, T>> rows;
  if (doc && doc->is_object()) {
    for (auto it = doc->begin(); it != doc->end(); ++it) {
      try {
        rows.emplace_back(it.value().value(rev_field, std::uint64_t{0}), it.key(), it.value().get<T>());
      } catch (const std::exception& e) {
        spdlog::warn("skipping unreadable record {}: {}", it.key(), e.what());
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::vector<std::pair<std::string, T>> out;
  out.reserve(rows.size());
  for (auto& [_, key, value] : rows) out.emplace_back(std::move(key), std::move(value));
  return out;
}

std::optional<std::chrono::system_clock::time_point> start_time(const EventRecord& e) {
  auto date = parse_iso_date(e.start_date);
  if (!date) return std::nullopt;
  return std::chrono::sys_days(*date) + std::chrono::hours(e.start_hour);
}

}  // namespace

Service::Service(Config config) : config_(std::move(config)), moderator_(config_.spam_threshold) {
  store::StoreOptions so;
  if (!config_.data_dir.empty()) so.data_dir = config_.data_dir;
  so.snapshot_every = config_.snapshot_every;
  so.trigger_retry_limit = config_.trigger_retry_limit;
  store_ = std::make_unique<store::Store>(so);

  recommender::RecommenderConfig rc;
  rc.threshold = config_.recommend_threshold;
  rc.retrain_threshold = config_.recommender_retrain_threshold;
  rc.kmeans.k = config_.kmeans_k;
  recommender_ = std::make_unique<recommender::Recommender>(rc);

  optimizer::OptimizerConfig oc;
  oc.retrain_threshold = config_.optimizer_retrain_threshold;
  oc.geo_precision = config_.geohash_precision;
  oc.model.epochs = config_.optimizer_epochs;
  optimizer_ = std::make_unique<optimizer::ParamOptimizer>(oc);

  rebuild();
  register_triggers();
}

Service::~Service() {
  store_->wait_idle();
  for (auto id : triggers_) store_->unregister_trigger(id);
}

void Service::rebuild() {
  if (auto events = store_->get(paths::events()); events && events->is_object())
    for (auto it = events->begin(); it != events->end(); ++it) reindex(it.key());

  if (auto users = store_->get(paths::users()); users && users->is_object())
    for (auto it = users->begin(); it != users->end(); ++it) recommender_->ensure_user(it.key());

  for (auto& [key, sample] : ordered_children<InteractionSample>(store_->get(paths::recommender_samples()), "at")) {
    recommender_->record_interaction(sample);
    applied_recommender_samples_.insert(key);
  }
  for (auto& [key, tuple] : ordered_children<optimizer::TrainingTuple>(store_->get(paths::optimizer_samples()),
                                                                       "recorded_at")) {
    try {
      optimizer_->insert_training_tuple(tuple);
    } catch (const std::invalid_argument& e) {
      spdlog::warn("skipping training tuple {}: {}", key, e.what());
    }
    applied_optimizer_samples_.insert(key);
  }
  persisted_recommender_generation_ = recommender_->model()->generation;
  persisted_optimizer_retrains_ = optimizer_->retrain_count();

  if (auto m = store_->get(paths::model("spam")); m && m->contains("blob")) {
    try {
      moderator_.set_classifier(spam::classifier_from_json(Json::parse(m->at("blob").get<std::string>())));
    } catch (const std::exception& e) {
      spdlog::error("stored spam model unreadable, moderation disabled: {}", e.what());
    }
  }
  spdlog::info("rebuilt state at revision {}: {} indexed events, {} profiles, {} training tuples",
               store_->revision(), geo_.size(), recommender_->profiles().size(), optimizer_->history().size());
}

void Service::register_triggers() {
  triggers_.push_back(store_->register_trigger(
      paths::events(),
      [this](const store::ChangeEvent& e) {
        if (e.path.depth() == 1) {
          geo_.clear();
          search_.clear();
          if (auto all = store_->get(paths::events()); all && all->is_object())
            for (auto it = all->begin(); it != all->end(); ++it) reindex(it.key());
          return;
        }
        reindex(e.path.segments()[1]);
      },
      "index"));
  triggers_.push_back(store_->register_trigger(
      paths::events(), [this](const store::ChangeEvent& e) { on_event_change(e); }, "pipeline"));
  triggers_.push_back(store_->register_trigger(
      paths::recommender_samples(), [this](const store::ChangeEvent& e) { on_recommender_sample(e); },
      "recommender"));
  triggers_.push_back(store_->register_trigger(
      paths::optimizer_samples(), [this](const store::ChangeEvent& e) { on_optimizer_sample(e); }, "optimizer"));
}

std::optional<EventRecord> Service::load_event(const EventId& id) const {
  if (!valid_id(id)) return std::nullopt;
  auto doc = store_->get(paths::event(id));
  if (!doc || !doc->is_object()) return std::nullopt;
  try {
    auto e = doc->get<EventRecord>();
    e.id = id;
    return e;
  } catch (const std::exception& ex) {
    spdlog::warn("event {} unreadable: {}", id, ex.what());
    return std::nullopt;
  }
}

void Service::reindex(const EventId& id) {
  auto e = load_event(id);
  if (e && e->status == EventStatus::active) {
    geo_.put(id, e->location);
    search_.index_event(*e);
  } else {
    geo_.remove(id);
    search_.remove_event(id);
  }
}

// Runs once per newly created event: screen it, then either flag it or hand
// it to the recommender. Both outcomes are idempotent, so a repeated
// delivery of the same change is harmless.
void Service::on_event_change(const store::ChangeEvent& e) {
  if (e.path.depth() != 2 || e.kind != store::ChangeKind::created) return;
  auto ev = load_event(e.path.leaf());
  if (!ev || ev->status != EventStatus::active) return;
  auto verdict = moderator_.moderate(*ev);
  if (verdict.status == EventStatus::flagged_spam) {
    store_->put(paths::event(ev->id).child("status"), std::string(to_string(EventStatus::flagged_spam)));
    Notification n;
    n.id = "spam-" + ev->id;
    n.recipient = ev->creator;
    n.event_id = ev->id;
    n.kind = NotificationKind::spam_flag;
    n.created_at_wall = wall_clock_iso();
    n.body = "Your event \"" + ev->title + "\" was flagged as spam and is hidden from other users.";
    store_->create(paths::notifications(ev->creator).child(n.id), Json(n), {.stamp_revision_field = "created_at"});
    spdlog::info("event {} flagged as spam (posterior {})", ev->id, verdict.posterior.value_or(-1.0));
    return;
  }
  auto users = recommender_->generate_recommendations(*ev);
  auto written = recommender::notify(*store_, users, *ev);
  spdlog::debug("event {}: {} recommendation(s), {} new", ev->id, users.size(), written);
}

void Service::on_recommender_sample(const store::ChangeEvent& e) {
  if (e.path.depth() != 3 || e.kind == store::ChangeKind::deleted || !e.value) return;
  if (!applied_recommender_samples_.insert(e.path.leaf()).second) return;
  recommender_->record_interaction(e.value->get<InteractionSample>());
  auto model = recommender_->model();
  if (model->generation != persisted_recommender_generation_) {
    persist_model("recommender", recommender::to_json(*model));
    persisted_recommender_generation_ = model->generation;
  }
}

void Service::on_optimizer_sample(const store::ChangeEvent& e) {
  if (e.path.depth() != 3 || e.kind == store::ChangeKind::deleted || !e.value) return;
  if (!applied_optimizer_samples_.insert(e.path.leaf()).second) return;
  optimizer_->insert_training_tuple(e.value->get<optimizer::TrainingTuple>());
  if (optimizer_->retrain_count() != persisted_optimizer_retrains_) {
    persisted_optimizer_retrains_ = optimizer_->retrain_count();
    if (auto m = optimizer_->model(optimizer::Target::time)) persist_model("optimizer_time", optimizer::to_json(*m));
    if (auto m = optimizer_->model(optimizer::Target::date)) persist_model("optimizer_date", optimizer::to_json(*m));
  }
}

void Service::persist_model(const std::string& name, const Json& model) {
  store_->put(paths::model(name), Json{{"blob", model.dump()}, {"saved_at_wall", wall_clock_iso()}});
}

void Service::record_sample(InteractionSample s) {
  store_->create(paths::recommender_samples().child(generate_id()), Json(s), {.stamp_revision_field = "at"});
}

void Service::require_user(const UserId& id) const {
  if (!valid_id(id) || !store_->get(paths::user(id))) throw not_found("unknown user '" + id + "'");
}

UserProfile Service::create_user(const Json& body) {
  if (!body.is_object()) throw bad_request("body must be a JSON object");
  UserProfile u;
  auto name = body.find("display_name");
  if (name == body.end() || !name->is_string() || name->get<std::string>().empty())
    throw bad_request("display_name must be a non-empty string");
  u.display_name = name->get<std::string>();
  u.id = generate_id();
  store_->put(paths::user(u.id), Json(u));
  recommender_->ensure_user(u.id);
  return u;
}

UserProfile Service::get_user(const UserId& id) const {
  if (!valid_id(id)) throw not_found("unknown user '" + id + "'");
  auto doc = store_->get(paths::user(id));
  if (!doc) throw not_found("unknown user '" + id + "'");
  auto u = doc->get<UserProfile>();
  u.id = id;
  if (auto p = recommender_->profile(id)) {
    u.interest_weights = p->weights;
    u.group_id = p->group_id;
  }
  return u;
}

EventRecord Service::create_event(const Json& body) {
  if (!body.is_object()) throw bad_request("body must be a JSON object");
  EventRecord e;
  try {
    e.title = body.value("title", std::string{});
    e.description = body.value("description", std::string{});
    if (auto t = body.find("tags"); t != body.end())
      for (const auto& raw : document_to_set(*t)) e.tags.insert(canonical_tag(raw));
    e.tags.erase(std::string{});
    e.start_hour = body.at("start_hour").get<int>();
    e.start_date = body.at("start_date").get<std::string>();
    if (auto d = body.find("day_of_week"); d != body.end() && !d->is_null()) {
      e.day_of_week = d->get<int>();
    } else if (auto date = parse_iso_date(e.start_date)) {
      e.day_of_week = day_of_week(*date);
    }
    e.location = body.at("location").get<GeoPoint>();
    e.creator = body.at("creator").get<std::string>();
  } catch (const Json::exception& ex) {
    throw bad_request(std::string("malformed event: ") + ex.what());
  }
  e.location.lon = normalize_longitude(e.location.lon);
  e.participants = {e.creator};
  e.status = EventStatus::active;

  auto verdict = validate_event(e);
  if (!verdict.ok()) throw bad_request("event failed validation", verdict.violations);
  require_user(e.creator);

  e.id = generate_id();
  e.created_at = store_->put(paths::event(e.id), Json(e), {.stamp_revision_field = "created_at"});
  return e;
}

EventRecord Service::get_event(const EventId& id, const std::optional<UserId>& viewer) {
  auto e = load_event(id);
  if (!e) throw not_found("unknown event '" + id + "'");
  if (viewer) {
    require_user(*viewer);
    record_sample({*viewer, id, InteractionAction::view, {}, 0, e->tags});
  }
  return *e;
}

EventRecord Service::join_event(const EventId& id, const UserId& user) {
  auto e = load_event(id);
  if (!e) throw not_found("unknown event '" + id + "'");
  require_user(user);
  if (e->status != EventStatus::active)
    throw conflict("event '" + id + "' is " + std::string(to_string(e->status)));
  if (e->participants.contains(user)) return *e;
  store_->put(paths::event(id).child("participants").child(user), true);
  record_sample({user, id, InteractionAction::join, {}, 0, e->tags});
  return *load_event(id);
}

EventRecord Service::leave_event(const EventId& id, const UserId& user) {
  auto e = load_event(id);
  if (!e) throw not_found("unknown event '" + id + "'");
  require_user(user);
  if (user == e->creator) throw conflict("the creator cannot leave their own event");
  if (!e->participants.contains(user)) return *e;
  store_->remove(paths::event(id).child("participants").child(user));
  record_sample({user, id, InteractionAction::decline, {}, 0, e->tags});
  return *load_event(id);
}

std::vector<SearchResult> Service::search(const search::SearchQuery& q, const std::optional<UserId>& user) {
  try {
    search::validate(q);
  } catch (const std::invalid_argument& ex) {
    throw bad_request(ex.what());
  }
  if (user) require_user(*user);
  std::vector<SearchResult> out;
  for (auto& hit : search_.search(q))
    if (auto e = load_event(hit.event_id)) out.push_back({std::move(hit), std::move(*e)});
  if (user && !q.tags.empty()) record_sample({*user, {}, InteractionAction::search_filtered, q.tags, 0, {}});
  return out;
}

std::vector<NearbyResult> Service::nearby(const geo::GeoQuery& q) const {
  try {
    geo::validate(q);
  } catch (const std::invalid_argument& ex) {
    throw bad_request(ex.what());
  }
  std::vector<NearbyResult> out;
  for (auto& m : geo_.radius_query(q))
    if (auto e = load_event(m.event_id)) out.push_back({std::move(m), std::move(*e)});
  return out;
}

optimizer::Ranking Service::suggest_time(const TagSet& tags) const {
  if (tags.empty()) throw bad_request("tags are required");
  return optimizer_->suggest_time(tags);
}

optimizer::Ranking Service::suggest_date(const TagSet& tags) const {
  if (tags.empty()) throw bad_request("tags are required");
  return optimizer_->suggest_date(tags);
}

std::vector<optimizer::PlaceSuggestion> Service::suggest_places(const std::string& tag, int hour, int day,
                                                                std::size_t k) const {
  if (tag.empty()) throw bad_request("tags are required");
  if (hour < 0 || hour > 23) throw bad_request("hour out of range");
  if (day < 0 || day > 6) throw bad_request("day_of_week out of range");
  if (k == 0) throw bad_request("k must be positive");
  return optimizer_->popular_places(tag, hour, day, k);
}

std::vector<Notification> Service::recommendations(const UserId& user) const {
  require_user(user);
  std::vector<Notification> out;
  for (auto& [_, n] : ordered_children<Notification>(store_->get(paths::notifications(user)), "created_at"))
    if (n.kind == NotificationKind::recommendation) out.push_back(std::move(n));
  std::reverse(out.begin(), out.end());
  return out;
}

std::size_t Service::complete_due_events(std::chrono::system_clock::time_point now) {
  auto all = store_->get(paths::events());
  if (!all || !all->is_object()) return 0;
  std::size_t recorded = 0;
  for (auto it = all->begin(); it != all->end(); ++it) {
    auto e = load_event(it.key());
    if (!e || e->status != EventStatus::active) continue;
    auto start = start_time(*e);
    if (!start || *start > now) continue;
    auto tuple = optimizer::tuple_from_event(*e, config_.geohash_precision);
    if (store_->create(paths::optimizer_samples().child(e->id), Json(tuple), {.stamp_revision_field = "recorded_at"}))
      ++recorded;
  }
  return recorded;
}

void Service::train_spam(const std::vector<spam::TextExample>& corpus) {
  auto kind = spam::parse_classifier_kind(config_.spam_classifier);
  if (!kind) throw ConfigError("unknown spam_classifier '" + config_.spam_classifier + "'");
  spam::TrainingOptions options;
  options.kind = *kind;
  auto classifier = spam::train_classifier(corpus, options);
  persist_model("spam", classifier->to_json());
  moderator_.set_classifier(std::move(classifier));
  spdlog::info("spam classifier ({}) trained on {} examples", config_.spam_classifier, corpus.size());
}

}  // namespace hikester::api
