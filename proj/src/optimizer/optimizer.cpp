#include "hikester/optimizer/optimizer.hpp"

#include <algorithm>
#include <numeric>

#include "hikester/geo/geohash.hpp"

namespace hikester::optimizer {

void to_json(Json& j, const TrainingTuple& t) {
  j = Json{{"tags", set_to_document(t.tags)},
           {"hour", t.hour},
           {"day_of_week", t.day_of_week},
           {"geo_cell", t.geo_cell},
           {"attendance", t.attendance}};
}

void from_json(const Json& j, TrainingTuple& t) {
  t.tags = document_to_set(j.at("tags"));
  t.hour = j.at("hour").get<int>();
  t.day_of_week = j.at("day_of_week").get<int>();
  t.geo_cell = j.at("geo_cell").get<std::string>();
  t.attendance = j.at("attendance").get<std::int64_t>();
}

void validate(const TrainingTuple& t) {
  if (t.hour < 0 || t.hour > 23) throw std::invalid_argument("hour out of range");
  if (t.day_of_week < 0 || t.day_of_week > 6) throw std::invalid_argument("day_of_week out of range");
  if (t.attendance < 0) throw std::invalid_argument("attendance negative");
  if (!t.geo_cell.empty()) geo::decode_geohash(t.geo_cell);
}

TrainingTuple tuple_from_event(const EventRecord& e, int geo_precision) {
  return {e.tags, e.start_hour, e.day_of_week, geo::encode_geohash(e.location, geo_precision),
          static_cast<std::int64_t>(e.participants.size())};
}

int candidate_count(Target t) { return t == Target::time ? 24 : 7; }

int candidate_of(const TrainingTuple& t, Target target) { return target == Target::time ? t.hour : t.day_of_week; }

Ranking rank(std::vector<double> scores) {
  Ranking r;
  r.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) r.push_back({static_cast<int>(i), scores[i]});
  std::stable_sort(r.begin(), r.end(), [](const RankedValue& a, const RankedValue& b) { return a.score > b.score; });
  return r;
}

Ranking histogram_ranking(const std::vector<TrainingTuple>& history, const TagSet& tags, Target target) {
  auto shares_tag = [&](const TrainingTuple& t) {
    return std::any_of(t.tags.begin(), t.tags.end(), [&](const std::string& tag) { return tags.contains(tag); });
  };
  bool any_overlap = std::any_of(history.begin(), history.end(), shares_tag);
  const auto n = static_cast<std::size_t>(candidate_count(target));
  std::vector<double> sum(n, 0.0), count(n, 0.0);
  for (const auto& t : history) {
    if (any_overlap && !shares_tag(t)) continue;
    auto c = static_cast<std::size_t>(candidate_of(t, target));
    sum[c] += static_cast<double>(t.attendance);
    count[c] += 1.0;
  }
  std::vector<double> mean(n, 0.0);
  for (std::size_t c = 0; c < n; ++c)
    if (count[c] > 0) mean[c] = sum[c] / count[c];
  return rank(std::move(mean));
}

std::vector<std::string> build_tag_vocabulary(const std::vector<TrainingTuple>& history, std::size_t cap) {
  std::map<std::string, std::size_t> freq;
  for (const auto& t : history)
    for (const auto& tag : t.tags) ++freq[tag];
  std::vector<std::pair<std::string, std::size_t>> ordered(freq.begin(), freq.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> vocab;
  for (std::size_t i = 0; i < ordered.size() && i < cap; ++i) vocab.push_back(ordered[i].first);
  return vocab;
}

std::vector<double> ParamModel::encode(const TagSet& tags, int candidate) const {
  std::vector<double> x(input_size(), 0.0);
  for (std::size_t i = 0; i < tag_vocabulary.size(); ++i)
    if (tags.contains(tag_vocabulary[i])) x[i] = 1.0;
  x[tag_vocabulary.size() + static_cast<std::size_t>(candidate)] = 1.0;
  return x;
}

double ParamModel::predict(const TagSet& tags, int candidate) const {
  return mlp.predict(encode(tags, candidate)) * target_scale;
}

Ranking ParamModel::ranking(const TagSet& tags) const {
  const int n = candidate_count(target);
  Eigen::MatrixXd inputs(n, static_cast<Eigen::Index>(input_size()));
  for (int c = 0; c < n; ++c) {
    auto x = encode(tags, c);
    for (std::size_t i = 0; i < x.size(); ++i) inputs(c, static_cast<Eigen::Index>(i)) = x[i];
  }
  Eigen::VectorXd out = mlp.predict(inputs) * target_scale;
  return rank(std::vector<double>(out.data(), out.data() + out.size()));
}

std::optional<ParamModel> train_param_model(const std::vector<TrainingTuple>& history, Target target,
                                            const ParamModelConfig& config) {
  if (history.empty()) return std::nullopt;
  ParamModel m;
  m.target = target;
  m.tag_vocabulary = build_tag_vocabulary(history, config.max_tag_vocabulary);
  std::int64_t max_attendance = 0;
  for (const auto& t : history) max_attendance = std::max(max_attendance, t.attendance);
  m.target_scale = max_attendance > 0 ? static_cast<double>(max_attendance) : 1.0;

  const auto rows = static_cast<Eigen::Index>(history.size());
  Eigen::MatrixXd inputs(rows, static_cast<Eigen::Index>(m.input_size()));
  Eigen::VectorXd targets(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& t = history[static_cast<std::size_t>(r)];
    auto x = m.encode(t.tags, candidate_of(t, target));
    for (std::size_t i = 0; i < x.size(); ++i) inputs(r, static_cast<Eigen::Index>(i)) = x[i];
    targets(r) = static_cast<double>(t.attendance) / m.target_scale;
  }
  spam::MlpConfig mc{config.hidden_size,   config.epochs,
                     config.learning_rate, config.seed,
                     spam::Activation::identity, spam::LossKind::mean_squared_error};
  m.mlp = spam::mlp_train(inputs, targets, mc).model;
  return m;
}

nlohmann::json to_json(const ParamModel& m) {
  return {{"target", m.target == Target::time ? "time" : "date"},
          {"tag_vocabulary", m.tag_vocabulary},
          {"target_scale", m.target_scale},
          {"mlp", spam::to_json(m.mlp)}};
}

ParamModel param_model_from_json(const nlohmann::json& j) {
  ParamModel m;
  m.target = j.at("target").get<std::string>() == "time" ? Target::time : Target::date;
  m.tag_vocabulary = j.at("tag_vocabulary").get<std::vector<std::string>>();
  m.target_scale = j.at("target_scale").get<double>();
  m.mlp = spam::mlp_from_json(j.at("mlp"));
  return m;
}

void PopularPlacesIndex::insert(const TrainingTuple& t) {
  for (const auto& tag : t.tags) cells_[{tag, t.hour, t.day_of_week}][t.geo_cell] += t.attendance;
}

std::vector<PlaceSuggestion> PopularPlacesIndex::top(const std::string& tag, int hour, int day_of_week,
                                                     std::size_t k) const {
  auto it = cells_.find({tag, hour, day_of_week});
  if (it == cells_.end()) return {};
  std::vector<std::pair<std::string, std::int64_t>> ranked(it->second.begin(), it->second.end());
  // map order is ascending cell code, so a stable sort keeps that as the tie-break
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > k) ranked.resize(k);
  std::vector<PlaceSuggestion> out;
  out.reserve(ranked.size());
  for (auto& [cell, count] : ranked) {
    GeoPoint center = cell.empty() ? GeoPoint{} : geo::decode_geohash(cell).center();
    out.push_back({std::move(cell), center, count});
  }
  return out;
}

ParamOptimizer::ParamOptimizer(OptimizerConfig config) : config_(std::move(config)) {
  if (config_.retrain_threshold == 0) throw std::invalid_argument("retrain threshold must be positive");
}

ActivityResult ParamOptimizer::handle_activity(const Activity& a) {
  if (a.kind == "event_completed") {
    if (!a.tuple) throw std::invalid_argument("event_completed activity needs a training tuple");
    insert_training_tuple(*a.tuple);
    return std::monostate{};
  }
  if (a.kind == "time_help") return suggest_time(a.tags);
  if (a.kind == "date_help") return suggest_date(a.tags);
  if (a.kind == "place_help") {
    if (a.tags.empty()) throw std::invalid_argument("place_help activity needs a tag");
    return popular_places(*a.tags.begin(), a.hour, a.day_of_week, a.k);
  }
  throw UnknownActivity("unknown activity kind '" + a.kind + "'");
}

void ParamOptimizer::insert_training_tuple(const TrainingTuple& t) {
  validate(t);
  bool due = false;
  {
    std::unique_lock lock(mu_);
    history_.push_back(t);
    places_.insert(t);
    if (++pending_ >= config_.retrain_threshold) {
      pending_ = 0;
      due = true;
    }
  }
  if (due) retrain();
}

void ParamOptimizer::retrain() {
  std::lock_guard serial(retrain_mu_);
  auto snapshot = history();
  for (auto target : {Target::time, Target::date}) {
    auto trained = train_param_model(snapshot, target, config_.model);
    if (!trained) continue;
    auto next = std::make_shared<const ParamModel>(std::move(*trained));
    (target == Target::time ? time_model_ : date_model_).store(std::move(next));
  }
  ++retrains_;
}

Ranking ParamOptimizer::suggest(const TagSet& tags, Target target) const {
  if (auto m = model(target)) return m->ranking(tags);
  std::shared_lock lock(mu_);
  return histogram_ranking(history_, tags, target);
}

std::vector<PlaceSuggestion> ParamOptimizer::popular_places(const std::string& tag, int hour, int day_of_week,
                                                            std::size_t k) const {
  std::shared_lock lock(mu_);
  return places_.top(tag, hour, day_of_week, k);
}

std::uint64_t ParamOptimizer::pending_tuples() const {
  std::shared_lock lock(mu_);
  return pending_;
}

std::vector<TrainingTuple> ParamOptimizer::history() const {
  std::shared_lock lock(mu_);
  return history_;
}

std::shared_ptr<const ParamModel> ParamOptimizer::model(Target t) const {
  return (t == Target::time ? time_model_ : date_model_).load();
}

}  // namespace hikester::optimizer
