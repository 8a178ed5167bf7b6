#include "hikester/recommender/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hikester::recommender {

double ActionWeights::of(InteractionAction a) const {
  switch (a) {
    case InteractionAction::join: return join;
    case InteractionAction::view: return view;
    case InteractionAction::search_filtered: return search_filtered;
    case InteractionAction::decline: return decline;
  }
  return 0.0;
}

const TagSet& sample_tags(const InteractionSample& s) {
  return s.action == InteractionAction::search_filtered ? s.filter_tags : s.event_tags;
}

InterestProfile update_profile(InterestProfile profile, const InteractionSample& s, const ActionWeights& weights) {
  const auto& tags = sample_tags(s);
  if (tags.empty()) return profile;
  const double delta = weights.of(s.action);
  for (const auto& tag : tags) {
    double next = std::max(0.0, profile.weights[tag] + delta);
    if (next > 0.0)
      profile.weights[tag] = next;
    else
      profile.weights.erase(tag);
  }
  ++profile.samples_seen;
  return profile;
}

namespace {

double norm(const TagWeights& w) {
  double s = 0.0;
  for (const auto& [_, v] : w) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double cosine_similarity(const TagWeights& a, const TagWeights& b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  double dot = 0.0;
  for (const auto& [tag, v] : small)
    if (auto it = large.find(tag); it != large.end()) dot += v * it->second;
  return std::clamp(dot / (na * nb), 0.0, 1.0);
}

double score_interest(const TagWeights& weights, const TagSet& tags) {
  const double nw = norm(weights);
  if (nw == 0.0 || tags.empty()) return 0.0;
  double dot = 0.0;
  for (const auto& tag : tags)
    if (auto it = weights.find(tag); it != weights.end()) dot += it->second;
  return std::clamp(dot / (nw * std::sqrt(static_cast<double>(tags.size()))), 0.0, 1.0);
}

// Spherical k-means over dense unit vectors. Centroids start from a seeded
// random point followed by farthest-first picks, which keeps well separated
// populations from sharing an initial centroid.
KMeansResult spherical_kmeans(const std::vector<TagWeights>& profiles, const KMeansConfig& config) {
  if (config.k <= 0) throw std::invalid_argument("k must be positive");
  KMeansResult result;
  result.assignment.assign(profiles.size(), -1);

  std::vector<std::string> vocab;
  for (const auto& p : profiles)
    for (const auto& [tag, _] : p) vocab.push_back(tag);
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  const std::size_t dim = vocab.size();

  using Vec = std::vector<double>;
  std::vector<Vec> points;
  std::vector<std::size_t> origin;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    double n = norm(profiles[i]);
    if (n == 0.0) continue;
    Vec v(dim, 0.0);
    for (const auto& [tag, w] : profiles[i]) {
      auto pos = std::lower_bound(vocab.begin(), vocab.end(), tag) - vocab.begin();
      v[static_cast<std::size_t>(pos)] = w / n;
    }
    points.push_back(std::move(v));
    origin.push_back(i);
  }
  if (points.empty()) return result;

  auto dot = [&](const Vec& a, const Vec& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); };
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config.k), points.size());

  std::mt19937_64 rng(config.seed);
  std::vector<Vec> centroids;
  centroids.push_back(points[std::uniform_int_distribution<std::size_t>(0, points.size() - 1)(rng)]);
  std::vector<double> best_sim(points.size(), -1.0);
  while (centroids.size() < k) {
    std::size_t far = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      best_sim[i] = std::max(best_sim[i], dot(points[i], centroids.back()));
      if (best_sim[i] < best_sim[far]) far = i;
    }
    centroids.push_back(points[far]);
  }

  auto nearest = [&](const Vec& p) {
    std::size_t best = 0;
    double best_value = dot(p, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      double s = dot(p, centroids[c]);
      if (s > best_value) best = c, best_value = s;
    }
    return std::pair{best, best_value};
  };

  std::vector<std::size_t> member(points.size(), k);
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    result.iterations = iter + 1;
    bool changed = false;
    std::vector<double> sim(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto [c, s] = nearest(points[i]);
      sim[i] = s;
      if (member[i] != c) member[i] = c, changed = true;
    }
    if (!changed) break;

    std::vector<Vec> sums(k, Vec(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++counts[member[i]];
      for (std::size_t d = 0; d < dim; ++d) sums[member[i]][d] += points[i][d];
    }
    std::vector<bool> taken(points.size(), false);
    for (std::size_t c = 0; c < k; ++c) {
      double n = std::sqrt(dot(sums[c], sums[c]));
      if (counts[c] > 0 && n > 0.0) {
        for (auto& x : sums[c]) x /= n;
        centroids[c] = std::move(sums[c]);
        continue;
      }
      std::size_t far = points.size();
      for (std::size_t i = 0; i < points.size(); ++i)
        if (!taken[i] && (far == points.size() || sim[i] < sim[far])) far = i;
      if (far == points.size()) continue;
      taken[far] = true;
      centroids[c] = points[far];
      member[far] = c;
    }
  }
  for (std::size_t i = 0; i < points.size(); ++i) member[i] = nearest(points[i]).first;

  for (const auto& c : centroids) {
    TagWeights w;
    for (std::size_t d = 0; d < dim; ++d)
      if (c[d] != 0.0) w[vocab[d]] = c[d];
    result.model.centroids.push_back(std::move(w));
  }
  for (std::size_t i = 0; i < points.size(); ++i) result.assignment[origin[i]] = static_cast<int>(member[i]);
  return result;
}

std::optional<int> assign_group(const RecommendationModel& model, const TagWeights& profile) {
  if (model.centroids.empty() || norm(profile) == 0.0) return std::nullopt;
  int best = 0;
  double best_value = cosine_similarity(profile, model.centroids[0]);
  for (std::size_t c = 1; c < model.centroids.size(); ++c) {
    double s = cosine_similarity(profile, model.centroids[c]);
    if (s > best_value) best = static_cast<int>(c), best_value = s;
  }
  return best;
}

Recommender::Recommender(RecommenderConfig config) : config_(std::move(config)) {
  if (config_.retrain_threshold == 0) throw std::invalid_argument("retrain threshold must be positive");
  model_.store(std::make_shared<const RecommendationModel>());
}

std::optional<int> Recommender::group_for_locked(const TagWeights& weights) const {
  auto m = model_.load();
  return m ? assign_group(*m, weights) : std::nullopt;
}

void Recommender::record_interaction(const InteractionSample& s) {
  bool due = false;
  {
    std::unique_lock lock(mu_);
    auto& p = profiles_[s.user_id];
    p.user_id = s.user_id;
    p = update_profile(std::move(p), s, config_.action_weights);
    p.group_id = group_for_locked(p.weights);
    if (++pending_ >= config_.retrain_threshold) {
      pending_ = 0;
      due = true;
    }
  }
  if (due) retrain();
}

void Recommender::ensure_user(const UserId& user) {
  std::unique_lock lock(mu_);
  profiles_[user].user_id = user;
}

std::vector<UserId> Recommender::generate_recommendations(const EventRecord& e) const {
  if (e.status != EventStatus::active) return {};
  std::vector<std::pair<double, UserId>> scored;
  {
    std::shared_lock lock(mu_);
    for (const auto& [id, p] : profiles_) {
      if (id == e.creator || e.participants.contains(id)) continue;
      double s = score_interest(p.weights, e.tags);
      if (s >= config_.threshold) scored.emplace_back(s, id);
    }
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<UserId> out;
  out.reserve(scored.size());
  for (auto& [_, id] : scored) out.push_back(std::move(id));
  return out;
}

double Recommender::score(const UserId& user, const TagSet& tags) const {
  std::shared_lock lock(mu_);
  auto it = profiles_.find(user);
  return it == profiles_.end() ? 0.0 : score_interest(it->second.weights, tags);
}

std::optional<InterestProfile> Recommender::profile(const UserId& user) const {
  std::shared_lock lock(mu_);
  auto it = profiles_.find(user);
  if (it == profiles_.end()) return std::nullopt;
  return it->second;
}

std::vector<InterestProfile> Recommender::profiles() const {
  std::shared_lock lock(mu_);
  std::vector<InterestProfile> out;
  out.reserve(profiles_.size());
  for (const auto& [_, p] : profiles_) out.push_back(p);
  return out;
}

std::optional<int> Recommender::group_of(const UserId& user) const {
  std::shared_lock lock(mu_);
  auto it = profiles_.find(user);
  return it == profiles_.end() ? std::nullopt : it->second.group_id;
}

std::uint64_t Recommender::pending_samples() const {
  std::shared_lock lock(mu_);
  return pending_;
}

std::shared_ptr<const RecommendationModel> Recommender::retrain() {
  std::lock_guard serial(retrain_mu_);
  std::vector<TagWeights> weights;
  {
    std::shared_lock lock(mu_);
    weights.reserve(profiles_.size());
    for (const auto& [_, p] : profiles_) weights.push_back(p.weights);
  }
  auto result = spherical_kmeans(weights, config_.kmeans);
  auto previous = model_.load();
  result.model.generation = (previous ? previous->generation : 0) + 1;
  auto next = std::make_shared<const RecommendationModel>(std::move(result.model));
  model_.store(next);
  {
    std::unique_lock lock(mu_);
    for (auto& [_, p] : profiles_) p.group_id = assign_group(*next, p.weights);
  }
  ++retrains_;
  return next;
}

store::DocumentPath notification_path(const UserId& recipient, const EventId& event) {
  return store::DocumentPath({"notifications", recipient, "rec-" + event});
}

std::size_t notify(store::Store& store, const std::vector<UserId>& users, const EventRecord& e) {
  std::size_t written = 0;
  for (const auto& user : users) {
    Notification n;
    n.id = "rec-" + e.id;
    n.recipient = user;
    n.event_id = e.id;
    n.kind = NotificationKind::recommendation;
    n.created_at_wall = wall_clock_iso();
    n.body = "New event you may like: " + e.title;
    if (store.create(notification_path(user, e.id), Json(n), {.stamp_revision_field = "created_at"})) ++written;
  }
  return written;
}

nlohmann::json to_json(const RecommendationModel& m) {
  nlohmann::json centroids = nlohmann::json::array();
  for (const auto& c : m.centroids) centroids.push_back(c);
  return {{"type", "recommender"}, {"generation", m.generation}, {"centroids", centroids}};
}

RecommendationModel recommendation_model_from_json(const nlohmann::json& j) {
  RecommendationModel m;
  m.generation = j.value("generation", std::uint64_t{0});
  for (const auto& c : j.at("centroids")) m.centroids.push_back(c.get<TagWeights>());
  return m;
}

}  // namespace hikester::recommender
