// Runs every primary acceptance criterion and prints one PASS/FAIL line per
// criterion. Exit status is non-zero when any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <functional>
#include <random>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "hikester/api/replay.hpp"
#include "hikester/api/subscription.hpp"
#include "hikester/geo/geo_index.hpp"
#include "hikester/optimizer/optimizer.hpp"
#include "hikester/recommender/recommender.hpp"
#include "hikester/search/search_index.hpp"
#include "hikester/spam/classifier.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

using namespace hikester;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size()))) - 1;
  return v[std::min(idx, v.size() - 1)];
}

// ---------------------------------------------------------------------------
// Crash recovery

const std::vector<std::string> kWords = {"hike", "chess", "football", "lake", "sunset", "tea",  "river", "board",
                                         "night", "run",  "bike",  "yoga",     "music", "jam",    "park", "trail"};
const std::vector<std::string> kTags = {"sport", "outdoor", "games", "music", "calm", "food"};

struct Op {
  store::DocumentPath path;
  std::optional<Json> value;  // absent: remove
};

std::string random_text(std::mt19937& rng, int words) {
  std::string out;
  for (int i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += kWords[std::uniform_int_distribution<std::size_t>(0, kWords.size() - 1)(rng)];
  }
  return out;
}

Json random_event(std::mt19937& rng, const std::string& id) {
  EventRecord e;
  e.id = id;
  e.title = random_text(rng, std::uniform_int_distribution<int>(1, 4)(rng));
  e.description = random_text(rng, std::uniform_int_distribution<int>(0, 6)(rng));
  for (const auto& t : kTags)
    if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) e.tags.insert(t);
  if (e.tags.empty()) e.tags.insert(kTags[0]);
  e.start_hour = std::uniform_int_distribution<int>(0, 23)(rng);
  e.start_date = fmt::format("2030-{:02}-{:02}", std::uniform_int_distribution<int>(1, 12)(rng),
                             std::uniform_int_distribution<int>(1, 28)(rng));
  e.day_of_week = day_of_week(*parse_iso_date(e.start_date));
  std::uniform_real_distribution<double> lat(-80, 80), lon(-180, 180);
  e.location = {lat(rng), normalize_longitude(lon(rng))};
  e.creator = "u" + std::to_string(std::uniform_int_distribution<int>(0, 9)(rng));
  e.participants = {e.creator};
  return Json(e);
}

std::vector<Op> crash_script(std::size_t count) {
  std::mt19937 rng(20240517);
  std::vector<Op> ops;
  std::vector<std::string> live;
  int next_id = 0;
  while (ops.size() < count) {
    int kind = live.empty() ? 0 : std::uniform_int_distribution<int>(0, 9)(rng);
    if (kind <= 3) {
      auto id = "e" + std::to_string(next_id++);
      ops.push_back({store::DocumentPath({"events", id}), random_event(rng, id)});
      live.push_back(id);
      continue;
    }
    auto idx = std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng);
    const auto id = live[idx];
    auto base = store::DocumentPath({"events", id});
    switch (kind) {
      case 4: {
        static const char* statuses[] = {"active", "flagged_spam", "cancelled"};
        ops.push_back({base.child("status"), Json(statuses[std::uniform_int_distribution<int>(0, 2)(rng)])});
        break;
      }
      case 5: {
        std::uniform_real_distribution<double> lat(-80, 80), lon(-180, 180);
        ops.push_back({base.child("location"), Json(GeoPoint{lat(rng), normalize_longitude(lon(rng))})});
        break;
      }
      case 6:
        ops.push_back({base.child("title"), Json(random_text(rng, 3))});
        break;
      case 7:
        ops.push_back({base.child("participants").child("u" + std::to_string(std::uniform_int_distribution<int>(0, 9)(rng))),
                       Json(true)});
        break;
      case 8:
        ops.push_back({base, std::nullopt});
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(idx));
        break;
      default:
        ops.push_back({store::DocumentPath({"users", "u" + std::to_string(std::uniform_int_distribution<int>(0, 9)(rng))}),
                       Json{{"display_name", random_text(rng, 1)}}});
    }
  }
  return ops;
}

// Applies the script to a plain JSON tree, creating intermediate objects.
Json oracle_tree(const std::vector<Op>& ops) {
  Json tree = Json::object();
  for (const auto& op : ops) {
    const auto& segs = op.path.segments();
    Json* node = &tree;
    bool missing = false;
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
      if (!node->contains(segs[i])) {
        if (!op.value) {
          missing = true;
          break;
        }
        (*node)[segs[i]] = Json::object();
      }
      node = &(*node)[segs[i]];
    }
    if (missing) continue;
    if (op.value)
      (*node)[segs.back()] = *op.value;
    else
      node->erase(segs.back());
    // A removal can leave an empty parent; the store keeps it, so do we.
  }
  return tree;
}

using SearchDocs = std::map<EventId, search::SearchIndex::Fields>;

void expected_indexes(const Json& tree, std::map<EventId, GeoPoint>& geo, SearchDocs& docs) {
  if (!tree.contains("events")) return;
  for (auto it = tree["events"].begin(); it != tree["events"].end(); ++it) {
    const auto& e = it.value();
    if (e.value("status", "") != "active") continue;
    geo[it.key()] = {e["location"]["lat"].get<double>(), e["location"]["lon"].get<double>()};
    search::SearchIndex::Fields f;
    for (auto t = e["tags"].begin(); t != e["tags"].end(); ++t) f.tags.insert(t.key());
    f.start_hour = e["start_hour"].get<int>();
    f.start_date = e["start_date"].get<std::string>();
    std::string text = e["title"].get<std::string>() + " " + e["description"].get<std::string>();
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto end = text.find(' ', pos);
      if (end == std::string::npos) end = text.size();
      if (end > pos) f.terms[text.substr(pos, end - pos)] += 1;
      pos = end + 1;
    }
    docs[it.key()] = f;
  }
}

Outcome crash_recovery() {
  constexpr std::size_t kWrites = 1000;
  testing::TempDir dir;
  auto ops = crash_script(kWrites);
  pid_t child = ::fork();
  if (child < 0) return {false, "fork failed"};
  if (child == 0) {
    api::Config c;
    c.data_dir = dir.path().string();
    c.snapshot_every = 150;
    auto* service = new api::Service(c);  // never destroyed: the process dies mid-flight
    for (const auto& op : ops) {
      if (op.value)
        service->store().put(op.path, *op.value);
      else
        service->store().remove(op.path);
    }
    ::raise(SIGKILL);
    ::_exit(3);
  }
  int status = 0;
  ::waitpid(child, &status, 0);
  if (!WIFSIGNALED(status) || WTERMSIG(status) != SIGKILL) return {false, "child did not die by SIGKILL"};

  auto want_tree = oracle_tree(ops);
  std::map<EventId, GeoPoint> want_geo;
  SearchDocs want_docs;
  expected_indexes(want_tree, want_geo, want_docs);

  auto replayed = api::replay_from_log(dir.path() / std::string(store::kLogFileName));
  bool replay_ok = replayed.state.tree == want_tree && replayed.state.revision == kWrites &&
                   replayed.geo->entries() == want_geo && replayed.search->documents() == want_docs;

  api::Config c;
  c.data_dir = dir.path().string();
  api::Service restarted(c);
  bool restart_ok = restarted.store().dump() == want_tree && restarted.store().revision() == kWrites &&
                    restarted.geo_index().entries() == want_geo && restarted.search_index().documents() == want_docs;
  return {replay_ok && restart_ok,
          fmt::format("{} writes, revision {} (snapshot {}), {} active events; replay {}, restart {}", kWrites,
                      replayed.state.revision, replayed.state.snapshot_revision, want_geo.size(),
                      replay_ok ? "match" : "MISMATCH", restart_ok ? "match" : "MISMATCH")};
}

// ---------------------------------------------------------------------------
// Store ordering

Outcome store_ordering() {
  store::Store s;
  constexpr int kWriters = 8, kPerWriter = 250, kTotal = kWriters * kPerWriter;
  const store::DocumentPath root({"items"});
  std::vector<std::shared_ptr<store::ChangeStream>> streams;
  for (int i = 0; i < 3; ++i) streams.push_back(s.subscribe({root, {}}));
  store::Filter even;
  even.equals("parity", 0);
  auto filtered = s.subscribe({root, even});
  std::mutex cb_mu;
  std::vector<store::Revision> callback_revs;
  auto callback = s.subscribe({root, {}}, [&](const store::ChangeEvent& e) {
    std::lock_guard lock(cb_mu);
    callback_revs.push_back(e.revision);
    return true;
  });

  auto t0 = Clock::now();
  const auto base = s.revision();
  std::vector<std::thread> writers;
  for (int w = 0; w < kWriters; ++w)
    writers.emplace_back([&, w] {
      for (int j = 0; j < kPerWriter; ++j)
        s.put(root.child(fmt::format("w{}-{}", w, j)), Json{{"writer", w}, {"seq", j}, {"parity", j % 2}});
    });
  for (auto& t : writers) t.join();

  auto drain = [&](store::ChangeStream& st, std::size_t expected) {
    std::vector<store::Revision> revs;
    while (revs.size() < expected) {
      auto e = st.next(2s);
      if (!e) break;
      revs.push_back(e->revision);
    }
    while (auto extra = st.try_next()) revs.push_back(extra->revision);
    return revs;
  };
  bool ok = true;
  std::string problem;
  for (auto& st : streams) {
    auto revs = drain(*st, kTotal);
    bool exact = revs.size() == kTotal;
    for (std::size_t i = 0; exact && i < revs.size(); ++i) exact = revs[i] == base + 1 + i;
    if (!exact) {
      ok = false;
      problem = fmt::format("stream got {} events", revs.size());
    }
  }
  auto even_revs = drain(*filtered, kTotal / 2);
  bool filtered_ok = even_revs.size() == kTotal / 2 && std::is_sorted(even_revs.begin(), even_revs.end()) &&
                     std::adjacent_find(even_revs.begin(), even_revs.end()) == even_revs.end();
  s.wait_idle();
  std::vector<store::Revision> cb;
  {
    std::lock_guard lock(cb_mu);
    cb = callback_revs;
  }
  bool cb_ok = cb.size() == kTotal;
  for (std::size_t i = 0; cb_ok && i < cb.size(); ++i) cb_ok = cb[i] == base + 1 + i;
  double elapsed = seconds_since(t0);
  ok = ok && filtered_ok && cb_ok && elapsed < 5.0;
  return {ok, fmt::format("{} events to 3 streams + 1 callback in order without gaps, filtered {} of {}; {:.2f} s{}",
                          kTotal, even_revs.size(), kTotal / 2, elapsed, problem.empty() ? "" : "; " + problem)};
}

// ---------------------------------------------------------------------------
// Real-time scenario over HTTP

Outcome realtime_scenario() {
  api::Config c;
  c.http_threads = 64;
  c.heartbeat_seconds = 30;
  testing::LiveServer server(c);
  auto client = server.client();
  std::vector<std::string> users;
  for (const char* name : {"user-a", "user-b"}) {
    auto r = client.Post("/users", Json{{"display_name", name}}.dump(), "application/json");
    users.push_back(Json::parse(r->body).at("id").get<std::string>());
  }
  auto body = [&](const std::string& tag, int hour) {
    return Json{{"title", "Meet up"},
                {"description", "come along"},
                {"tags", {tag}},
                {"start_hour", hour},
                {"start_date", "2030-07-01"},
                {"location", {{"lat", 50.45}, {"lon", 30.52}}},
                {"creator", users[1]}}
        .dump();
  };

  std::mt19937 rng(99);
  std::vector<double> latencies;
  std::size_t stray = 0, missed = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::string tag = "tag" + std::to_string(rep);
    const int hour = std::uniform_int_distribution<int>(0, 23)(rng);
    auto baseline = server.service.store().subscription_count();
    testing::StreamClient feed(server.server.port(), {{"events", {{"tags", {tag}}, {"hour", hour}}}});
    testing::eventually([&] { return server.service.store().subscription_count() > baseline; }, 2s);

    std::string matching_id;
    Clock::time_point sent;
    std::thread writer([&] {
      httplib::Client b("127.0.0.1", server.server.port());
      b.Post("/events", body("other" + std::to_string(rep), hour), "application/json");
      b.Post("/events", body(tag, (hour + 1) % 24), "application/json");
      sent = Clock::now();
      auto r = b.Post("/events", body(tag, hour), "application/json");
      if (r && r->status == 201) matching_id = Json::parse(r->body).at("id").get<std::string>();
      b.Post("/events", body(tag, (hour + 5) % 24), "application/json");
    });
    auto got = feed.next_matching([](const Json& m) { return !testing::is_type(m, "heartbeat"); }, 1s);
    auto received = Clock::now();
    writer.join();
    if (!got || got->at("payload").at("path") != "/events/" + matching_id) {
      ++missed;
      continue;
    }
    latencies.push_back(std::chrono::duration<double>(received - sent).count());
    server.service.wait_idle();
    while (auto extra = feed.next(50ms))
      if (!testing::is_type(*extra, "heartbeat")) ++stray;
    feed.close();
  }
  double worst = latencies.empty() ? 0 : *std::max_element(latencies.begin(), latencies.end());
  bool ok = missed == 0 && stray == 0 && latencies.size() == 100 && worst < 1.0;
  return {ok, fmt::format("100 reps: {} missed, {} non-matching deliveries, latency p95 {:.1f} ms, max {:.1f} ms",
                          missed, stray, latencies.empty() ? 0 : percentile(latencies, 0.95) * 1e3, worst * 1e3)};
}

// ---------------------------------------------------------------------------
// Geo

GeoPoint destination(const GeoPoint& c, double km, double bearing) {
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  double d = km / geo::kEarthRadiusKm;
  double lat1 = c.lat * kDeg, lon1 = c.lon * kDeg;
  double lat2 = std::asin(std::sin(lat1) * std::cos(d) + std::cos(lat1) * std::sin(d) * std::cos(bearing));
  double lon2 = lon1 + std::atan2(std::sin(bearing) * std::sin(d) * std::cos(lat1),
                                  std::cos(d) - std::sin(lat1) * std::sin(lat2));
  return {lat2 / kDeg, normalize_longitude(lon2 / kDeg)};
}

Outcome geo_oracle() {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> unit(0, 1), lat(-85, 85), lon(-180, 180);
  std::vector<GeoPoint> centers;
  for (int i = 0; i < 8; ++i) centers.push_back({lat(rng), normalize_longitude(lon(rng))});
  centers.push_back({10.0, 179.95});
  centers.push_back({-35.0, -179.98});
  geo::GeoIndex index;
  std::map<EventId, GeoPoint> points;
  for (int i = 0; i < 1000; ++i) {
    GeoPoint p = i % 5 == 0 ? GeoPoint{lat(rng), normalize_longitude(lon(rng))}
                            : destination(centers[static_cast<std::size_t>(i) % centers.size()], 60 * unit(rng),
                                          unit(rng) * 6.283185307179586);
    auto id = "p" + std::to_string(i);
    points[id] = p;
    index.put(id, p);
  }
  std::size_t mismatches = 0, hits = 0, antimeridian = 0;
  double worst_distance_gap = 0;
  for (int q = 0; q < 100; ++q) {
    GeoPoint c = destination(centers[static_cast<std::size_t>(q) % centers.size()], 10 * unit(rng), unit(rng) * 6.28);
    if (q % 10 == 8) c = {unit(rng) * 60 - 30, q % 20 == 8 ? 179.99 : -180.0};
    if (std::abs(c.lon) > 179.5) ++antimeridian;
    double r = 0.1 + unit(rng) * 49.9;
    std::vector<geo::GeoMatch> want;
    for (const auto& [id, p] : points) {
      double d = geo::haversine_km(c, p);
      worst_distance_gap = std::max(worst_distance_gap, std::abs(d - oracle::haversine(c.lat, c.lon, p.lat, p.lon)));
      if (d <= r) want.push_back({id, d});
    }
    std::sort(want.begin(), want.end(), [](const auto& a, const auto& b) {
      return a.distance_km != b.distance_km ? a.distance_km < b.distance_km : a.event_id < b.event_id;
    });
    auto got = index.radius_query({c, r, {}});
    if (got != want) ++mismatches;
    hits += want.size();
  }
  bool formula = std::abs(geo::haversine_km({0, 0}, {0, 1}) - 111.195) < 0.001;
  bool ok = mismatches == 0 && worst_distance_gap < 1e-6 && formula && hits > 100;
  return {ok, fmt::format("1000 points, 100 queries ({} at the antimeridian), {} total hits, {} mismatching queries; "
                          "distance vs reference formula within {:.1e} km",
                          antimeridian, hits, mismatches, worst_distance_gap)};
}

Outcome geohash() {
  bool reference = oracle::geohash(0, 0, 12) == "s00000000000";
  bool known = geo::encode_geohash({0, 0}, 12) == "s00000000000";
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  std::size_t bad = 0;
  for (int i = 0; i < 10000; ++i) {
    GeoPoint p{lat(rng), normalize_longitude(lon(rng))};
    auto code = geo::encode_geohash(p, 12);
    bool ok = code == oracle::geohash(p.lat, p.lon, 12) && geo::decode_geohash(code).contains(p);
    for (int k = 1; ok && k < 12; ++k) ok = geo::encode_geohash(p, k) == code.substr(0, static_cast<std::size_t>(k));
    bad += ok ? 0 : 1;
  }
  return {reference && known && bad == 0,
          fmt::format("reference encoder gives s00000000000: {}; library: {}; {} of 10000 fuzzed points fail "
                      "reference/round-trip/prefix",
                      reference, known, bad)};
}

// ---------------------------------------------------------------------------
// Spam filter

Outcome naive_bayes() {
  const std::vector<std::string> alphabet = {"aa", "bb", "cc", "dd"};
  // Documents of one or two tokens, as multisets, with either label.
  std::vector<oracle::NbDoc> kinds;
  for (std::size_t i = 0; i < 4; ++i) {
    for (bool spam : {false, true}) kinds.push_back({{alphabet[i]}, spam});
    for (std::size_t j = i; j < 4; ++j)
      for (bool spam : {false, true}) kinds.push_back({{alphabet[i], alphabet[j]}, spam});
  }
  std::vector<std::vector<std::string>> texts = {{}};
  const std::vector<std::string> probe = {"aa", "bb", "cc", "dd", "zz"};
  for (const auto& a : probe) {
    texts.push_back({a});
    for (const auto& b : probe) texts.push_back({a, b});
  }
  std::size_t corpora = 0, checks = 0;
  double worst = 0;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> walk = [&](std::size_t start) {
    if (!pick.empty()) {
      std::vector<oracle::NbDoc> corpus;
      std::vector<spam::TextExample> train;
      bool s = false, h = false;
      for (auto k : pick) {
        corpus.push_back(kinds[k]);
        spam::TokenVector tv;
        for (const auto& t : kinds[k].tokens) tv[t] += 1;
        train.push_back({tv, kinds[k].spam ? spam::Label::spam : spam::Label::ham});
        (kinds[k].spam ? s : h) = true;
      }
      if (s && h) {
        ++corpora;
        auto model = spam::nb_train(train, 1.0);
        for (const auto& text : texts) {
          spam::TokenVector tv;
          for (const auto& t : text) tv[t] += 1;
          worst = std::max(worst, std::abs(spam::nb_classify(model, tv).spam_posterior -
                                           oracle::nb_posterior(corpus, text, 1.0)));
          ++checks;
        }
      }
    }
    if (pick.size() == 4) return;
    for (std::size_t k = start; k < kinds.size(); ++k) {
      pick.push_back(k);
      walk(k);
      pick.pop_back();
    }
  };
  walk(0);
  auto model = spam::nb_train({{spam::tokenize("win money"), spam::Label::spam},
                               {spam::tokenize("team lunch"), spam::Label::ham}},
                              1.0);
  auto v = spam::nb_classify(model, "win");
  double gap = std::abs(v.spam_posterior - 2.0 / 3.0);
  bool ok = worst < 1e-9 && gap < 1e-12 && v.label == spam::Label::spam;
  return {ok, fmt::format("{} corpora, {} posteriors, max |delta| {:.2e}; P(spam|win) = {:.15f} (|delta| {:.1e})",
                          corpora, checks, worst, v.spam_posterior, gap)};
}

Outcome perceptron() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1, 1), angle(0, 6.283185307179586);
  std::size_t converged = 0;
  std::size_t max_epochs = 0;
  for (int d = 0; d < 50; ++d) {
    double a = angle(rng);
    double wx = std::cos(a), wy = std::sin(a), b = u(rng) * 0.5;
    std::vector<spam::DenseExample> data;
    bool pos = false, neg = false;
    while (data.size() < 40 || !pos || !neg) {
      double x = u(rng), y = u(rng);
      double f = wx * x + wy * y + b;
      if (std::abs(f) < 0.1) continue;
      data.push_back({{x, y}, f > 0 ? spam::Label::spam : spam::Label::ham});
      (f > 0 ? pos : neg) = true;
    }
    auto r = spam::perceptron_train(data, 10000, 1.0);
    bool all = r.trace.converged;
    for (const auto& e : data) all = all && r.model.classify(e.x) == e.label;
    converged += all ? 1 : 0;
    max_epochs = std::max(max_epochs, r.trace.mistakes_per_epoch.size());
  }
  std::size_t agree = 0;
  for (int i = 0; i < 1000; ++i) {
    spam::PerceptronModel m{{u(rng) * 3, u(rng) * 3}, u(rng) * 3};
    std::vector<double> x{u(rng) * 3, u(rng) * 3};
    double f = m.w[0] * x[0] + m.w[1] * x[1] + m.b;
    agree += m.classify(x) == (f > 0 ? spam::Label::spam : spam::Label::ham) && std::abs(m.decision(x) - f) < 1e-12;
  }
  return {converged == 50 && agree == 1000,
          fmt::format("{}/50 separable datasets reach a zero-mistake epoch (at most {} epochs); {}/1000 classify checks",
                      converged, max_epochs, agree)};
}

Outcome mlp() {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    spam::MlpConfig cfg;
    cfg.hidden_size = 2 + trial % 4;
    cfg.seed = static_cast<std::uint64_t>(100 + trial);
    Eigen::Index inputs = 1 + trial % 3, rows = 6;
    Eigen::MatrixXd x(rows, inputs);
    Eigen::VectorXd y(rows);
    std::vector<std::vector<double>> rx;
    std::vector<double> ry;
    for (Eigen::Index r = 0; r < rows; ++r) {
      rx.emplace_back();
      for (Eigen::Index c = 0; c < inputs; ++c) {
        x(r, c) = u(rng);
        rx.back().push_back(x(r, c));
      }
      y(r) = static_cast<double>(r % 2);
      ry.push_back(y(r));
    }
    auto m = spam::mlp_initialize(static_cast<std::size_t>(inputs), cfg);
    auto grad = spam::mlp_gradient(m, x, y);
    auto params = m.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params, q = params;
      p[i] += 1e-5;
      q[i] -= 1e-5;
      double numeric = (oracle::mlp_loss(p, m.input_size(), m.hidden_size(), rx, ry, true, true) -
                        oracle::mlp_loss(q, m.input_size(), m.hidden_size(), rx, ry, true, true)) /
                       2e-5;
      worst = std::max(worst, std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), 1e-8}));
    }
  }
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  Eigen::VectorXd y(4);
  y << 0, 1, 1, 0;
  spam::MlpConfig cfg;
  cfg.hidden_size = 4;
  cfg.epochs = 5000;
  cfg.learning_rate = 1.0;
  auto t0 = Clock::now();
  auto r = spam::mlp_train(x, y, cfg);
  double elapsed = seconds_since(t0);
  int correct = 0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    std::vector<double> row{x(i, 0), x(i, 1)};
    correct += (r.model.classify(row) == spam::Label::spam) == (y(i) > 0.5);
  }
  bool ok = worst < 1e-4 && correct == 4 && elapsed < 10.0;
  return {ok, fmt::format("20 networks, max relative gradient error {:.2e}; XOR accuracy {}/4 in {:.3f} s (seed {})",
                          worst, correct, elapsed, cfg.seed)};
}

// ---------------------------------------------------------------------------
// Recommender

Outcome recommender_oracle() {
  using recommender::Recommender;
  std::mt19937 rng(808);
  const std::vector<std::string> tags = {"hike", "chess", "yoga", "jazz", "run", "film", "food"};
  std::size_t mismatches = 0, recommended = 0;
  for (int instance = 0; instance < 200; ++instance) {
    Recommender rec({.retrain_threshold = 1000000});
    int users = std::uniform_int_distribution<int>(1, 40)(rng);
    for (int s = 0; s < users * 5; ++s) {
      InteractionSample sample;
      sample.user_id = "u" + std::to_string(std::uniform_int_distribution<int>(0, users - 1)(rng));
      int a = std::uniform_int_distribution<int>(0, 3)(rng);
      sample.action = a == 0 ? InteractionAction::join : a == 1 ? InteractionAction::view
                      : a == 2 ? InteractionAction::search_filtered : InteractionAction::decline;
      TagSet ts;
      for (const auto& t : tags)
        if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) ts.insert(t);
      if (ts.empty()) ts.insert(tags[0]);
      (sample.action == InteractionAction::search_filtered ? sample.filter_tags : sample.event_tags) = ts;
      rec.record_interaction(sample);
    }
    EventRecord e;
    e.id = "ev";
    e.creator = "u0";
    e.participants = {"u0"};
    if (users > 2) e.participants.insert("u2");
    for (const auto& t : tags)
      if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) e.tags.insert(t);
    if (e.tags.empty()) e.tags.insert(tags[1]);
    std::vector<std::pair<double, UserId>> want;
    for (const auto& p : rec.profiles()) {
      if (e.participants.contains(p.user_id)) continue;
      double s = oracle::interest({p.weights.begin(), p.weights.end()}, {e.tags.begin(), e.tags.end()});
      if (s >= 0.3) want.emplace_back(-s, p.user_id);
    }
    std::sort(want.begin(), want.end());
    auto got = rec.generate_recommendations(e);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i] == want[i].second;
    mismatches += same ? 0 : 1;
    recommended += got.size();
  }

  // Dedup under forced duplicate delivery.
  store::Store s({.duplicate_trigger_delivery = true});
  Recommender rec;
  std::vector<UserId> fans;
  for (int i = 0; i < 10; ++i) {
    fans.push_back("fan" + std::to_string(i));
    InteractionSample sample;
    sample.user_id = fans.back();
    sample.action = InteractionAction::join;
    sample.event_tags = {"hike"};
    rec.record_interaction(sample);
  }
  std::atomic<int> invocations{0};
  s.register_trigger(store::DocumentPath({"events"}), [&](const store::ChangeEvent& ev) {
    if (ev.kind != store::ChangeKind::created || !ev.value) return;
    ++invocations;
    auto event = ev.value->get<EventRecord>();
    recommender::notify(s, rec.generate_recommendations(event), event);
  });
  EventRecord e;
  e.id = "hike1";
  e.title = "Hike";
  e.tags = {"hike"};
  e.creator = "host";
  e.participants = {"host"};
  s.put(store::DocumentPath({"events", "hike1"}), Json(e));
  s.wait_idle();
  std::size_t notes = 0;
  for (const auto& f : fans) {
    auto box = s.get(store::DocumentPath({"notifications", f}));
    notes += box ? box->size() : 0;
  }
  double cosine = recommender::score_interest({{"football", 3.0}, {"chess", 4.0}}, {"football"});
  bool ok = mismatches == 0 && invocations == 2 && notes == fans.size() && std::abs(cosine - 0.6) < 1e-12;
  return {ok, fmt::format("200 instances, {} mismatches ({} recommendations); duplicate delivery ran the trigger {}x and "
                          "left {} notifications for {} users; cosine example {:.15f}",
                          mismatches, recommended, invocations.load(), notes, fans.size(), cosine)};
}

// ---------------------------------------------------------------------------
// Optimizer

Outcome optimizer_checks() {
  using namespace optimizer;
  std::mt19937 rng(4242);
  const std::vector<std::string> tags = {"hike", "chess", "yoga", "football"};
  const std::vector<std::string> cells = {"u33db", "u33dc", "u33dd", "9q8yy", "9q8yz", "s0000", "kpbpb"};
  std::size_t mismatches = 0, queries = 0;
  for (int history = 0; history < 200; ++history) {
    PopularPlacesIndex index;
    std::vector<oracle::PlaceRow> rows;
    int n = std::uniform_int_distribution<int>(0, 120)(rng);
    for (int i = 0; i < n; ++i) {
      TagSet ts{tags[std::uniform_int_distribution<std::size_t>(0, tags.size() - 1)(rng)]};
      if (std::uniform_int_distribution<int>(0, 1)(rng)) ts.insert(tags[std::uniform_int_distribution<std::size_t>(0, tags.size() - 1)(rng)]);
      TrainingTuple t{ts, std::uniform_int_distribution<int>(17, 19)(rng), std::uniform_int_distribution<int>(5, 6)(rng),
                      cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)],
                      std::uniform_int_distribution<int>(0, 20)(rng)};
      index.insert(t);
      rows.push_back({{ts.begin(), ts.end()}, t.hour, t.day_of_week, t.geo_cell, t.attendance});
    }
    for (const auto& tag : tags) {
      int hour = std::uniform_int_distribution<int>(17, 19)(rng), day = std::uniform_int_distribution<int>(5, 6)(rng);
      auto k = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 8)(rng));
      auto got = index.top(tag, hour, day, k);
      auto want = oracle::places(rows, tag, hour, day, k);
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i)
        same = got[i].geo_cell == want[i].first && got[i].attendance == want[i].second;
      mismatches += same ? 0 : 1;
      ++queries;
    }
  }

  ParamOptimizer opt({.retrain_threshold = 100000});
  for (int rep = 0; rep < 3; ++rep) {
    for (int hour = 0; hour < 24; ++hour) opt.insert_training_tuple({{"football"}, hour, 5, "u33db", hour == 18 ? 10 : 0});
    for (int hour = 0; hour < 24; hour += 2) opt.insert_training_tuple({{"chess"}, hour, 2, "u33dc", 3});
  }
  opt.retrain();
  auto ranking = opt.suggest_time({"football"});
  bool hour18 = opt.model(Target::time) && !ranking.empty() && ranking.front().value == 18;

  std::size_t wrong_counts = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto n = static_cast<std::uint64_t>(std::uniform_int_distribution<int>(1, 15)(rng));
    auto total = static_cast<std::uint64_t>(std::uniform_int_distribution<int>(0, 60)(rng));
    OptimizerConfig cfg;
    cfg.retrain_threshold = n;
    cfg.model.epochs = 5;
    ParamOptimizer p(cfg);
    for (std::uint64_t i = 0; i < total; ++i)
      p.insert_training_tuple({{tags[i % tags.size()]}, std::uniform_int_distribution<int>(0, 23)(rng),
                               std::uniform_int_distribution<int>(0, 6)(rng), "u33db",
                               std::uniform_int_distribution<int>(0, 9)(rng)});
    wrong_counts += p.retrain_count() == total / n ? 0 : 1;
  }
  bool ok = mismatches == 0 && hour18 && wrong_counts == 0;
  return {ok, fmt::format("{} place queries over 200 histories, {} mismatches; football ranks hour {} first after "
                          "retraining (score {:.3f}); {} of 10 threshold trials off from floor(T/N)",
                          queries, mismatches, ranking.empty() ? -1 : ranking.front().value,
                          ranking.empty() ? 0.0 : ranking.front().score, wrong_counts)};
}

// ---------------------------------------------------------------------------
// Search

Outcome search_oracle() {
  std::mt19937 rng(515);
  std::size_t mismatches = 0, queries = 0;
  for (int round = 0; round < 8; ++round) {
    int size = round == 7 ? 1000 : std::uniform_int_distribution<int>(1, 1000)(rng);
    search::SearchIndex index;
    std::vector<oracle::SearchDoc> docs;
    for (int i = 0; i < size; ++i) {
      auto j = random_event(rng, "d" + std::to_string(i));
      auto e = j.get<EventRecord>();
      e.id = "d" + std::to_string(i);
      index.index_event(e);
      oracle::SearchDoc d{e.id, {}, {e.tags.begin(), e.tags.end()}, e.start_hour, e.start_date};
      std::string text = e.title + " " + e.description;
      std::size_t pos = 0;
      while (pos < text.size()) {
        auto end = text.find(' ', pos);
        if (end == std::string::npos) end = text.size();
        if (end > pos) d.terms[text.substr(pos, end - pos)] += 1;
        pos = end + 1;
      }
      docs.push_back(d);
    }
    for (int q = 0; q < 50; ++q) {
      search::SearchQuery query;
      oracle::SearchSpec spec;
      int terms = std::uniform_int_distribution<int>(0, 3)(rng);
      for (int t = 0; t < terms; ++t) {
        auto w = kWords[std::uniform_int_distribution<std::size_t>(0, kWords.size() - 1)(rng)];
        query.text_terms.push_back(w);
        if (std::find(spec.terms.begin(), spec.terms.end(), w) == spec.terms.end()) spec.terms.push_back(w);
      }
      if (terms == 0 || std::uniform_int_distribution<int>(0, 2)(rng) == 0) {
        auto t = kTags[std::uniform_int_distribution<std::size_t>(0, kTags.size() - 1)(rng)];
        query.tags.insert(t);
        spec.tags.insert(t);
      }
      if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
        int a = std::uniform_int_distribution<int>(0, 23)(rng), b = std::uniform_int_distribution<int>(0, 23)(rng);
        query.hour_range = spec.hours = std::pair{std::min(a, b), std::max(a, b)};
      }
      if (std::uniform_int_distribution<int>(0, 3)(rng) == 0)
        query.date_range = spec.dates = std::pair<std::string, std::string>{"2030-03-01", "2030-08-31"};
      query.limit = spec.limit = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 100)(rng));
      auto got = index.search(query);
      auto want = oracle::search(docs, spec);
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i)
        same = got[i].event_id == want[i].first && std::abs(got[i].score - want[i].second) <= 1e-12 * std::max(1.0, want[i].second);
      mismatches += same ? 0 : 1;
      ++queries;
    }
  }
  search::SearchIndex two;
  EventRecord a, b;
  a.id = "a";
  a.title = "chess club";
  b.id = "b";
  b.title = "football";
  two.index_event(a);
  two.index_event(b);
  auto hits = two.search({.text_terms = {"chess"}});
  double gap = hits.size() == 1 ? std::abs(hits[0].score - std::log(3.0)) : 1.0;
  return {mismatches == 0 && gap < 1e-12,
          fmt::format("{} queries over 8 corpora (up to 1000 docs), {} mismatches; ln 3 example |delta| {:.1e}", queries,
                      mismatches, gap)};
}

// ---------------------------------------------------------------------------
// Latency independence

std::vector<spam::TextExample> synthetic_corpus(std::size_t n, std::mt19937& rng) {
  auto loaded = spam::load_corpus(testing::source_dir() / "data" / "spam_corpus.tsv");
  // Interleave the labels so even a tiny prefix holds both classes.
  std::vector<spam::TextExample> spam_docs, ham_docs, base;
  for (auto& ex : loaded) (ex.label == spam::Label::spam ? spam_docs : ham_docs).push_back(ex);
  for (std::size_t i = 0; i < std::max(spam_docs.size(), ham_docs.size()); ++i) {
    if (i < spam_docs.size()) base.push_back(spam_docs[i]);
    if (i < ham_docs.size()) base.push_back(ham_docs[i]);
  }
  std::vector<spam::TextExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto ex = base[i % base.size()];
    // Extra rare tokens grow the vocabulary with the corpus.
    for (int k = 0; k < 3; ++k) ex.features["w" + std::to_string(std::uniform_int_distribution<int>(0, 50000)(rng))] += 1;
    out.push_back(std::move(ex));
  }
  return out;
}

Outcome latency_independence() {
  std::mt19937 rng(31337);
  api::Config c;
  c.http_threads = 8;
  testing::LiveServer small(c), large(c);
  small.service.train_spam(synthetic_corpus(10, rng));
  large.service.train_spam(synthetic_corpus(10000, rng));
  auto user_of = [](testing::LiveServer& s) {
    auto r = s.client().Post("/users", Json{{"display_name", "host"}}.dump(), "application/json");
    return Json::parse(r->body).at("id").get<std::string>();
  };
  std::string small_user = user_of(small), large_user = user_of(large);
  // Extra users give the pipeline recommendation work per event.
  for (auto* s : {&small, &large})
    for (int i = 0; i < 30; ++i) s->service.create_user({{"display_name", "fan"}});

  auto post = [&](const std::string& user, httplib::Client& client) {
    Json body{{"title", random_text(rng, 3)},
              {"description", random_text(rng, 8)},
              {"tags", {kTags[std::uniform_int_distribution<std::size_t>(0, kTags.size() - 1)(rng)]}},
              {"start_hour", std::uniform_int_distribution<int>(0, 23)(rng)},
              {"start_date", "2030-09-01"},
              {"location", {{"lat", 50.45}, {"lon", 30.52}}},
              {"creator", user}};
    auto payload = body.dump();
    auto t0 = Clock::now();
    auto r = client.Post("/events", payload, "application/json");
    double dt = seconds_since(t0);
    return (r && r->status == 201) ? dt : -1.0;
  };
  httplib::Client small_client("127.0.0.1", small.server.port()), large_client("127.0.0.1", large.server.port());
  small_client.set_keep_alive(true);
  small_client.set_tcp_nodelay(true);
  large_client.set_tcp_nodelay(true);
  large_client.set_keep_alive(true);
  for (int i = 0; i < 20; ++i) {
    post(small_user, small_client);
    post(large_user, large_client);
  }
  std::vector<double> small_lat, large_lat;
  bool failures = false;
  for (int i = 0; i < 300; ++i) {
    // Alternate the order so drift affects both sides equally.
    double a, b;
    if (i % 2) {
      a = post(small_user, small_client);
      b = post(large_user, large_client);
    } else {
      b = post(large_user, large_client);
      a = post(small_user, small_client);
    }
    failures = failures || a < 0 || b < 0;
    small_lat.push_back(a);
    large_lat.push_back(b);
  }
  small.service.wait_idle();
  large.service.wait_idle();
  double p_small = percentile(small_lat, 0.95), p_large = percentile(large_lat, 0.95);
  double ratio = p_large / p_small;
  return {!failures && ratio < 2.0,
          fmt::format("POST /events p95 {:.3f} ms (10 examples) vs {:.3f} ms (10000 examples), ratio {:.2f}",
                      p_small * 1e3, p_large * 1e3, ratio)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  // Crash recovery forks, so it runs before any other threads exist.
  const Criterion criteria[] = {
      {"crash-recovery", crash_recovery},
      {"store-ordering", store_ordering},
      {"realtime-scenario", realtime_scenario},
      {"geo-oracle", geo_oracle},
      {"geohash", geohash},
      {"naive-bayes", naive_bayes},
      {"perceptron", perceptron},
      {"mlp", mlp},
      {"recommender-oracle", recommender_oracle},
      {"optimizer", optimizer_checks},
      {"search-oracle", search_oracle},
      {"latency-independence", latency_independence},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    auto t0 = Clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
