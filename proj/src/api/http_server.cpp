#include "hikester/api/http_server.hpp"

#include <charconv>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "hikester/api/subscription.hpp"
#include "hikester/spam/tokenizer.hpp"

namespace hikester::api {

namespace {

using httplib::Request;
using httplib::Response;

void send_json(Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, const ApiError& e) { send_json(res, e.status(), e.body()); }

template <typename Handler>
httplib::Server::Handler guarded(Handler h) {
  return [h = std::move(h)](const Request& req, Response& res) {
    try {
      h(req, res);
    } catch (const ApiError& e) {
      send_error(res, e);
    } catch (const Json::exception& e) {
      send_error(res, bad_request(std::string("malformed JSON: ") + e.what()));
    } catch (const std::invalid_argument& e) {
      send_error(res, bad_request(e.what()));
    } catch (const std::exception& e) {
      spdlog::error("{} {} failed: {}", req.method, req.path, e.what());
      send_json(res, 500, {{"code", "internal"}, {"message", "internal error"}});
    }
  };
}

Json parse_body(const Request& req) {
  if (req.body.empty()) throw bad_request("request body required");
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error&) {
    throw bad_request("body is not valid JSON");
  }
}

std::optional<std::string> param(const Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

template <typename T>
std::optional<T> number_param(const Request& req, const char* name) {
  auto raw = param(req, name);
  if (!raw) return std::nullopt;
  T value{};
  auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), value);
  if (ec != std::errc{} || ptr != raw->data() + raw->size())
    throw bad_request(std::string("query parameter '") + name + "' is not a valid number");
  return value;
}

template <typename T>
T required_number(const Request& req, const char* name) {
  auto v = number_param<T>(req, name);
  if (!v) throw bad_request(std::string("query parameter '") + name + "' is required");
  return *v;
}

TagSet tags_param(const Request& req) {
  TagSet tags;
  auto raw = param(req, "tags");
  if (!raw) return tags;
  std::size_t start = 0;
  while (start <= raw->size()) {
    auto end = raw->find(',', start);
    if (end == std::string::npos) end = raw->size();
    auto tag = canonical_tag(std::string_view(*raw).substr(start, end - start));
    if (!tag.empty()) {
      if (!is_valid_tag(tag)) throw bad_request("invalid tag '" + tag + "'");
      tags.insert(tag);
    }
    start = end + 1;
  }
  return tags;
}

std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& [token, _] : spam::tokenize(text)) out.push_back(token);
  return out;
}

std::size_t cursor_offset(const Page& page) {
  if (!page.cursor || page.cursor->empty()) return 0;
  std::size_t offset = 0;
  auto [ptr, ec] = std::from_chars(page.cursor->data(), page.cursor->data() + page.cursor->size(), offset);
  if (ec != std::errc{} || ptr != page.cursor->data() + page.cursor->size()) throw bad_request("invalid cursor");
  return offset;
}

Page page_params(const Request& req, const Config& config) {
  Page p;
  auto limit = number_param<int>(req, "limit").value_or(config.default_page_limit);
  if (limit <= 0 || limit > config.max_page_limit)
    throw bad_request("limit must be within [1, " + std::to_string(config.max_page_limit) + "]");
  p.limit = static_cast<std::size_t>(limit);
  p.cursor = param(req, "cursor");
  return p;
}

Json user_json(const UserProfile& u) { return Json(u); }

Json event_json(const EventRecord& e) { return Json(e); }

Json ranking_json(const optimizer::Ranking& r, const char* key) {
  Json out = Json::array();
  for (const auto& v : r) out.push_back({{key, v.value}, {"score", v.score}});
  return out;
}

}  // namespace

HttpServer::HttpServer(Service& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  const auto threads = static_cast<std::size_t>(service_.config().http_threads);
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  server_->set_tcp_nodelay(true);
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void HttpServer::start() {
  thread_ = std::thread([this] { run(); });
  server_->wait_until_ready();
}

void HttpServer::run() {
  spdlog::info("listening on port {}", port_);
  server_->listen_after_bind();
}

void HttpServer::stop() {
  stopping_ = true;
  if (server_->is_running()) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void HttpServer::install_routes() {
  auto& svc = service_;
  auto& srv = *server_;

  srv.set_error_handler([](const Request&, Response& res) {
    if (res.body.empty() && res.status == 404) send_json(res, 404, {{"code", "not_found"}, {"message", "no such route"}});
  });

  srv.Get("/health", guarded([&svc](const Request&, Response& res) {
            send_json(res, 200, {{"status", "ok"}, {"revision", svc.store().revision()}});
          }));

  srv.Post("/users", guarded([&svc](const Request& req, Response& res) {
             send_json(res, 201, user_json(svc.create_user(parse_body(req))));
           }));
  srv.Get("/users/:id", guarded([&svc](const Request& req, Response& res) {
            send_json(res, 200, user_json(svc.get_user(req.path_params.at("id"))));
          }));

  srv.Post("/events", guarded([&svc](const Request& req, Response& res) {
             send_json(res, 201, event_json(svc.create_event(parse_body(req))));
           }));

  srv.Get("/events/nearby", guarded([&svc](const Request& req, Response& res) {
            geo::GeoQuery q;
            q.center = {required_number<double>(req, "lat"), required_number<double>(req, "lon")};
            q.center.lon = normalize_longitude(q.center.lon);
            q.radius_km = required_number<double>(req, "radius_km");
            auto page = page_params(req, svc.config());
            std::vector<Json> items;
            for (const auto& r : svc.nearby(q))
              items.push_back({{"id", r.match.event_id}, {"distance_km", r.match.distance_km}, {"event", event_json(r.event)}});
            send_json(res, 200, paginate(std::move(items), page));
          }));

  srv.Get("/events/:id", guarded([&svc](const Request& req, Response& res) {
            send_json(res, 200, event_json(svc.get_event(req.path_params.at("id"), param(req, "user"))));
          }));

  auto membership = [&svc](bool join) {
    return guarded([&svc, join](const Request& req, Response& res) {
      auto body = parse_body(req);
      auto user = body.find("user");
      if (user == body.end() || !user->is_string()) throw bad_request("body needs a user id");
      const auto& id = req.path_params.at("id");
      auto e = join ? svc.join_event(id, user->get<std::string>()) : svc.leave_event(id, user->get<std::string>());
      send_json(res, 200, event_json(e));
    });
  };
  srv.Post("/events/:id/join", membership(true));
  srv.Post("/events/:id/leave", membership(false));

  srv.Get("/search", guarded([&svc](const Request& req, Response& res) {
            search::SearchQuery q;
            if (auto text = param(req, "q")) q.text_terms = words(*text);
            q.tags = tags_param(req);
            auto hmin = number_param<int>(req, "hour_min");
            auto hmax = number_param<int>(req, "hour_max");
            if (hmin || hmax) q.hour_range = std::pair{hmin.value_or(0), hmax.value_or(23)};
            auto from = param(req, "date_from");
            auto to = param(req, "date_to");
            if (from || to) q.date_range = std::pair{from.value_or("0000-01-01"), to.value_or("9999-12-31")};
            auto page = page_params(req, svc.config());
            q.limit = cursor_offset(page) + page.limit + 1;
            std::vector<Json> items;
            for (const auto& r : svc.search(q, param(req, "user")))
              items.push_back({{"id", r.hit.event_id}, {"score", r.hit.score}, {"event", event_json(r.event)}});
            send_json(res, 200, paginate(std::move(items), page));
          }));

  srv.Get("/suggest/time", guarded([&svc](const Request& req, Response& res) {
            auto tags = tags_param(req);
            send_json(res, 200, {{"tags", tags}, {"ranking", ranking_json(svc.suggest_time(tags), "hour")}});
          }));
  srv.Get("/suggest/date", guarded([&svc](const Request& req, Response& res) {
            auto tags = tags_param(req);
            send_json(res, 200, {{"tags", tags}, {"ranking", ranking_json(svc.suggest_date(tags), "day_of_week")}});
          }));
  srv.Get("/suggest/places", guarded([&svc](const Request& req, Response& res) {
            auto tags = tags_param(req);
            if (tags.size() > 1) throw bad_request("places takes a single tag");
            auto places = svc.suggest_places(tags.empty() ? std::string{} : *tags.begin(),
                                             required_number<int>(req, "hour"), required_number<int>(req, "day_of_week"),
                                             static_cast<std::size_t>(number_param<int>(req, "k").value_or(5)));
            Json out = Json::array();
            for (const auto& p : places)
              out.push_back({{"geo_cell", p.geo_cell}, {"center", p.center}, {"attendance", p.attendance}});
            send_json(res, 200, {{"places", out}});
          }));

  srv.Get("/recommendations/:user", guarded([&svc](const Request& req, Response& res) {
            auto page = page_params(req, svc.config());
            std::vector<Json> items;
            for (const auto& n : svc.recommendations(req.path_params.at("user"))) items.emplace_back(n);
            send_json(res, 200, paginate(std::move(items), page));
          }));

  srv.Post("/subscribe", [this, &svc](const Request& req, Response& res) {
    std::shared_ptr<FeedSession> session;
    try {
      Json body;
      try {
        body = Json::parse(req.body);
      } catch (const Json::parse_error&) {
        throw bad_request("subscription request is not valid JSON");
      }
      session = open_feed(svc, parse_subscription_request(body));
    } catch (const ApiError& e) {
      res.status = e.status();
      res.set_content(stream_message("error", e.body()).dump() + "\n", "application/x-ndjson");
      return;
    }

    const auto heartbeat = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::duration<double>(svc.config().heartbeat_seconds));
    auto last_write = std::make_shared<std::chrono::steady_clock::time_point>(std::chrono::steady_clock::now());
    res.set_chunked_content_provider(
        "application/x-ndjson",
        [this, &svc, session, heartbeat, last_write](std::size_t, httplib::DataSink& sink) {
          constexpr auto kSlice = std::chrono::milliseconds(100);
          auto write = [&](const Json& message) {
            auto line = message.dump() + "\n";
            *last_write = std::chrono::steady_clock::now();
            return sink.write(line.data(), line.size());
          };
          while (true) {
            if (stopping_ || session->closed()) {
              sink.done();
              return true;
            }
            if (auto message = session->next(kSlice)) return write(*message);
            if (std::chrono::steady_clock::now() - *last_write >= heartbeat)
              return write(stream_message("heartbeat", {{"revision", svc.store().revision()}, {"at", wall_clock_iso()}}));
            if (!sink.is_writable()) return false;
          }
        },
        [session](bool) { session->close(); });
  });
}

}  // namespace hikester::api
