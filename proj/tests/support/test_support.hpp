#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

// The service headers pull in Eigen, which must be parsed before httplib
// brings in <resolv.h> and its `_res` macro.
#include "hikester/api/http_server.hpp"
#include "hikester/api/service.hpp"

#include <httplib.h>

namespace testing {

using hikester::Json;

inline std::filesystem::path source_dir() { return HIKESTER_SOURCE_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("hikester-test-" + std::to_string(::getpid()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Polls `pred` until it holds or `timeout` passes.
template <typename Pred>
bool eventually(Pred pred, std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return pred();
}

/// Service plus HTTP server on an ephemeral local port.
struct LiveServer {
  explicit LiveServer(hikester::api::Config config) : service(prepare(std::move(config))), server(service) {
    server.bind("127.0.0.1", 0);
    server.start();
  }
  ~LiveServer() { server.stop(); }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", server.port());
    c.set_read_timeout(10, 0);
    return c;
  }

  hikester::api::Service service;
  hikester::api::HttpServer server;

 private:
  static hikester::api::Config prepare(hikester::api::Config c) {
    c.host = "127.0.0.1";
    c.port = 0;
    c.http_threads = std::max(c.http_threads, 16);
    return c;
  }
};

inline Json body_of(const httplib::Result& r) {
  if (!r) return nullptr;
  return r->body.empty() ? Json(nullptr) : Json::parse(r->body);
}

/// Client for POST /subscribe. Reads the NDJSON stream on a background
/// thread and queues each message.
class StreamClient {
 public:
  StreamClient(int port, Json request) : client_("127.0.0.1", port) {
    client_.set_read_timeout(60, 0);
    thread_ = std::thread([this, request = std::move(request)] { run(request); });
  }
  ~StreamClient() { close(); }

  void close() {
    stop_ = true;
    client_.stop();
    if (thread_.joinable()) thread_.join();
  }

  /// Waits for the next message satisfying `pred`, consuming everything up
  /// to and including it.
  template <typename Pred>
  std::optional<Json> next_matching(Pred pred, std::chrono::milliseconds timeout) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    std::unique_lock lock(mu_);
    while (true) {
      while (!messages_.empty()) {
        auto m = std::move(messages_.front());
        messages_.pop_front();
        if (pred(m)) return m;
      }
      if (finished_) return std::nullopt;
      if (cv_.wait_until(lock, deadline) == std::cv_status::timeout && messages_.empty()) return std::nullopt;
    }
  }

  std::optional<Json> next(std::chrono::milliseconds timeout) {
    return next_matching([](const Json&) { return true; }, timeout);
  }

  /// Every message received so far without consuming them.
  std::vector<Json> peek_all() {
    std::lock_guard lock(mu_);
    return {messages_.begin(), messages_.end()};
  }

  int status() const { return status_.load(); }
  bool finished() {
    std::lock_guard lock(mu_);
    return finished_;
  }

 private:
  void run(const Json& request) {
    httplib::Request req;
    req.method = "POST";
    req.path = "/subscribe";
    req.body = request.dump();
    req.set_header("Content-Type", "application/json");
    req.response_handler = [this](const httplib::Response& res) {
      status_ = res.status;
      return true;
    };
    req.content_receiver = [this](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
      std::lock_guard lock(mu_);
      buffer_.append(data, len);
      std::size_t pos;
      while ((pos = buffer_.find('\n')) != std::string::npos) {
        messages_.push_back(Json::parse(buffer_.substr(0, pos)));
        buffer_.erase(0, pos + 1);
      }
      cv_.notify_all();
      return !stop_.load();
    };
    httplib::Response res;
    httplib::Error err;
    client_.send(req, res, err);
    std::lock_guard lock(mu_);
    if (status_ == 0) status_ = res.status;
    finished_ = true;
    cv_.notify_all();
  }

  httplib::Client client_;
  std::thread thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Json> messages_;
  std::string buffer_;
  bool finished_ = false;
  std::atomic<bool> stop_{false};
  std::atomic<int> status_{0};
};

inline bool is_type(const Json& m, const char* type) { return m.value("type", "") == type; }

}  // namespace testing
