#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "hikester/api/service.hpp"

namespace httplib {
class Server;
}

namespace hikester::api {

/// JSON-over-HTTP front end for a Service, plus the NDJSON streaming
/// subscription endpoint at POST /subscribe.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the listening socket. Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves on a background thread; requires bind().
  void start();
  /// Serves on the calling thread until stop(); requires bind().
  void run();
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  Service& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
  int port_ = -1;
};

}  // namespace hikester::api
