#include <csignal>
#include <fstream>
#include <iostream>
#include <mutex>
#include <condition_variable>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "hikester/api/config.hpp"
#include "hikester/api/http_server.hpp"
#include "hikester/api/replay.hpp"
#include "hikester/api/seed.hpp"
#include "hikester/api/service.hpp"
#include "hikester/spam/dataset.hpp"

namespace {

using namespace hikester;

api::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve(const api::Config& config) {
  api::Service service(config);
  api::HttpServer server(service);
  server.bind(config.host, config.port);

  std::mutex mu;
  std::condition_variable cv;
  bool done = false;
  std::thread sweeper([&] {
    const auto period = std::chrono::duration<double>(config.completion_sweep_seconds);
    std::unique_lock lock(mu);
    while (!cv.wait_for(lock, period, [&] { return done; })) {
      lock.unlock();
      if (auto n = service.complete_due_events(std::chrono::system_clock::now()))
        spdlog::info("recorded {} completed event(s) for the optimizer", n);
      lock.lock();
    }
  });

  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.run();
  g_server = nullptr;

  {
    std::lock_guard lock(mu);
    done = true;
  }
  cv.notify_all();
  sweeper.join();
  service.wait_idle();
  service.store().checkpoint();
  return 0;
}

int seed(const api::Config& config, const std::string& corpus_path, std::optional<std::string> events_path) {
  api::Service service(config);
  auto corpus = spam::load_corpus(corpus_path);
  service.train_spam(corpus);

  if (!events_path) {
    auto sibling = std::filesystem::path(corpus_path).parent_path() / "demo_events.json";
    if (std::filesystem::exists(sibling)) events_path = sibling.string();
  }
  if (events_path) {
    std::ifstream in(*events_path);
    if (!in) throw std::runtime_error("cannot read " + *events_path);
    auto report = api::seed_demo(service, Json::parse(in));
    spdlog::info("seeded {} users, {} events, {} joins", report.users, report.events, report.joins);
  }
  service.wait_idle();
  auto recorded = service.complete_due_events(std::chrono::system_clock::now());
  service.wait_idle();
  service.store().checkpoint();
  std::cout << Json{{"corpus_examples", corpus.size()},
                    {"completed_events", recorded},
                    {"revision", service.store().revision()}}
                   .dump(2)
            << "\n";
  return 0;
}

int replay(const std::string& log) {
  auto result = api::replay_from_log(log);
  std::cout << api::summary(result).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hikester event service"};
  app.require_subcommand(0, 1);
  std::optional<std::string> config_path;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API (default)");
  auto* seed_cmd = app.add_subcommand("seed", "Train the spam filter from a corpus and load demo events");
  std::string corpus;
  std::optional<std::string> events;
  seed_cmd->add_option("--corpus", corpus, "Labelled corpus, one 'ham|spam<TAB>text' per line")
      ->required()
      ->check(CLI::ExistingFile);
  seed_cmd->add_option("--events", events, "Demo users and events (JSON)")->check(CLI::ExistingFile);
  auto* replay_cmd = app.add_subcommand("replay", "Rebuild state and indexes from a change log and report");
  std::string log;
  replay_cmd->add_option("--log", log, "Path to store.log")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = api::load_config(config_path ? std::optional<std::filesystem::path>(*config_path) : std::nullopt);
    spdlog::set_level(spdlog::level::from_str(config.log_level));
    if (*seed_cmd) return seed(config, corpus, events);
    if (*replay_cmd) return replay(log);
    (void)serve_cmd;
    return serve(config);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
