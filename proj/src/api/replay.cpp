#include "hikester/api/replay.hpp"

#include <spdlog/spdlog.h>

namespace hikester::api {

void index_events(const Json& events, ReplayResult& out) {
  if (!events.is_object()) return;
  for (auto it = events.begin(); it != events.end(); ++it) {
    ++out.events;
    EventRecord e;
    try {
      e = it.value().get<EventRecord>();
    } catch (const std::exception& ex) {
      spdlog::warn("event {} unreadable: {}", it.key(), ex.what());
      ++out.unreadable_events;
      continue;
    }
    e.id = it.key();
    if (e.status != EventStatus::active) continue;
    ++out.active_events;
    out.geo->put(e.id, e.location);
    out.search->index_event(e);
  }
}

ReplayResult replay_from_log(const std::filesystem::path& log) {
  if (!std::filesystem::exists(log)) throw std::runtime_error("log file not found: " + log.string());
  ReplayResult r;
  if (log.filename().string() == store::kLogFileName) {
    r.state = store::load_persisted_state(log.parent_path());
  } else {
    store::replay_log(log, r.state);
  }
  if (auto it = r.state.tree.find("events"); it != r.state.tree.end()) index_events(*it, r);
  return r;
}

Json summary(const ReplayResult& r) {
  return {{"revision", r.state.revision},
          {"snapshot_revision", r.state.snapshot_revision},
          {"replayed_records", r.state.replayed_records},
          {"torn_tail", r.state.log_had_torn_tail},
          {"events", r.events},
          {"active_events", r.active_events},
          {"unreadable_events", r.unreadable_events},
          {"geo_entries", r.geo->size()},
          {"search_documents", r.search->document_count()}};
}

}  // namespace hikester::api
