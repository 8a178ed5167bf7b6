#pragma once

#include <filesystem>
#include <memory>

#include "hikester/geo/geo_index.hpp"
#include "hikester/search/search_index.hpp"
#include "hikester/store/persistence.hpp"

namespace hikester::api {

/// Store state recovered offline plus the indexes derived from it.
struct ReplayResult {
  store::PersistedState state;
  std::unique_ptr<geo::GeoIndex> geo = std::make_unique<geo::GeoIndex>();
  std::unique_ptr<search::SearchIndex> search = std::make_unique<search::SearchIndex>();
  std::size_t events = 0;
  std::size_t active_events = 0;
  std::size_t unreadable_events = 0;
};

/// Adds every active event under `events` (the /events map) to both indexes.
void index_events(const Json& events, ReplayResult& out);

/// Rebuilds from a change log. When the log sits in a data directory under
/// its standard name, the newest snapshot there is loaded first.
ReplayResult replay_from_log(const std::filesystem::path& log);

Json summary(const ReplayResult& r);

}  // namespace hikester::api
