#pragma once

#include "hikester/api/service.hpp"

namespace hikester::api {

struct SeedReport {
  std::size_t users = 0;
  std::size_t events = 0;
  std::size_t joins = 0;
};

/// Loads demo data of the form
///   {"users": [{"key", "display_name"}],
///    "events": [{...event fields..., "creator": key, "participants": [key]}]}
/// Users get fresh ids; `key` only links events to their users.
SeedReport seed_demo(Service& service, const Json& demo);

}  // namespace hikester::api
