#include "hikester/api/seed.hpp"

#include <map>

namespace hikester::api {

SeedReport seed_demo(Service& service, const Json& demo) {
  SeedReport report;
  std::map<std::string, UserId> ids;
  for (const auto& u : demo.value("users", Json::array())) {
    auto profile = service.create_user({{"display_name", u.at("display_name")}});
    ids[u.at("key").get<std::string>()] = profile.id;
    ++report.users;
  }
  auto resolve = [&](const std::string& key) {
    auto it = ids.find(key);
    if (it == ids.end()) throw std::invalid_argument("demo data references unknown user '" + key + "'");
    return it->second;
  };
  for (auto e : demo.value("events", Json::array())) {
    auto participants = e.value("participants", Json::array());
    e.erase("participants");
    e["creator"] = resolve(e.at("creator").get<std::string>());
    auto created = service.create_event(e);
    ++report.events;
    for (const auto& p : participants) {
      service.join_event(created.id, resolve(p.get<std::string>()));
      ++report.joins;
    }
  }
  return report;
}

}  // namespace hikester::api
