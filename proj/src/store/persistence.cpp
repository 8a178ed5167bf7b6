#include "hikester/store/persistence.hpp"

#include <algorithm>
#include <fstream>
#include <regex>

namespace hikester::store {

std::string snapshot_file_name(Revision rev) { return "store.snapshot." + std::to_string(rev) + ".json"; }

const DocumentValue* locate(const DocumentValue& tree, const DocumentPath& path) {
  const DocumentValue* node = &tree;
  for (const auto& seg : path.segments()) {
    if (!node->is_object()) return nullptr;
    auto it = node->find(seg);
    if (it == node->end()) return nullptr;
    node = &*it;
  }
  return node;
}

void assign(DocumentValue& tree, const DocumentPath& path, DocumentValue value) {
  DocumentValue* node = &tree;
  for (const auto& seg : path.segments()) {
    if (!node->is_object()) *node = DocumentValue::object();
    node = &(*node)[seg];
  }
  *node = std::move(value);
}

bool erase(DocumentValue& tree, const DocumentPath& path) {
  DocumentValue* node = &tree;
  const auto& segs = path.segments();
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    if (!node->is_object()) return false;
    auto it = node->find(segs[i]);
    if (it == node->end()) return false;
    node = &*it;
  }
  if (!node->is_object()) return false;
  return node->erase(segs.back()) > 0;
}

void apply_change(DocumentValue& tree, const ChangeEvent& e) {
  if (e.kind == ChangeKind::deleted) {
    erase(tree, e.path);
  } else {
    assign(tree, e.path, e.value.value_or(DocumentValue{}));
  }
}

std::optional<std::pair<Revision, DocumentValue>> load_latest_snapshot(const std::filesystem::path& data_dir) {
  static const std::regex pattern(R"(store\.snapshot\.(\d+)\.json)");
  std::vector<std::pair<Revision, std::filesystem::path>> candidates;
  if (!std::filesystem::exists(data_dir)) return std::nullopt;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir)) {
    std::smatch m;
    auto name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) candidates.emplace_back(std::stoull(m[1].str()), entry.path());
  }
  std::sort(candidates.begin(), candidates.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (const auto& [rev, file] : candidates) {
    std::ifstream in(file);
    auto doc = DocumentValue::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.contains("rev") || !doc.contains("tree")) continue;
    return std::make_pair(doc.at("rev").get<Revision>(), doc.at("tree"));
  }
  return std::nullopt;
}

void replay_log(const std::filesystem::path& log_path, PersistedState& state) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) return;
  std::string line;
  std::uintmax_t offset = 0;
  std::optional<std::string> pending_error;
  while (true) {
    auto line_start = offset;
    if (!std::getline(in, line)) break;
    bool complete = !in.eof();
    offset += line.size() + (complete ? 1 : 0);
    if (line.empty()) {
      state.log_valid_bytes = offset;
      continue;
    }
    auto j = DocumentValue::parse(line, nullptr, false);
    std::optional<ChangeEvent> event;
    if (!j.is_discarded() && complete) {
      try {
        event = change_event_from_json(j);
      } catch (const std::exception&) {
      }
    }
    if (!event) {
      if (pending_error) throw StoreError(*pending_error);
      pending_error = "corrupt log record at byte " + std::to_string(line_start);
      continue;
    }
    if (pending_error) throw StoreError(*pending_error);
    state.log_valid_bytes = offset;
    if (event->revision <= state.revision) continue;
    apply_change(state.tree, *event);
    state.revision = event->revision;
    ++state.replayed_records;
  }
  state.log_had_torn_tail = pending_error.has_value();
}

PersistedState load_persisted_state(const std::filesystem::path& data_dir) {
  PersistedState state;
  if (auto snap = load_latest_snapshot(data_dir)) {
    state.revision = snap->first;
    state.snapshot_revision = snap->first;
    state.tree = std::move(snap->second);
  }
  replay_log(data_dir / kLogFileName, state);
  return state;
}

}  // namespace hikester::store
