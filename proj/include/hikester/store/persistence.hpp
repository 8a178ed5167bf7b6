#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "hikester/store/store.hpp"

namespace hikester::store {

inline constexpr std::string_view kLogFileName = "store.log";

/// "store.snapshot.<rev>.json"
std::string snapshot_file_name(Revision rev);

// Tree primitives shared by the store and log replay.
const DocumentValue* locate(const DocumentValue& tree, const DocumentPath& path);
void assign(DocumentValue& tree, const DocumentPath& path, DocumentValue value);
bool erase(DocumentValue& tree, const DocumentPath& path);
void apply_change(DocumentValue& tree, const ChangeEvent& e);

struct PersistedState {
  DocumentValue tree = DocumentValue::object();
  Revision revision = 0;
  Revision snapshot_revision = 0;
  std::size_t replayed_records = 0;
  /// Byte offset just past the last complete log record.
  std::uintmax_t log_valid_bytes = 0;
  bool log_had_torn_tail = false;
};

/// Newest readable snapshot in `data_dir`, if any.
std::optional<std::pair<Revision, DocumentValue>> load_latest_snapshot(const std::filesystem::path& data_dir);

/// Applies every record of `log_path` with revision > state.revision to
/// `state`. A malformed final line is treated as a torn write and skipped;
/// a malformed line followed by valid ones throws StoreError.
void replay_log(const std::filesystem::path& log_path, PersistedState& state);

/// Snapshot + log tail recovery.
PersistedState load_persisted_state(const std::filesystem::path& data_dir);

}  // namespace hikester::store
