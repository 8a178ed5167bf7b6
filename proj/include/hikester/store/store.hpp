#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "hikester/store/filter.hpp"
#include "hikester/store/path.hpp"
#include "hikester/util/blocking_queue.hpp"

namespace hikester::store {

using Revision = std::uint64_t;

enum class ChangeKind { created, updated, deleted };

std::string_view to_string(ChangeKind k);
ChangeKind parse_change_kind(std::string_view s);

struct ChangeEvent {
  Revision revision = 0;
  DocumentPath path = DocumentPath({"_"});
  ChangeKind kind = ChangeKind::created;
  std::optional<DocumentValue> value;  // absent for deleted
  bool snapshot = false;               // synthetic event from the subscribe snapshot phase
};

/// {rev, path, kind, value}; value omitted for deletions.
DocumentValue to_json(const ChangeEvent& e);
ChangeEvent change_event_from_json(const DocumentValue& j);

class ValidationRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDocument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws InvalidDocument unless `value` is a finite tree of
/// null/bool/number/string/map with valid segment keys.
void validate_document(const DocumentValue& value);

/// Standing query. Documents are the immediate children of `root`; the
/// filter is evaluated against each whole document.
struct SubscriptionSpec {
  DocumentPath root;
  Filter filter;
};

/// Pull side of a subscription. Closing (or destroying) the stream detaches
/// it from the store at the next commit.
class ChangeStream {
 public:
  explicit ChangeStream(std::uint64_t id) : id_(id) {}
  ~ChangeStream() { close(); }
  ChangeStream(const ChangeStream&) = delete;
  ChangeStream& operator=(const ChangeStream&) = delete;

  std::uint64_t id() const { return id_; }

  template <typename Rep, typename Period>
  std::optional<ChangeEvent> next(std::chrono::duration<Rep, Period> timeout) {
    return queue_->pop_for(timeout);
  }
  std::optional<ChangeEvent> try_next() { return queue_->try_pop(); }
  void close() { queue_->close(); }
  bool closed() const { return queue_->closed(); }

  std::shared_ptr<util::BlockingQueue<ChangeEvent>> queue() const { return queue_; }

 private:
  std::uint64_t id_;
  std::shared_ptr<util::BlockingQueue<ChangeEvent>> queue_ =
      std::make_shared<util::BlockingQueue<ChangeEvent>>();
};

/// Delivery callback (the observer's onNext). Returning false closes the
/// subscription.
using ChangeCallback = std::function<bool(const ChangeEvent&)>;
using TriggerHandler = std::function<void(const ChangeEvent&)>;
/// Returns a rejection reason, or nullopt to accept. `value` is absent for deletes.
using Validator =
    std::function<std::optional<std::string>(const DocumentPath&, const std::optional<DocumentValue>&)>;

struct WriteOptions {
  /// When set, the committed object gets this field set to its revision.
  std::optional<std::string> stamp_revision_field;
};

struct StoreOptions {
  std::optional<std::filesystem::path> data_dir;
  /// Write a snapshot after this many commits; 0 disables periodic snapshots.
  std::uint64_t snapshot_every = 0;
  /// Retries after the first failed handler invocation before dead-lettering.
  int trigger_retry_limit = 3;
  std::chrono::milliseconds trigger_retry_delay{10};
  /// Delivers every change twice to each trigger. Exercises the at-least-once contract.
  bool duplicate_trigger_delivery = false;
};

struct TriggerStats {
  std::uint64_t invocations = 0;
  std::uint64_t failures = 0;
  std::uint64_t dead_letters = 0;
};

class Store;

/// RAII handle for a callback subscription; unsubscribes on destruction.
class Subscription {
 public:
  Subscription() = default;
  Subscription(Store* store, std::uint64_t id) : store_(store), id_(id) {}
  Subscription(Subscription&& o) noexcept : store_(std::exchange(o.store_, nullptr)), id_(o.id_) {}
  Subscription& operator=(Subscription&& o) noexcept;
  ~Subscription() { reset(); }

  std::uint64_t id() const { return id_; }
  void reset();

 private:
  Store* store_ = nullptr;
  std::uint64_t id_ = 0;
};

/// Embedded observable document store. All writes pass through one commit
/// point that assigns a store-wide revision; subscribers and triggers see
/// changes in that order.
class Store {
 public:
  explicit Store(StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  Revision put(const DocumentPath& path, DocumentValue value, const WriteOptions& opts = {});
  /// Like put, but only when nothing exists at `path`; nullopt otherwise.
  std::optional<Revision> create(const DocumentPath& path, DocumentValue value,
                                 const WriteOptions& opts = {});
  /// Removes the subtree. Absent path: no change, returns the current revision.
  Revision remove(const DocumentPath& path);

  std::optional<DocumentValue> get(const DocumentPath& path) const;
  /// The whole tree (root object).
  DocumentValue dump() const;
  Revision revision() const;

  std::shared_ptr<ChangeStream> subscribe(const SubscriptionSpec& spec);
  Subscription subscribe(const SubscriptionSpec& spec, ChangeCallback callback);
  void unsubscribe(std::uint64_t id);
  std::size_t subscription_count() const;

  std::uint64_t register_trigger(const DocumentPath& prefix, TriggerHandler handler,
                                 std::string name = {});
  void unregister_trigger(std::uint64_t id);
  TriggerStats trigger_stats(std::uint64_t id) const;

  std::uint64_t register_validator(const DocumentPath& prefix, Validator validator);

  /// Blocks until every queued trigger invocation and callback delivery
  /// (including follow-on writes they cause) has completed.
  void wait_idle();

  /// Writes a snapshot of the current tree. No-op without a data directory.
  void checkpoint();

  const StoreOptions& options() const { return options_; }

 private:
  struct SubscriberState;
  struct CallbackWorker;
  struct TriggerWorker;
  struct ValidatorEntry {
    DocumentPath prefix;
    Validator validator;
  };

  std::optional<Revision> commit(const DocumentPath& path, std::optional<DocumentValue> value,
                                 const WriteOptions& opts, bool only_if_absent);
  void recover();
  void append_log_locked(const ChangeEvent& e);
  void write_snapshot(Revision rev, const std::string& serialized);
  void task_started();
  void task_finished();
  void run_trigger(TriggerWorker& worker);
  void dead_letter(TriggerWorker& worker, const ChangeEvent& e, const std::string& error,
                   int attempts);

  StoreOptions options_;
  mutable std::shared_mutex mu_;
  DocumentValue tree_ = DocumentValue::object();
  Revision revision_ = 0;
  Revision last_snapshot_ = 0;
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> log_{nullptr, &std::fclose};
  std::mutex snapshot_mu_;

  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, std::shared_ptr<SubscriberState>> subscribers_;
  std::map<std::uint64_t, std::shared_ptr<CallbackWorker>> callback_workers_;
  std::map<std::uint64_t, std::shared_ptr<TriggerWorker>> triggers_;
  std::vector<ValidatorEntry> validators_;

  std::mutex idle_mu_;
  std::condition_variable idle_cv_;
  std::uint64_t in_flight_ = 0;
};

}  // namespace hikester::store
