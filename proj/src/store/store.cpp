#include "hikester/store/store.hpp"

#include <cmath>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "hikester/store/persistence.hpp"

namespace hikester::store {

std::string_view to_string(ChangeKind k) {
  switch (k) {
    case ChangeKind::created: return "created";
    case ChangeKind::updated: return "updated";
    case ChangeKind::deleted: return "deleted";
  }
  return "created";
}

ChangeKind parse_change_kind(std::string_view s) {
  if (s == "created") return ChangeKind::created;
  if (s == "updated") return ChangeKind::updated;
  if (s == "deleted") return ChangeKind::deleted;
  throw std::invalid_argument("unknown change kind '" + std::string(s) + "'");
}

DocumentValue to_json(const ChangeEvent& e) {
  DocumentValue j = {{"rev", e.revision}, {"path", e.path.str()}, {"kind", to_string(e.kind)}};
  if (e.value) j["value"] = *e.value;
  return j;
}

ChangeEvent change_event_from_json(const DocumentValue& j) {
  ChangeEvent e;
  e.revision = j.at("rev").get<Revision>();
  e.path = DocumentPath::parse(j.at("path").get<std::string>());
  e.kind = parse_change_kind(j.at("kind").get<std::string>());
  if (e.kind != ChangeKind::deleted) e.value = j.value("value", DocumentValue{});
  return e;
}

namespace {

constexpr int kMaxDocumentDepth = 64;

void validate_node(const DocumentValue& v, int depth) {
  if (depth > kMaxDocumentDepth) throw InvalidDocument("document nested too deeply");
  switch (v.type()) {
    case DocumentValue::value_t::null:
    case DocumentValue::value_t::boolean:
    case DocumentValue::value_t::string:
    case DocumentValue::value_t::number_integer:
    case DocumentValue::value_t::number_unsigned:
      return;
    case DocumentValue::value_t::number_float:
      if (!std::isfinite(v.get<double>())) throw InvalidDocument("non-finite number");
      return;
    case DocumentValue::value_t::object:
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!is_valid_segment(it.key())) throw InvalidDocument("invalid key '" + it.key() + "'");
        validate_node(it.value(), depth + 1);
      }
      return;
    default:
      throw InvalidDocument("arrays and binary values are not document values");
  }
}

bool relates(const DocumentPath& a, const DocumentPath& b) { return a.is_prefix_of(b) || b.is_prefix_of(a); }

std::optional<DocumentValue> copy_at(const DocumentValue& tree, const DocumentPath& path) {
  if (const auto* v = locate(tree, path)) return *v;
  return std::nullopt;
}

}  // namespace

void validate_document(const DocumentValue& value) { validate_node(value, 0); }

struct Store::SubscriberState {
  std::uint64_t id;
  SubscriptionSpec spec;
  std::shared_ptr<util::BlockingQueue<ChangeEvent>> queue;
  bool counts_in_flight = false;
};

struct Store::CallbackWorker {
  std::shared_ptr<util::BlockingQueue<ChangeEvent>> queue;
  ChangeCallback callback;
  std::thread thread;
};

struct Store::TriggerWorker {
  std::uint64_t id;
  std::string name;
  DocumentPath prefix = DocumentPath({"_"});
  TriggerHandler handler;
  util::BlockingQueue<ChangeEvent> queue;
  std::thread thread;
  mutable std::mutex stats_mu;
  TriggerStats stats;
};

Subscription& Subscription::operator=(Subscription&& o) noexcept {
  if (this != &o) {
    reset();
    store_ = std::exchange(o.store_, nullptr);
    id_ = o.id_;
  }
  return *this;
}

void Subscription::reset() {
  if (store_ != nullptr) {
    store_->unsubscribe(id_);
    store_ = nullptr;
  }
}

Store::Store(StoreOptions options) : options_(std::move(options)) { recover(); }

Store::~Store() {
  std::map<std::uint64_t, std::shared_ptr<TriggerWorker>> triggers;
  std::map<std::uint64_t, std::shared_ptr<CallbackWorker>> callbacks;
  {
    std::unique_lock lock(mu_);
    triggers.swap(triggers_);
    callbacks.swap(callback_workers_);
    for (auto& [id, sub] : subscribers_) sub->queue->close();
    subscribers_.clear();
  }
  for (auto& [id, t] : triggers) t->queue.close();
  for (auto& [id, c] : callbacks) c->queue->close();
  for (auto& [id, t] : triggers) {
    if (t->thread.joinable()) t->thread.join();
  }
  for (auto& [id, c] : callbacks) {
    if (c->thread.joinable()) c->thread.join();
  }
}

void Store::recover() {
  if (!options_.data_dir) return;
  const auto& dir = *options_.data_dir;
  std::filesystem::create_directories(dir);
  auto state = load_persisted_state(dir);
  tree_ = std::move(state.tree);
  revision_ = state.revision;
  last_snapshot_ = state.snapshot_revision;
  auto log_path = dir / kLogFileName;
  if (state.log_had_torn_tail) {
    spdlog::warn("store: discarding torn record at end of {}", log_path.string());
    std::filesystem::resize_file(log_path, state.log_valid_bytes);
  }
  if (state.replayed_records > 0 || state.snapshot_revision > 0) {
    spdlog::info("store: recovered revision {} (snapshot {}, {} log records)", revision_,
                 state.snapshot_revision, state.replayed_records);
  }
  log_.reset(std::fopen(log_path.c_str(), "ab"));
  if (!log_) throw StoreError("cannot open " + log_path.string());
}

void Store::append_log_locked(const ChangeEvent& e) {
  if (!log_) return;
  auto line = to_json(e).dump();
  line += '\n';
  if (std::fwrite(line.data(), 1, line.size(), log_.get()) != line.size() || std::fflush(log_.get()) != 0)
    throw StoreError("change log write failed");
}

void Store::write_snapshot(Revision rev, const std::string& serialized) {
  if (!options_.data_dir) return;
  std::lock_guard lock(snapshot_mu_);
  const auto& dir = *options_.data_dir;
  auto final_path = dir / snapshot_file_name(rev);
  auto tmp_path = final_path;
  tmp_path += ".tmp";
  {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(tmp_path.c_str(), "wb"), &std::fclose);
    if (!f) throw StoreError("cannot write snapshot " + tmp_path.string());
    std::fwrite(serialized.data(), 1, serialized.size(), f.get());
  }
  std::filesystem::rename(tmp_path, final_path);
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    auto name = entry.path().filename().string();
    if (name.starts_with("store.snapshot.") && name.ends_with(".json") && entry.path() != final_path) {
      std::error_code ec;
      std::filesystem::remove(entry.path(), ec);
    }
  }
}

void Store::checkpoint() {
  if (!options_.data_dir) return;
  std::string serialized;
  Revision rev;
  {
    std::shared_lock lock(mu_);
    rev = revision_;
    serialized = DocumentValue{{"rev", rev}, {"tree", tree_}}.dump();
  }
  write_snapshot(rev, serialized);
}

Revision Store::put(const DocumentPath& path, DocumentValue value, const WriteOptions& opts) {
  return *commit(path, std::move(value), opts, false);
}

std::optional<Revision> Store::create(const DocumentPath& path, DocumentValue value, const WriteOptions& opts) {
  return commit(path, std::move(value), opts, true);
}

Revision Store::remove(const DocumentPath& path) { return *commit(path, std::nullopt, {}, false); }

std::optional<Revision> Store::commit(const DocumentPath& path, std::optional<DocumentValue> value,
                                      const WriteOptions& opts, bool only_if_absent) {
  if (value) {
    if (opts.stamp_revision_field && !value->is_object())
      throw InvalidDocument("revision stamp requires an object value");
    validate_document(*value);
  }
  {
    std::vector<Validator> applicable;
    {
      std::shared_lock lock(mu_);
      for (const auto& v : validators_) {
        if (relates(v.prefix, path)) applicable.push_back(v.validator);
      }
    }
    for (const auto& validator : applicable) {
      if (auto reason = validator(path, value)) throw ValidationRejected(path.str() + ": " + *reason);
    }
  }

  std::string snapshot_payload;
  Revision rev;
  {
    std::unique_lock lock(mu_);
    const DocumentValue* existing = locate(tree_, path);
    if (only_if_absent && existing != nullptr) return std::nullopt;
    if (!value && existing == nullptr) return revision_;

    rev = revision_ + 1;
    if (value && opts.stamp_revision_field) (*value)[*opts.stamp_revision_field] = rev;

    ChangeEvent raw;
    raw.revision = rev;
    raw.path = path;
    raw.kind = !value ? ChangeKind::deleted : (existing ? ChangeKind::updated : ChangeKind::created);
    raw.value = value;

    append_log_locked(raw);
    revision_ = rev;

    // Capture pre-images for every subscription the write touches.
    struct Pending {
      std::shared_ptr<SubscriberState> sub;
      std::optional<std::string> key;        // set when the write lands inside one document
      std::optional<DocumentValue> before;   // document (key set) or whole collection
    };
    std::vector<Pending> pending;
    for (auto it = subscribers_.begin(); it != subscribers_.end();) {
      auto& sub = it->second;
      if (sub->queue->closed()) {
        it = subscribers_.erase(it);
        continue;
      }
      const auto& root = sub->spec.root;
      if (root.depth() < path.depth() && root.is_prefix_of(path)) {
        auto doc_path = path.prefix(root.depth() + 1);
        pending.push_back({sub, doc_path.leaf(), copy_at(tree_, doc_path)});
      } else if (path.is_prefix_of(root)) {
        pending.push_back({sub, std::nullopt, copy_at(tree_, root)});
      }
      ++it;
    }

    apply_change(tree_, raw);

    auto emit = [&](SubscriberState& sub, const std::string& key, const std::optional<DocumentValue>& before,
                    const DocumentValue* after, bool force_update) {
      bool was = before && sub.spec.filter.matches(*before);
      bool now = after != nullptr && sub.spec.filter.matches(*after);
      if (!was && !now) return;
      if (was && now && !force_update && *before == *after) return;
      ChangeEvent ev;
      ev.revision = rev;
      ev.path = sub.spec.root.child(key);
      ev.kind = now ? (was ? ChangeKind::updated : ChangeKind::created) : ChangeKind::deleted;
      if (now) ev.value = *after;
      if (sub.counts_in_flight) task_started();
      if (!sub.queue->push(std::move(ev)) && sub.counts_in_flight) task_finished();
    };

    for (auto& p : pending) {
      const auto& root = p.sub->spec.root;
      if (p.key) {
        emit(*p.sub, *p.key, p.before, locate(tree_, root.child(*p.key)), true);
        continue;
      }
      const DocumentValue* after = locate(tree_, root);
      std::set<std::string> keys;
      if (p.before && p.before->is_object()) {
        for (auto it = p.before->begin(); it != p.before->end(); ++it) keys.insert(it.key());
      }
      if (after != nullptr && after->is_object()) {
        for (auto it = after->begin(); it != after->end(); ++it) keys.insert(it.key());
      }
      for (const auto& key : keys) {
        std::optional<DocumentValue> before_doc;
        if (p.before && p.before->is_object() && p.before->contains(key)) before_doc = p.before->at(key);
        const DocumentValue* after_doc = nullptr;
        if (after != nullptr && after->is_object()) {
          auto it = after->find(key);
          if (it != after->end()) after_doc = &*it;
        }
        emit(*p.sub, key, before_doc, after_doc, false);
      }
    }

    for (auto& [id, trigger] : triggers_) {
      if (!relates(trigger->prefix, path)) continue;
      int copies = options_.duplicate_trigger_delivery ? 2 : 1;
      for (int i = 0; i < copies; ++i) {
        task_started();
        if (!trigger->queue.push(raw)) task_finished();
      }
    }

    if (log_ && options_.snapshot_every > 0 && rev - last_snapshot_ >= options_.snapshot_every) {
      last_snapshot_ = rev;
      snapshot_payload = DocumentValue{{"rev", rev}, {"tree", tree_}}.dump();
    }
  }
  if (!snapshot_payload.empty()) write_snapshot(rev, snapshot_payload);
  return rev;
}

std::optional<DocumentValue> Store::get(const DocumentPath& path) const {
  std::shared_lock lock(mu_);
  return copy_at(tree_, path);
}

DocumentValue Store::dump() const {
  std::shared_lock lock(mu_);
  return tree_;
}

Revision Store::revision() const {
  std::shared_lock lock(mu_);
  return revision_;
}

std::shared_ptr<ChangeStream> Store::subscribe(const SubscriptionSpec& spec) {
  std::unique_lock lock(mu_);
  auto id = next_id_++;
  auto stream = std::make_shared<ChangeStream>(id);
  auto state = std::make_shared<SubscriberState>(SubscriberState{id, spec, stream->queue(), false});
  if (const auto* coll = locate(tree_, spec.root); coll != nullptr && coll->is_object()) {
    for (auto it = coll->begin(); it != coll->end(); ++it) {
      if (!spec.filter.matches(it.value())) continue;
      state->queue->push(ChangeEvent{revision_, spec.root.child(it.key()), ChangeKind::created, it.value(), true});
    }
  }
  subscribers_.emplace(id, std::move(state));
  return stream;
}

Subscription Store::subscribe(const SubscriptionSpec& spec, ChangeCallback callback) {
  auto worker = std::make_shared<CallbackWorker>();
  worker->queue = std::make_shared<util::BlockingQueue<ChangeEvent>>();
  worker->callback = std::move(callback);
  std::uint64_t id;
  {
    std::unique_lock lock(mu_);
    id = next_id_++;
    auto state = std::make_shared<SubscriberState>(SubscriberState{id, spec, worker->queue, true});
    if (const auto* coll = locate(tree_, spec.root); coll != nullptr && coll->is_object()) {
      for (auto it = coll->begin(); it != coll->end(); ++it) {
        if (!spec.filter.matches(it.value())) continue;
        task_started();
        state->queue->push(ChangeEvent{revision_, spec.root.child(it.key()), ChangeKind::created, it.value(), true});
      }
    }
    subscribers_.emplace(id, std::move(state));
    callback_workers_.emplace(id, worker);
  }
  worker->thread = std::thread([this, w = worker.get()] {
    bool open = true;
    while (auto ev = w->queue->pop()) {
      if (open) {
        try {
          open = w->callback(*ev);
        } catch (const std::exception& e) {
          spdlog::error("store: subscriber callback threw: {}", e.what());
          open = false;
        }
        if (!open) w->queue->close();
      }
      task_finished();
    }
  });
  return Subscription(this, id);
}

void Store::unsubscribe(std::uint64_t id) {
  std::shared_ptr<CallbackWorker> worker;
  {
    std::unique_lock lock(mu_);
    if (auto it = subscribers_.find(id); it != subscribers_.end()) {
      it->second->queue->close();
      subscribers_.erase(it);
    }
    if (auto it = callback_workers_.find(id); it != callback_workers_.end()) {
      worker = it->second;
      callback_workers_.erase(it);
    }
  }
  if (worker && worker->thread.joinable()) {
    worker->queue->close();
    if (worker->thread.get_id() == std::this_thread::get_id()) {
      worker->thread.detach();
    } else {
      worker->thread.join();
    }
  }
}

std::size_t Store::subscription_count() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [id, s] : subscribers_) n += s->queue->closed() ? 0 : 1;
  return n;
}

std::uint64_t Store::register_trigger(const DocumentPath& prefix, TriggerHandler handler, std::string name) {
  auto worker = std::make_shared<TriggerWorker>();
  worker->prefix = prefix;
  worker->handler = std::move(handler);
  {
    std::unique_lock lock(mu_);
    worker->id = next_id_++;
    worker->name = name.empty() ? "trigger-" + std::to_string(worker->id) : std::move(name);
    triggers_.emplace(worker->id, worker);
  }
  worker->thread = std::thread([this, w = worker.get()] { run_trigger(*w); });
  return worker->id;
}

void Store::unregister_trigger(std::uint64_t id) {
  std::shared_ptr<TriggerWorker> worker;
  {
    std::unique_lock lock(mu_);
    auto it = triggers_.find(id);
    if (it == triggers_.end()) return;
    worker = it->second;
    triggers_.erase(it);
  }
  worker->queue.close();
  if (worker->thread.joinable()) worker->thread.join();
}

TriggerStats Store::trigger_stats(std::uint64_t id) const {
  std::shared_ptr<TriggerWorker> worker;
  {
    std::shared_lock lock(mu_);
    auto it = triggers_.find(id);
    if (it == triggers_.end()) return {};
    worker = it->second;
  }
  std::lock_guard lock(worker->stats_mu);
  return worker->stats;
}

void Store::run_trigger(TriggerWorker& w) {
  while (auto ev = w.queue.pop()) {
    std::string last_error;
    int attempts = 0;
    bool done = false;
    while (!done && attempts <= options_.trigger_retry_limit) {
      ++attempts;
      {
        std::lock_guard lock(w.stats_mu);
        ++w.stats.invocations;
      }
      try {
        w.handler(*ev);
        done = true;
      } catch (const std::exception& e) {
        last_error = e.what();
      } catch (...) {
        last_error = "unknown exception";
      }
      if (!done) {
        {
          std::lock_guard lock(w.stats_mu);
          ++w.stats.failures;
        }
        spdlog::warn("store: trigger {} failed on rev {} (attempt {}): {}", w.name, ev->revision, attempts,
                     last_error);
        if (attempts <= options_.trigger_retry_limit) std::this_thread::sleep_for(options_.trigger_retry_delay);
      }
    }
    if (!done) dead_letter(w, *ev, last_error, attempts);
    task_finished();
  }
}

void Store::dead_letter(TriggerWorker& w, const ChangeEvent& e, const std::string& error, int attempts) {
  {
    std::lock_guard lock(w.stats_mu);
    ++w.stats.dead_letters;
  }
  spdlog::error("store: trigger {} dead-lettered rev {} after {} attempts", w.name, e.revision, attempts);
  try {
    put(DocumentPath({"system", "dead_letters", "rev" + std::to_string(e.revision) + "-t" + std::to_string(w.id)}),
        DocumentValue{{"trigger", w.name},
                      {"revision", e.revision},
                      {"path", e.path.str()},
                      {"kind", to_string(e.kind)},
                      {"error", error},
                      {"attempts", attempts}});
  } catch (const std::exception& ex) {
    spdlog::error("store: dead letter write failed: {}", ex.what());
  }
}

std::uint64_t Store::register_validator(const DocumentPath& prefix, Validator validator) {
  std::unique_lock lock(mu_);
  validators_.push_back({prefix, std::move(validator)});
  return next_id_++;
}

void Store::task_started() {
  std::lock_guard lock(idle_mu_);
  ++in_flight_;
}

void Store::task_finished() {
  std::lock_guard lock(idle_mu_);
  if (--in_flight_ == 0) idle_cv_.notify_all();
}

void Store::wait_idle() {
  std::unique_lock lock(idle_mu_);
  idle_cv_.wait(lock, [&] { return in_flight_ == 0; });
}

}  // namespace hikester::store
