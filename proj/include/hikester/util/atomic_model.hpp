#pragma once

#include <memory>
#include <mutex>

namespace hikester::util {

/// Holds an immutable model that readers share and writers replace whole.
/// Readers keep the old instance alive until they drop their pointer.
template <typename T>
class AtomicModel {
 public:
  AtomicModel() = default;
  explicit AtomicModel(std::shared_ptr<const T> initial) : current_(std::move(initial)) {}

  std::shared_ptr<const T> load() const {
    std::lock_guard lock(mu_);
    return current_;
  }

  void store(std::shared_ptr<const T> next) {
    std::lock_guard lock(mu_);
    current_.swap(next);
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const T> current_;
};

}  // namespace hikester::util
