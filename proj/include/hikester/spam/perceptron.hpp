#pragma once

#include <span>
#include <vector>

#include "hikester/spam/dataset.hpp"
#include "json.hpp"

namespace hikester::spam {

/// Linear decision function f(x) = w.x + b; f(x) > 0 is spam.
struct PerceptronModel {
  std::vector<double> w;
  double b = 0.0;

  double decision(std::span<const double> x) const;
  Label classify(std::span<const double> x) const { return decision(x) > 0.0 ? Label::spam : Label::ham; }
};

struct PerceptronTrace {
  std::vector<std::size_t> mistakes_per_epoch;
  /// (epoch, example index) of every update, in order.
  std::vector<std::pair<int, std::size_t>> mistakes;
  bool converged = false;
};

struct PerceptronResult {
  PerceptronModel model;
  PerceptronTrace trace;
};

/// Mistake-driven training from w = 0, b = 0, visiting examples in order.
/// Stops after the first epoch without a mistake. Throws on an empty corpus
/// or mismatched dimensions.
PerceptronResult perceptron_train(std::span<const DenseExample> corpus, int epochs, double learning_rate);

nlohmann::json to_json(const PerceptronModel& m);
PerceptronModel perceptron_from_json(const nlohmann::json& j);

}  // namespace hikester::spam
