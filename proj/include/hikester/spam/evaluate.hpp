#pragma once

#include <span>
#include <stdexcept>

#include "hikester/spam/dataset.hpp"

namespace hikester::spam {

/// Spam-filter quality measures. efficiency is recall on the spam class
/// (0 when the set has no spam); false_positive_rate is ham flagged as spam
/// over all ham (0 when the set has no ham).
struct EvalReport {
  double efficiency = 0.0;
  double accuracy = 0.0;
  double false_positive_rate = 0.0;
  std::size_t true_positives = 0;
  std::size_t true_negatives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

EvalReport evaluate_predictions(std::span<const Label> truth, std::span<const Label> predicted);

/// `classify` maps an example's features to a Label.
template <typename Example, typename Classify>
EvalReport evaluate(Classify&& classify, std::span<const Example> test_set) {
  std::vector<Label> truth, predicted;
  truth.reserve(test_set.size());
  predicted.reserve(test_set.size());
  for (const auto& ex : test_set) {
    truth.push_back(ex.label);
    if constexpr (requires { ex.features; }) {
      predicted.push_back(classify(ex.features));
    } else {
      predicted.push_back(classify(ex.x));
    }
  }
  return evaluate_predictions(truth, predicted);
}

}  // namespace hikester::spam
