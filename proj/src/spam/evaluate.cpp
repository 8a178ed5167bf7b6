#include "hikester/spam/evaluate.hpp"

namespace hikester::spam {

EvalReport evaluate_predictions(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("truth/prediction size mismatch");
  EvalReport r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    bool spam = truth[i] == Label::spam;
    bool flagged = predicted[i] == Label::spam;
    if (spam && flagged) ++r.true_positives;
    if (spam && !flagged) ++r.false_negatives;
    if (!spam && flagged) ++r.false_positives;
    if (!spam && !flagged) ++r.true_negatives;
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.efficiency = ratio(r.true_positives, r.true_positives + r.false_negatives);
  r.accuracy = ratio(r.true_positives + r.true_negatives, truth.size());
  r.false_positive_rate = ratio(r.false_positives, r.false_positives + r.true_negatives);
  return r;
}

}  // namespace hikester::spam
