#include "hikester/spam/perceptron.hpp"

#include <numeric>
#include <stdexcept>

namespace hikester::spam {

double PerceptronModel::decision(std::span<const double> x) const {
  if (x.size() != w.size()) throw std::invalid_argument("perceptron input dimension mismatch");
  return std::inner_product(w.begin(), w.end(), x.begin(), b);
}

PerceptronResult perceptron_train(std::span<const DenseExample> corpus, int epochs, double learning_rate) {
  if (corpus.empty()) throw std::invalid_argument("perceptron needs a non-empty corpus");
  const auto dim = corpus.front().x.size();
  for (const auto& ex : corpus) {
    if (ex.x.size() != dim) throw std::invalid_argument("perceptron corpus has mixed dimensions");
  }

  PerceptronResult r;
  r.model.w.assign(dim, 0.0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::size_t mistakes = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& ex = corpus[i];
      if (r.model.classify(ex.x) == ex.label) continue;
      double step = learning_rate * sign_of(ex.label);
      for (std::size_t k = 0; k < dim; ++k) r.model.w[k] += step * ex.x[k];
      r.model.b += step;
      r.trace.mistakes.emplace_back(epoch, i);
      ++mistakes;
    }
    r.trace.mistakes_per_epoch.push_back(mistakes);
    if (mistakes == 0) {
      r.trace.converged = true;
      break;
    }
  }
  return r;
}

nlohmann::json to_json(const PerceptronModel& m) { return {{"type", "perceptron"}, {"w", m.w}, {"b", m.b}}; }

PerceptronModel perceptron_from_json(const nlohmann::json& j) {
  return {j.at("w").get<std::vector<double>>(), j.at("b").get<double>()};
}

}  // namespace hikester::spam
