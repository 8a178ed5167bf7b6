#include "hikester/spam/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hikester::spam {

KnnModel knn_fit(std::vector<TextExample> examples, int k) {
  if (k <= 0 || k % 2 == 0) throw std::invalid_argument("k must be odd and positive");
  if (static_cast<std::size_t>(k) > examples.size()) throw std::invalid_argument("k exceeds corpus size");
  return {std::move(examples), k};
}

double cosine_distance(const TokenVector& a, const TokenVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, n] : a) na += static_cast<double>(n) * n;
  for (const auto& [t, n] : b) nb += static_cast<double>(n) * n;
  if (na == 0.0 || nb == 0.0) return 1.0;
  // Merge over the sorted token maps.
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += static_cast<double>(ia->second) * ib->second;
      ++ia;
      ++ib;
    }
  }
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

Label knn_classify(const KnnModel& model, const TokenVector& features) {
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(model.examples.size());
  for (std::size_t i = 0; i < model.examples.size(); ++i)
    ranked.emplace_back(cosine_distance(features, model.examples[i].features), i);
  auto k = static_cast<std::size_t>(model.k);
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
  int votes = 0;
  for (std::size_t i = 0; i < k; ++i) votes += sign_of(model.examples[ranked[i].second].label);
  return votes > 0 ? Label::spam : Label::ham;
}

nlohmann::json to_json(const KnnModel& m) {
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& ex : m.examples) examples.push_back({{"label", to_string(ex.label)}, {"features", ex.features}});
  return {{"type", "knn"}, {"k", m.k}, {"examples", examples}};
}

KnnModel knn_from_json(const nlohmann::json& j) {
  std::vector<TextExample> examples;
  for (const auto& e : j.at("examples")) {
    auto label = parse_label(e.at("label").get<std::string>());
    if (!label) throw std::invalid_argument("bad label in knn model");
    examples.push_back({e.at("features").get<TokenVector>(), *label});
  }
  return knn_fit(std::move(examples), j.at("k").get<int>());
}

}  // namespace hikester::spam
