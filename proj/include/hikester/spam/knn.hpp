#pragma once

#include <vector>

#include "hikester/spam/dataset.hpp"
#include "json.hpp"

namespace hikester::spam {

struct KnnModel {
  std::vector<TextExample> examples;
  int k = 1;
};

/// Throws unless k is odd, positive and no larger than the corpus.
KnnModel knn_fit(std::vector<TextExample> examples, int k);

/// 1 - cosine similarity of the count vectors; 1 when either is empty.
double cosine_distance(const TokenVector& a, const TokenVector& b);

/// Majority label of the k nearest stored examples; equal distances keep
/// stored order.
Label knn_classify(const KnnModel& model, const TokenVector& features);

nlohmann::json to_json(const KnnModel& m);
KnnModel knn_from_json(const nlohmann::json& j);

}  // namespace hikester::spam
