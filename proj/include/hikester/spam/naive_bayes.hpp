#pragma once

#include <map>
#include <string>
#include <vector>

#include "hikester/spam/dataset.hpp"
#include "json.hpp"

namespace hikester::spam {

class DegenerateCorpus : public std::invalid_argument {
 public:
  DegenerateCorpus() : std::invalid_argument("degenerate corpus") {}
};

/// Multinomial naive Bayes with additive smoothing.
struct NaiveBayesModel {
  double alpha = 1.0;
  std::size_t spam_documents = 0;
  std::size_t ham_documents = 0;
  std::map<std::string, long> spam_counts;
  std::map<std::string, long> ham_counts;
  long spam_mass = 0;
  long ham_mass = 0;
  std::size_t vocabulary_size = 0;  // joint over both classes

  double prior(Label l) const;
  /// (count + alpha) / (mass + alpha * V)
  double likelihood(const std::string& token, Label l) const;
};

/// Throws DegenerateCorpus unless both classes are present.
NaiveBayesModel nb_train(const std::vector<TextExample>& corpus, double alpha = 1.0);

struct NbVerdict {
  Label label;
  double spam_posterior;
};

/// Log-space scoring with log-sum-exp normalisation. Equal scores go to ham.
NbVerdict nb_classify(const NaiveBayesModel& model, const TokenVector& features);
NbVerdict nb_classify(const NaiveBayesModel& model, std::string_view text);

nlohmann::json to_json(const NaiveBayesModel& m);
NaiveBayesModel naive_bayes_from_json(const nlohmann::json& j);

}  // namespace hikester::spam
