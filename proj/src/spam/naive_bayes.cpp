#include "hikester/spam/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hikester::spam {

double NaiveBayesModel::prior(Label l) const {
  double total = static_cast<double>(spam_documents + ham_documents);
  return static_cast<double>(l == Label::spam ? spam_documents : ham_documents) / total;
}

double NaiveBayesModel::likelihood(const std::string& token, Label l) const {
  const auto& counts = l == Label::spam ? spam_counts : ham_counts;
  long mass = l == Label::spam ? spam_mass : ham_mass;
  auto it = counts.find(token);
  double count = it == counts.end() ? 0.0 : static_cast<double>(it->second);
  return (count + alpha) / (static_cast<double>(mass) + alpha * static_cast<double>(vocabulary_size));
}

NaiveBayesModel nb_train(const std::vector<TextExample>& corpus, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  NaiveBayesModel m;
  m.alpha = alpha;
  std::set<std::string> vocabulary;
  for (const auto& ex : corpus) {
    bool spam = ex.label == Label::spam;
    (spam ? m.spam_documents : m.ham_documents)++;
    auto& counts = spam ? m.spam_counts : m.ham_counts;
    auto& mass = spam ? m.spam_mass : m.ham_mass;
    for (const auto& [token, n] : ex.features) {
      counts[token] += n;
      mass += n;
      vocabulary.insert(token);
    }
  }
  if (m.spam_documents == 0 || m.ham_documents == 0) throw DegenerateCorpus();
  m.vocabulary_size = vocabulary.size();
  return m;
}

NbVerdict nb_classify(const NaiveBayesModel& m, const TokenVector& features) {
  double log_spam = std::log(m.prior(Label::spam));
  double log_ham = std::log(m.prior(Label::ham));
  // With an empty vocabulary every token has the same (undefined) likelihood
  // under both classes, so it carries no evidence.
  if (m.vocabulary_size > 0) {
    for (const auto& [token, n] : features) {
      log_spam += n * std::log(m.likelihood(token, Label::spam));
      log_ham += n * std::log(m.likelihood(token, Label::ham));
    }
  }
  double top = std::max(log_spam, log_ham);
  double es = std::exp(log_spam - top);
  double eh = std::exp(log_ham - top);
  double posterior = es / (es + eh);
  return {log_spam > log_ham ? Label::spam : Label::ham, posterior};
}

NbVerdict nb_classify(const NaiveBayesModel& model, std::string_view text) {
  return nb_classify(model, tokenize(text));
}

nlohmann::json to_json(const NaiveBayesModel& m) {
  return {{"type", "naive_bayes"},
          {"alpha", m.alpha},
          {"spam_documents", m.spam_documents},
          {"ham_documents", m.ham_documents},
          {"spam_counts", m.spam_counts},
          {"ham_counts", m.ham_counts},
          {"spam_mass", m.spam_mass},
          {"ham_mass", m.ham_mass},
          {"vocabulary_size", m.vocabulary_size}};
}

NaiveBayesModel naive_bayes_from_json(const nlohmann::json& j) {
  NaiveBayesModel m;
  m.alpha = j.at("alpha").get<double>();
  m.spam_documents = j.at("spam_documents").get<std::size_t>();
  m.ham_documents = j.at("ham_documents").get<std::size_t>();
  m.spam_counts = j.at("spam_counts").get<std::map<std::string, long>>();
  m.ham_counts = j.at("ham_counts").get<std::map<std::string, long>>();
  m.spam_mass = j.at("spam_mass").get<long>();
  m.ham_mass = j.at("ham_mass").get<long>();
  m.vocabulary_size = j.at("vocabulary_size").get<std::size_t>();
  return m;
}

}  // namespace hikester::spam
