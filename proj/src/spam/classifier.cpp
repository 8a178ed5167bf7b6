#include "hikester/spam/classifier.hpp"

namespace hikester::spam {

Verdict NaiveBayesClassifier::classify(const TokenVector& features) const {
  auto v = nb_classify(model_, features);
  return {v.label, v.spam_posterior};
}

nlohmann::json NaiveBayesClassifier::to_json() const { return spam::to_json(model_); }

Verdict PerceptronClassifier::classify(const TokenVector& features) const {
  return {model_.classify(vocab_.dense(features)), std::nullopt};
}

nlohmann::json PerceptronClassifier::to_json() const {
  auto j = spam::to_json(model_);
  j["vocabulary"] = vocab_.tokens();
  return j;
}

Verdict KnnClassifier::classify(const TokenVector& features) const {
  return {knn_classify(model_, features), std::nullopt};
}

nlohmann::json KnnClassifier::to_json() const { return spam::to_json(model_); }

Verdict MlpClassifier::classify(const TokenVector& features) const {
  double p = model_.predict(vocab_.dense(features));
  return {p > 0.5 ? Label::spam : Label::ham, p};
}

nlohmann::json MlpClassifier::to_json() const {
  auto j = spam::to_json(model_);
  j["vocabulary"] = vocab_.tokens();
  return j;
}

std::optional<ClassifierKind> parse_classifier_kind(std::string_view s) {
  if (s == "naive_bayes") return ClassifierKind::naive_bayes;
  if (s == "perceptron") return ClassifierKind::perceptron;
  if (s == "knn") return ClassifierKind::knn;
  if (s == "mlp") return ClassifierKind::mlp;
  return std::nullopt;
}

namespace {

Vocabulary vocabulary_from(const nlohmann::json& tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.add(t.get<std::string>());
  return v;
}

}  // namespace

std::shared_ptr<const SpamClassifier> train_classifier(const std::vector<TextExample>& corpus,
                                                       const TrainingOptions& options) {
  switch (options.kind) {
    case ClassifierKind::naive_bayes:
      return std::make_shared<NaiveBayesClassifier>(nb_train(corpus, options.alpha));
    case ClassifierKind::perceptron: {
      auto vocab = Vocabulary::build(corpus);
      auto dense = vocab.dense(corpus);
      auto result = perceptron_train(dense, options.perceptron_epochs, 1.0);
      return std::make_shared<PerceptronClassifier>(std::move(vocab), std::move(result.model));
    }
    case ClassifierKind::knn:
      return std::make_shared<KnnClassifier>(knn_fit(corpus, options.knn_k));
    case ClassifierKind::mlp: {
      auto vocab = Vocabulary::build(corpus);
      auto dense = vocab.dense(corpus);
      auto [x, y] = to_matrix(dense);
      auto result = mlp_train(x, y, options.mlp);
      return std::make_shared<MlpClassifier>(std::move(vocab), std::move(result.model));
    }
  }
  throw std::invalid_argument("unknown classifier kind");
}

std::shared_ptr<const SpamClassifier> classifier_from_json(const nlohmann::json& j) {
  auto type = j.at("type").get<std::string>();
  if (type == "naive_bayes") return std::make_shared<NaiveBayesClassifier>(naive_bayes_from_json(j));
  if (type == "perceptron")
    return std::make_shared<PerceptronClassifier>(vocabulary_from(j.at("vocabulary")), perceptron_from_json(j));
  if (type == "knn") return std::make_shared<KnnClassifier>(knn_from_json(j));
  if (type == "mlp") return std::make_shared<MlpClassifier>(vocabulary_from(j.at("vocabulary")), mlp_from_json(j));
  throw std::invalid_argument("unknown classifier type '" + type + "'");
}

ModerationVerdict SpamModerator::moderate(const EventRecord& e) const {
  auto classifier = active_.load();
  if (!classifier) return {EventStatus::active, std::nullopt};
  auto verdict = classifier->classify(tokenize(e.title + " " + e.description));
  bool flagged = verdict.spam_probability ? *verdict.spam_probability >= threshold_ : verdict.label == Label::spam;
  return {flagged ? EventStatus::flagged_spam : EventStatus::active, verdict.spam_probability};
}

}  // namespace hikester::spam
