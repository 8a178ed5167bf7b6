#pragma once

#include <memory>
#include <optional>
#include <string>

#include "hikester/core/model.hpp"
#include "hikester/spam/knn.hpp"
#include "hikester/spam/mlp.hpp"
#include "hikester/spam/naive_bayes.hpp"
#include "hikester/spam/perceptron.hpp"
#include "hikester/util/atomic_model.hpp"

namespace hikester::spam {

struct Verdict {
  Label label = Label::ham;
  /// P(spam | text) for probabilistic classifiers.
  std::optional<double> spam_probability;
};

/// A trained classifier over bag-of-words features.
class SpamClassifier {
 public:
  virtual ~SpamClassifier() = default;
  virtual Verdict classify(const TokenVector& features) const = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

class NaiveBayesClassifier final : public SpamClassifier {
 public:
  explicit NaiveBayesClassifier(NaiveBayesModel m) : model_(std::move(m)) {}
  Verdict classify(const TokenVector& features) const override;
  std::string kind() const override { return "naive_bayes"; }
  nlohmann::json to_json() const override;
  const NaiveBayesModel& model() const { return model_; }

 private:
  NaiveBayesModel model_;
};

class PerceptronClassifier final : public SpamClassifier {
 public:
  PerceptronClassifier(Vocabulary vocab, PerceptronModel m) : vocab_(std::move(vocab)), model_(std::move(m)) {}
  Verdict classify(const TokenVector& features) const override;
  std::string kind() const override { return "perceptron"; }
  nlohmann::json to_json() const override;

 private:
  Vocabulary vocab_;
  PerceptronModel model_;
};

class KnnClassifier final : public SpamClassifier {
 public:
  explicit KnnClassifier(KnnModel m) : model_(std::move(m)) {}
  Verdict classify(const TokenVector& features) const override;
  std::string kind() const override { return "knn"; }
  nlohmann::json to_json() const override;

 private:
  KnnModel model_;
};

class MlpClassifier final : public SpamClassifier {
 public:
  MlpClassifier(Vocabulary vocab, MlpModel m) : vocab_(std::move(vocab)), model_(std::move(m)) {}
  Verdict classify(const TokenVector& features) const override;
  std::string kind() const override { return "mlp"; }
  nlohmann::json to_json() const override;

 private:
  Vocabulary vocab_;
  MlpModel model_;
};

enum class ClassifierKind { naive_bayes, perceptron, knn, mlp };

std::optional<ClassifierKind> parse_classifier_kind(std::string_view s);

struct TrainingOptions {
  ClassifierKind kind = ClassifierKind::naive_bayes;
  double alpha = 1.0;
  int perceptron_epochs = 100;
  int knn_k = 3;
  MlpConfig mlp;
};

std::shared_ptr<const SpamClassifier> train_classifier(const std::vector<TextExample>& corpus,
                                                       const TrainingOptions& options = {});

/// Inverse of SpamClassifier::to_json.
std::shared_ptr<const SpamClassifier> classifier_from_json(const nlohmann::json& j);

struct ModerationVerdict {
  EventStatus status = EventStatus::active;
  std::optional<double> posterior;
};

/// Screens new events with the active classifier. Untrained: every event
/// passes (fail-open). Retraining swaps the classifier atomically; in-flight
/// calls finish on the instance they started with.
class SpamModerator {
 public:
  explicit SpamModerator(double threshold = 0.9) : threshold_(threshold) {}

  void set_classifier(std::shared_ptr<const SpamClassifier> classifier) { active_.store(std::move(classifier)); }
  std::shared_ptr<const SpamClassifier> classifier() const { return active_.load(); }
  double threshold() const { return threshold_; }

  ModerationVerdict moderate(const EventRecord& e) const;

 private:
  double threshold_;
  util::AtomicModel<SpamClassifier> active_;
};

}  // namespace hikester::spam
