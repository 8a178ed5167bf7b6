#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hikester/spam/dataset.hpp"
#include "json.hpp"

namespace hikester::spam {

enum class Activation { sigmoid, identity };
enum class LossKind { binary_cross_entropy, mean_squared_error };

struct DenseLayer {
  Eigen::MatrixXd weights;  // outputs x inputs
  Eigen::VectorXd bias;
  Activation activation = Activation::sigmoid;
};

/// Feed-forward network with one sigmoid hidden layer and a scalar output.
struct MlpModel {
  std::vector<DenseLayer> layers;
  LossKind loss = LossKind::binary_cross_entropy;

  std::size_t input_size() const { return static_cast<std::size_t>(layers.front().weights.cols()); }
  std::size_t hidden_size() const { return static_cast<std::size_t>(layers.front().weights.rows()); }

  double predict(std::span<const double> x) const;
  /// One prediction per row of `inputs`.
  Eigen::VectorXd predict(const Eigen::MatrixXd& inputs) const;
  Label classify(std::span<const double> x) const { return predict(x) > 0.5 ? Label::spam : Label::ham; }

  /// Flattened as, per layer, row-major weights followed by bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  std::size_t parameter_count() const;
};

struct MlpConfig {
  int hidden_size = 8;
  int epochs = 1000;
  double learning_rate = 0.5;
  std::uint64_t seed = 42;
  Activation output = Activation::sigmoid;
  LossKind loss = LossKind::binary_cross_entropy;
};

/// Weights and biases uniform in [-0.5, 0.5] from config.seed. Throws
/// std::invalid_argument when hidden_size <= 0.
MlpModel mlp_initialize(std::size_t input_size, const MlpConfig& config);

/// Mean loss over the rows of `inputs`.
double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets);

/// Backpropagated gradient of mlp_loss, in parameters() order.
std::vector<double> mlp_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs,
                                 const Eigen::VectorXd& targets);

struct MlpTrainResult {
  MlpModel model;
  std::vector<double> loss_history;  // loss before each epoch's update
};

/// Full-batch gradient descent.
MlpTrainResult mlp_train(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const MlpConfig& config);

/// Stacks dense examples into (inputs, 0/1 targets).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> to_matrix(std::span<const DenseExample> corpus);

nlohmann::json to_json(const MlpModel& m);
MlpModel mlp_from_json(const nlohmann::json& j);

}  // namespace hikester::spam
