#include "hikester/spam/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace hikester::spam {

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
  if (a == Activation::identity) return z;
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// Derivative expressed through the activation's output.
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& out, Activation a) {
  if (a == Activation::identity) return Eigen::MatrixXd::Ones(out.rows(), out.cols());
  return (out.array() * (1.0 - out.array())).matrix();
}

struct ForwardPass {
  std::vector<Eigen::MatrixXd> outputs;  // outputs[0] = inputs, outputs[i + 1] = layer i
};

ForwardPass forward(const MlpModel& m, const Eigen::MatrixXd& inputs) {
  ForwardPass f;
  f.outputs.reserve(m.layers.size() + 1);
  f.outputs.push_back(inputs);
  for (const auto& layer : m.layers) {
    Eigen::MatrixXd z = f.outputs.back() * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    f.outputs.push_back(activate(z, layer.activation));
  }
  return f;
}

constexpr double kProbFloor = 1e-12;

}  // namespace

double MlpModel::predict(std::span<const double> x) const {
  if (x.size() != input_size()) throw std::invalid_argument("mlp input dimension mismatch");
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = x[i];
  return predict(row)(0);
}

Eigen::VectorXd MlpModel::predict(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.cols()) != input_size())
    throw std::invalid_argument("mlp input dimension mismatch");
  return forward(*this, inputs).outputs.back().col(0);
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

std::vector<double> MlpModel::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) flat.push_back(l.weights(r, c));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) flat.push_back(l.bias(i));
  }
  return flat;
}

void MlpModel::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw std::invalid_argument("parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = flat[k++];
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = flat[k++];
  }
}

MlpModel mlp_initialize(std::size_t input_size, const MlpConfig& config) {
  if (config.hidden_size <= 0) throw std::invalid_argument("hidden_size must be positive");
  if (input_size == 0) throw std::invalid_argument("input_size must be positive");
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  auto draw = [&] { return uniform(rng); };
  auto in = static_cast<Eigen::Index>(input_size);
  auto hidden = static_cast<Eigen::Index>(config.hidden_size);

  MlpModel m;
  m.loss = config.loss;
  DenseLayer h{Eigen::MatrixXd(hidden, in), Eigen::VectorXd(hidden), Activation::sigmoid};
  DenseLayer o{Eigen::MatrixXd(1, hidden), Eigen::VectorXd(1), config.output};
  for (auto* layer : {&h, &o}) {
    for (Eigen::Index r = 0; r < layer->weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer->weights.cols(); ++c) layer->weights(r, c) = draw();
    for (Eigen::Index i = 0; i < layer->bias.size(); ++i) layer->bias(i) = draw();
  }
  m.layers = {std::move(h), std::move(o)};
  return m;
}

double mlp_loss(const MlpModel& m, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  Eigen::VectorXd out = m.predict(inputs);
  const double n = static_cast<double>(targets.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    if (m.loss == LossKind::binary_cross_entropy) {
      double p = std::clamp(out(i), kProbFloor, 1.0 - kProbFloor);
      total -= targets(i) * std::log(p) + (1.0 - targets(i)) * std::log(1.0 - p);
    } else {
      double d = out(i) - targets(i);
      total += d * d;
    }
  }
  return total / n;
}

namespace {

std::vector<DenseLayer> gradient_layers(const MlpModel& m, const Eigen::MatrixXd& inputs,
                                        const Eigen::VectorXd& targets) {
  auto pass = forward(m, inputs);
  const double n = static_cast<double>(targets.size());
  const auto& out = pass.outputs.back();
  const auto& last = m.layers.back();

  Eigen::MatrixXd delta;  // dLoss/dz for the current layer, rows = examples
  if (m.loss == LossKind::binary_cross_entropy && last.activation == Activation::sigmoid) {
    delta = (out - targets) / n;
  } else {
    Eigen::MatrixXd dout;
    if (m.loss == LossKind::binary_cross_entropy) {
      Eigen::ArrayXd p = out.col(0).array().max(kProbFloor).min(1.0 - kProbFloor);
      dout = ((-(targets.array() / p) + (1.0 - targets.array()) / (1.0 - p)) / n).matrix();
    } else {
      dout = 2.0 * (out - targets) / n;
    }
    delta = (dout.array() * activation_slope(out, last.activation).array()).matrix();
  }

  std::vector<DenseLayer> grads(m.layers.size());
  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const auto& input = pass.outputs[li];
    grads[li].weights = delta.transpose() * input;
    grads[li].bias = delta.colwise().sum().transpose();
    grads[li].activation = m.layers[li].activation;
    if (li > 0) {
      Eigen::MatrixXd upstream = delta * m.layers[li].weights;
      delta = (upstream.array() * activation_slope(input, m.layers[li - 1].activation).array()).matrix();
    }
  }
  return grads;
}

}  // namespace

std::vector<double> mlp_gradient(const MlpModel& m, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  MlpModel g = m;
  g.layers = gradient_layers(m, inputs, targets);
  return g.parameters();
}

MlpTrainResult mlp_train(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const MlpConfig& config) {
  if (inputs.rows() != targets.size() || inputs.rows() == 0)
    throw std::invalid_argument("mlp training needs matching, non-empty inputs and targets");
  MlpTrainResult r{mlp_initialize(static_cast<std::size_t>(inputs.cols()), config), {}};
  r.loss_history.reserve(static_cast<std::size_t>(std::max(config.epochs, 0)));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    r.loss_history.push_back(mlp_loss(r.model, inputs, targets));
    auto grads = gradient_layers(r.model, inputs, targets);
    for (std::size_t li = 0; li < grads.size(); ++li) {
      r.model.layers[li].weights -= config.learning_rate * grads[li].weights;
      r.model.layers[li].bias -= config.learning_rate * grads[li].bias;
    }
  }
  return r;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> to_matrix(std::span<const DenseExample> corpus) {
  if (corpus.empty()) return {};
  auto rows = static_cast<Eigen::Index>(corpus.size());
  auto cols = static_cast<Eigen::Index>(corpus.front().x.size());
  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& ex = corpus[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(ex.x.size()) != cols) throw std::invalid_argument("mixed dimensions");
    for (Eigen::Index c = 0; c < cols; ++c) x(r, c) = ex.x[static_cast<std::size_t>(c)];
    y(r) = ex.label == Label::spam ? 1.0 : 0.0;
  }
  return {std::move(x), std::move(y)};
}

nlohmann::json to_json(const MlpModel& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers) {
    layers.push_back({{"rows", l.weights.rows()},
                      {"cols", l.weights.cols()},
                      {"activation", l.activation == Activation::sigmoid ? "sigmoid" : "identity"}});
  }
  return {{"type", "mlp"},
          {"loss", m.loss == LossKind::binary_cross_entropy ? "binary_cross_entropy" : "mean_squared_error"},
          {"layers", layers},
          {"parameters", m.parameters()}};
}

MlpModel mlp_from_json(const nlohmann::json& j) {
  MlpModel m;
  m.loss = j.at("loss").get<std::string>() == "binary_cross_entropy" ? LossKind::binary_cross_entropy
                                                                     : LossKind::mean_squared_error;
  for (const auto& l : j.at("layers")) {
    auto rows = l.at("rows").get<Eigen::Index>();
    auto cols = l.at("cols").get<Eigen::Index>();
    m.layers.push_back({Eigen::MatrixXd::Zero(rows, cols), Eigen::VectorXd::Zero(rows),
                        l.at("activation").get<std::string>() == "sigmoid" ? Activation::sigmoid
                                                                           : Activation::identity});
  }
  m.set_parameters(j.at("parameters").get<std::vector<double>>());
  return m;
}

}  // namespace hikester::spam
