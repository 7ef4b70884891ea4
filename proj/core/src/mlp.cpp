#include "pipegym/mlp.hpp"

#include <cmath>

#include "pipegym/errors.hpp"

namespace pipegym {

namespace {

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

}  // namespace

void Mlp::Grads::zero() {
  for (Layer& layer : layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
}

Mlp::Mlp(const std::vector<int>& sizes, std::mt19937_64& rng,
         double output_scale) {
  if (sizes.size() < 2) throw ConfigError("mlp: need at least in and out dims");
  layers_.resize(sizes.size() - 1);
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int in = sizes[i];
    const int out = sizes[i + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer& layer = layers_[i];
    layer.weight.resize(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = dist(rng);
    layer.bias = Eigen::VectorXd::Zero(out);
    if (i + 2 == sizes.size()) layer.weight *= output_scale;
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  Eigen::MatrixXd x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z =
        (x * layers_[i].weight.transpose()).rowwise() +
        layers_[i].bias.transpose();
    if (i + 1 < layers_.size()) z = z.unaryExpr([](double v) { return elu(v); });
    x = std::move(z);
  }
  return x;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Cache& cache) const {
  cache.input = input;
  cache.pre.resize(layers_.size());
  cache.post.assign(layers_.size(), Eigen::MatrixXd());
  Eigen::MatrixXd x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    cache.pre[i] = (x * layers_[i].weight.transpose()).rowwise() +
                   layers_[i].bias.transpose();
    if (i + 1 < layers_.size()) {
      x = cache.pre[i].unaryExpr([](double v) { return elu(v); });
      cache.post[i] = x;
    } else {
      x = cache.pre[i];
    }
  }
  return x;
}

Eigen::MatrixXd Mlp::backward(const Cache& cache,
                              const Eigen::MatrixXd& grad_output,
                              Grads& grads) const {
  Eigen::MatrixXd g = grad_output;  // gradient w.r.t. pre-activation of layer i
  for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
    const Eigen::MatrixXd& layer_input =
        i == 0 ? cache.input : cache.post[i - 1];
    grads.layers[i].weight.noalias() += g.transpose() * layer_input;
    grads.layers[i].bias.noalias() += g.colwise().sum().transpose();
    Eigen::MatrixXd g_input = g * layers_[i].weight;
    if (i > 0) {
      g_input.array() *=
          cache.pre[i - 1].unaryExpr([](double v) { return elu_grad(v); }).array();
    }
    g = std::move(g_input);
  }
  return g;
}

Mlp::Grads Mlp::make_grads() const {
  Grads grads;
  grads.layers.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    grads.layers[i].weight =
        Eigen::MatrixXd::Zero(layers_[i].weight.rows(), layers_[i].weight.cols());
    grads.layers[i].bias = Eigen::VectorXd::Zero(layers_[i].bias.size());
  }
  return grads;
}

int Mlp::param_count() const {
  int count = 0;
  for (const Layer& layer : layers_)
    count += static_cast<int>(layer.weight.size() + layer.bias.size());
  return count;
}

}  // namespace pipegym
