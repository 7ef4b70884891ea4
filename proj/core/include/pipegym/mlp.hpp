#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace pipegym {

// Small feedforward net with ELU hidden layers and a linear output.
// Batches are row-major: one sample per row.
class Mlp {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
  };

  struct Cache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;   // pre-activation per layer
    std::vector<Eigen::MatrixXd> post;  // activated input of each layer > 0
  };

  struct Grads {
    std::vector<Layer> layers;
    void zero();
  };

  Mlp() = default;
  // sizes = {in, hidden..., out}; Xavier-uniform init, output layer
  // scaled by output_scale.
  Mlp(const std::vector<int>& sizes, std::mt19937_64& rng,
      double output_scale = 1.0);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache& cache) const;

  // Accumulates parameter gradients and returns the gradient with
  // respect to the input.
  Eigen::MatrixXd backward(const Cache& cache,
                           const Eigen::MatrixXd& grad_output,
                           Grads& grads) const;

  Grads make_grads() const;

  int input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols()); }
  int output_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows()); }
  int param_count() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  std::vector<Layer> layers_;
};

}  // namespace pipegym
