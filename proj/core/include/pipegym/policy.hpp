#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "pipegym/mlp.hpp"

namespace pipegym {

// Actor-critic with a privileged-information encoder:
//   latent = encoder(privileged)
//   mean   = actor([proprio, latent])
//   value  = critic([proprio, latent])
// plus a state-independent diagonal-Gaussian log-std.
struct PolicyConfig {
  int proprio_dim = 47;
  int privileged_dim = 296;
  int action_dim = 12;
  int latent_dim = 32;
  std::vector<int> encoder_hidden{128};
  std::vector<int> actor_hidden{256, 128};
  std::vector<int> critic_hidden{256, 128};
  double init_log_std = -1.0;
  double log_std_min = -4.0;
  double log_std_max = 1.0;
};

class PolicyNetwork {
 public:
  struct Output {
    Eigen::MatrixXd mean;   // N x action_dim
    Eigen::VectorXd value;  // N
  };

  struct ForwardCache {
    Mlp::Cache encoder;
    Mlp::Cache actor;
    Mlp::Cache critic;
  };

  struct Grads {
    Mlp::Grads encoder;
    Mlp::Grads actor;
    Mlp::Grads critic;
    Eigen::VectorXd log_std;
    void zero();
  };

  PolicyNetwork(const PolicyConfig& config, std::uint64_t seed);

  const PolicyConfig& config() const { return config_; }

  Output evaluate(const Eigen::MatrixXd& proprio,
                  const Eigen::MatrixXd& privileged) const;
  Output evaluate(const Eigen::MatrixXd& proprio,
                  const Eigen::MatrixXd& privileged, ForwardCache& cache) const;

  // Accumulates parameter gradients from dL/dmean and dL/dvalue.
  void backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_mean,
                const Eigen::VectorXd& grad_value, Grads& grads) const;

  // clamped log-std actually used by the distribution
  Eigen::VectorXd log_std() const;
  const Eigen::VectorXd& log_std_raw() const { return log_std_raw_; }
  Eigen::VectorXd& log_std_raw() { return log_std_raw_; }
  // 1 where the raw value is inside the clamp range, else 0
  Eigen::VectorXd log_std_grad_mask() const;

  Grads make_grads() const;
  int param_count() const;

  // Flat parameter access (checkpointing, Adam, gradient checks).
  Eigen::VectorXd get_flat_params() const;
  void set_flat_params(const Eigen::VectorXd& flat);
  static Eigen::VectorXd flatten_grads(const Grads& grads);

  // Order-stable traversal of named tensors (row-major semantics are
  // handled by the checkpoint writer).
  void visit_tensors(
      const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn)
      const;

  Mlp& encoder() { return encoder_; }
  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  const Mlp& encoder() const { return encoder_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }

 private:
  PolicyConfig config_;
  Mlp encoder_;
  Mlp actor_;
  Mlp critic_;
  Eigen::VectorXd log_std_raw_;
};

// Diagonal-Gaussian helpers. log_std is the clamped vector.
Eigen::VectorXd gaussian_log_prob(const Eigen::MatrixXd& mean,
                                  const Eigen::VectorXd& log_std,
                                  const Eigen::MatrixXd& actions);
double gaussian_entropy(const Eigen::VectorXd& log_std);

}  // namespace pipegym
