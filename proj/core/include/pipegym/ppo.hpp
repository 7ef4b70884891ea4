#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "pipegym/policy.hpp"

namespace pipegym {

struct PpoConfig {
  double clip = 0.2;
  double gae_lambda = 0.95;
  double gamma = 0.99;
  double learning_rate = 1e-3;
  int epochs = 5;
  int minibatches = 4;
  int horizon = 24;  // steps per env per iteration
  double entropy_coef = 0.005;
  double value_coef = 1.0;
  double max_grad_norm = 1.0;
  bool normalize_advantage = true;
  // KL-adaptive step size: shrink when the update drifts past 2x the
  // target, grow below half of it; learning_rate is the starting point.
  bool adaptive_lr = true;
  double desired_kl = 0.01;
  double min_lr = 1e-5;
  double max_lr = 1e-2;

  void validate() const;
};

// delta_t = r_t + gamma*(1-done_t)*V_{t+1} - V_t
// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1},  returns = A + V.
// Throws HardFault on length mismatch.
void gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
         const std::vector<std::uint8_t>& dones, double bootstrap_value,
         double gamma, double lambda, Eigen::VectorXd& advantages,
         Eigen::VectorXd& returns);

// (A - mean) / (population std + 1e-8).
Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& advantages);

// -min(ratio*A, clamp(ratio, 1-clip, 1+clip)*A) with ratio = exp(dlogp).
double clipped_surrogate(double logp_new, double logp_old, double advantage,
                         double clip);
// d(loss)/d(logp_new) of the same expression.
double clipped_surrogate_grad(double logp_new, double logp_old,
                              double advantage, double clip);

// Fixed-horizon on-policy storage, (step, env) -> row step*num_envs + env.
struct RolloutBuffer {
  RolloutBuffer(int horizon, int num_envs, int proprio_dim, int privileged_dim,
                int action_dim);

  int horizon = 0;
  int num_envs = 0;
  Eigen::MatrixXd proprio;
  Eigen::MatrixXd privileged;
  Eigen::MatrixXd actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd values;
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> dones;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  int rows() const { return horizon * num_envs; }
  int row(int step, int env) const { return step * num_envs + env; }

  // Runs gae() per environment column with the given bootstrap values.
  void compute_advantages(const Eigen::VectorXd& bootstrap_values, double gamma,
                          double lambda);
};

// Adam on flat parameter vectors.
class AdamOptimizer {
 public:
  AdamOptimizer(int param_count, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grads);

  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr) { learning_rate_ = lr; }

  std::int64_t steps() const { return steps_; }
  const Eigen::VectorXd& m() const { return m_; }
  const Eigen::VectorXd& v() const { return v_; }
  void restore(const Eigen::VectorXd& m, const Eigen::VectorXd& v,
               std::int64_t steps);

 private:
  double learning_rate_, beta1_, beta2_, epsilon_;
  std::int64_t steps_ = 0;
  Eigen::VectorXd m_, v_;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  double learning_rate = 0.0;  // after any KL adaptation
  bool aborted = false;        // non-finite loss; parameters were restored
};

// One PPO update over the full buffer: shuffled minibatches, clipped
// surrogate + value MSE - entropy bonus, Adam. A non-finite loss aborts
// the iteration and restores the pre-update parameters.
UpdateStats ppo_update(PolicyNetwork& policy, AdamOptimizer& optimizer,
                       const RolloutBuffer& buffer, const PpoConfig& config,
                       std::mt19937_64& rng);

}  // namespace pipegym
