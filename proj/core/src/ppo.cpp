#include "pipegym/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "pipegym/errors.hpp"

namespace pipegym {

void PpoConfig::validate() const {
  if (clip <= 0.0) throw ConfigError("ppo: clip must be > 0");
  if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("ppo: gamma out of (0,1]");
  if (gae_lambda < 0.0 || gae_lambda > 1.0)
    throw ConfigError("ppo: gae_lambda out of [0,1]");
  if (learning_rate <= 0.0) throw ConfigError("ppo: learning_rate must be > 0");
  if (epochs < 1 || minibatches < 1 || horizon < 1)
    throw ConfigError("ppo: epochs, minibatches and horizon must be >= 1");
}

void gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
         const std::vector<std::uint8_t>& dones, double bootstrap_value,
         double gamma, double lambda, Eigen::VectorXd& advantages,
         Eigen::VectorXd& returns) {
  const auto n = rewards.size();
  if (values.size() != n || static_cast<Eigen::Index>(dones.size()) != n)
    throw HardFault("gae: input length mismatch");
  advantages.resize(n);
  returns.resize(n);
  double running = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double next_value = (t == n - 1) ? bootstrap_value : values[t + 1];
    const double delta =
        rewards[t] + gamma * next_value * not_done - values[t];
    running = delta + gamma * lambda * not_done * running;
    advantages[t] = running;
    returns[t] = running + values[t];
  }
}

Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& advantages) {
  const double mean = advantages.mean();
  const double var = (advantages.array() - mean).square().mean();
  return (advantages.array() - mean) / (std::sqrt(var) + 1e-8);
}

double clipped_surrogate(double logp_new, double logp_old, double advantage,
                         double clip) {
  const double ratio = std::exp(logp_new - logp_old);
  const double unclipped = ratio * advantage;
  const double clipped =
      std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage;
  return -std::min(unclipped, clipped);
}

double clipped_surrogate_grad(double logp_new, double logp_old,
                              double advantage, double clip) {
  const double ratio = std::exp(logp_new - logp_old);
  const double unclipped = ratio * advantage;
  const double clipped =
      std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage;
  if (unclipped <= clipped) return -ratio * advantage;
  // clipped branch active; gradient vanishes where the clamp saturates
  if (ratio > 1.0 - clip && ratio < 1.0 + clip) return -ratio * advantage;
  return 0.0;
}

RolloutBuffer::RolloutBuffer(int horizon_in, int num_envs_in, int proprio_dim,
                             int privileged_dim, int action_dim)
    : horizon(horizon_in), num_envs(num_envs_in) {
  const int n = rows();
  proprio.setZero(n, proprio_dim);
  privileged.setZero(n, privileged_dim);
  actions.setZero(n, action_dim);
  log_probs.setZero(n);
  values.setZero(n);
  rewards.setZero(n);
  dones.assign(n, 0);
  advantages.setZero(n);
  returns.setZero(n);
}

void RolloutBuffer::compute_advantages(const Eigen::VectorXd& bootstrap_values,
                                       double gamma, double lambda) {
  if (bootstrap_values.size() != num_envs)
    throw HardFault("rollout: bootstrap size mismatch");
  Eigen::VectorXd env_rewards(horizon), env_values(horizon);
  std::vector<std::uint8_t> env_dones(horizon);
  Eigen::VectorXd env_adv, env_ret;
  for (int e = 0; e < num_envs; ++e) {
    for (int t = 0; t < horizon; ++t) {
      env_rewards[t] = rewards[row(t, e)];
      env_values[t] = values[row(t, e)];
      env_dones[t] = dones[row(t, e)];
    }
    gae(env_rewards, env_values, env_dones, bootstrap_values[e], gamma, lambda,
        env_adv, env_ret);
    for (int t = 0; t < horizon; ++t) {
      advantages[row(t, e)] = env_adv[t];
      returns[row(t, e)] = env_ret[t];
    }
  }
}

AdamOptimizer::AdamOptimizer(int param_count, double learning_rate,
                             double beta1, double beta2, double epsilon)
    : learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(Eigen::VectorXd::Zero(param_count)),
      v_(Eigen::VectorXd::Zero(param_count)) {}

void AdamOptimizer::step(Eigen::VectorXd& params,
                         const Eigen::VectorXd& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw HardFault("adam: parameter size mismatch");
  ++steps_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grads;
  v_ = beta2_ * v_.array().matrix() +
       (1.0 - beta2_) * grads.array().square().matrix();
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  params.array() -= learning_rate_ * (m_.array() / bias1) /
                    ((v_.array() / bias2).sqrt() + epsilon_);
}

void AdamOptimizer::restore(const Eigen::VectorXd& m, const Eigen::VectorXd& v,
                            std::int64_t steps) {
  m_ = m;
  v_ = v;
  steps_ = steps;
}

UpdateStats ppo_update(PolicyNetwork& policy, AdamOptimizer& optimizer,
                       const RolloutBuffer& buffer, const PpoConfig& config,
                       std::mt19937_64& rng) {
  UpdateStats stats;
  const int n = buffer.rows();
  const int minibatch_size = n / config.minibatches;
  if (minibatch_size < 1) throw HardFault("ppo update: empty minibatch");

  // snapshot for the non-finite-loss abort path
  const Eigen::VectorXd params_snapshot = policy.get_flat_params();
  const Eigen::VectorXd adam_m = optimizer.m();
  const Eigen::VectorXd adam_v = optimizer.v();
  const std::int64_t adam_steps = optimizer.steps();
  const double lr_snapshot = optimizer.learning_rate();

  std::vector<int> indices(n);
  std::iota(indices.begin(), indices.end(), 0);

  PolicyNetwork::Grads grads = policy.make_grads();
  const int action_dim = policy.config().action_dim;

  int batches_done = 0;
  double kl_sum = 0.0;
  for (int epoch = 0; epoch < config.epochs && !stats.aborted; ++epoch) {
    std::shuffle(indices.begin(), indices.end(), rng);
    for (int start = 0; start + minibatch_size <= n;
         start += minibatch_size) {
      const int m = minibatch_size;
      Eigen::MatrixXd mb_proprio(m, buffer.proprio.cols());
      Eigen::MatrixXd mb_privileged(m, buffer.privileged.cols());
      Eigen::MatrixXd mb_actions(m, action_dim);
      Eigen::VectorXd mb_logp_old(m), mb_adv(m), mb_returns(m);
      for (int i = 0; i < m; ++i) {
        const int r = indices[start + i];
        mb_proprio.row(i) = buffer.proprio.row(r);
        mb_privileged.row(i) = buffer.privileged.row(r);
        mb_actions.row(i) = buffer.actions.row(r);
        mb_logp_old[i] = buffer.log_probs[r];
        mb_adv[i] = buffer.advantages[r];
        mb_returns[i] = buffer.returns[r];
      }

      if (config.normalize_advantage) mb_adv = normalize_advantages(mb_adv);

      PolicyNetwork::ForwardCache cache;
      const auto out = policy.evaluate(mb_proprio, mb_privileged, cache);
      const Eigen::VectorXd log_std = policy.log_std();
      const Eigen::VectorXd logp_new =
          gaussian_log_prob(out.mean, log_std, mb_actions);

      double policy_loss = 0.0;
      for (int i = 0; i < m; ++i)
        policy_loss +=
            clipped_surrogate(logp_new[i], mb_logp_old[i], mb_adv[i],
                              config.clip);
      policy_loss /= m;
      const double value_loss =
          (out.value - mb_returns).array().square().mean();
      const double entropy = gaussian_entropy(log_std);
      const double total_loss = policy_loss + config.value_coef * value_loss -
                                config.entropy_coef * entropy;

      if (!std::isfinite(total_loss)) {
        std::cerr << "pipegym: non-finite PPO loss, restoring parameters\n";
        Eigen::VectorXd restored = params_snapshot;
        policy.set_flat_params(restored);
        optimizer.restore(adam_m, adam_v, adam_steps);
        optimizer.set_learning_rate(lr_snapshot);
        stats.aborted = true;
        break;
      }

      // gradients
      const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
      Eigen::MatrixXd grad_mean = Eigen::MatrixXd::Zero(m, action_dim);
      Eigen::VectorXd grad_value(m);
      Eigen::VectorXd grad_log_std = Eigen::VectorXd::Zero(action_dim);
      double kl = 0.0;
      for (int i = 0; i < m; ++i) {
        const double dlogp =
            clipped_surrogate_grad(logp_new[i], mb_logp_old[i], mb_adv[i],
                                   config.clip) /
            m;
        const Eigen::ArrayXd diff =
            (mb_actions.row(i) - out.mean.row(i)).transpose().array();
        grad_mean.row(i) = (dlogp * diff * inv_var).matrix().transpose();
        grad_log_std.array() += dlogp * (diff.square() * inv_var - 1.0);
        grad_value[i] =
            config.value_coef * 2.0 * (out.value[i] - mb_returns[i]) / m;
        const double logratio = logp_new[i] - mb_logp_old[i];
        kl += (std::exp(logratio) - 1.0) - logratio;
      }
      grad_log_std.array() -= config.entropy_coef;  // -coef * dH/dlog_std
      grad_log_std.array() *= policy.log_std_grad_mask().array();

      if (config.adaptive_lr && config.desired_kl > 0.0) {
        double lr = optimizer.learning_rate();
        if (kl / m > 2.0 * config.desired_kl) {
          lr = std::max(config.min_lr, lr / 1.5);
        } else if (kl / m < 0.5 * config.desired_kl && kl >= 0.0) {
          lr = std::min(config.max_lr, lr * 1.5);
        }
        optimizer.set_learning_rate(lr);
      }

      grads.zero();
      policy.backward(cache, grad_mean, grad_value, grads);
      grads.log_std = grad_log_std;

      Eigen::VectorXd flat_grads = PolicyNetwork::flatten_grads(grads);
      const double grad_norm = flat_grads.norm();
      if (config.max_grad_norm > 0.0 && grad_norm > config.max_grad_norm)
        flat_grads *= config.max_grad_norm / grad_norm;

      Eigen::VectorXd params = policy.get_flat_params();
      optimizer.step(params, flat_grads);
      policy.set_flat_params(params);

      stats.policy_loss += policy_loss;
      stats.value_loss += value_loss;
      stats.entropy += entropy;
      stats.grad_norm += grad_norm;
      kl_sum += kl / m;
      ++batches_done;
    }
  }

  if (batches_done > 0) {
    stats.policy_loss /= batches_done;
    stats.value_loss /= batches_done;
    stats.entropy /= batches_done;
    stats.grad_norm /= batches_done;
    stats.approx_kl = kl_sum / batches_done;
  }
  stats.learning_rate = optimizer.learning_rate();
  return stats;
}

}  // namespace pipegym
