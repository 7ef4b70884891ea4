#include "pipegym/policy.hpp"

#include <cmath>

#include "pipegym/errors.hpp"

namespace pipegym {

void PolicyNetwork::Grads::zero() {
  encoder.zero();
  actor.zero();
  critic.zero();
  log_std.setZero();
}

PolicyNetwork::PolicyNetwork(const PolicyConfig& config, std::uint64_t seed)
    : config_(config) {
  if (config.proprio_dim < 1 || config.privileged_dim < 1 ||
      config.action_dim < 1 || config.latent_dim < 1)
    throw HardFault("policy: non-positive dimension");

  std::mt19937_64 rng(seed);
  std::vector<int> encoder_sizes{config.privileged_dim};
  encoder_sizes.insert(encoder_sizes.end(), config.encoder_hidden.begin(),
                       config.encoder_hidden.end());
  encoder_sizes.push_back(config.latent_dim);
  encoder_ = Mlp(encoder_sizes, rng);

  const int trunk_in = config.proprio_dim + config.latent_dim;
  std::vector<int> actor_sizes{trunk_in};
  actor_sizes.insert(actor_sizes.end(), config.actor_hidden.begin(),
                     config.actor_hidden.end());
  actor_sizes.push_back(config.action_dim);
  actor_ = Mlp(actor_sizes, rng, 0.01);  // small initial action mean

  std::vector<int> critic_sizes{trunk_in};
  critic_sizes.insert(critic_sizes.end(), config.critic_hidden.begin(),
                      config.critic_hidden.end());
  critic_sizes.push_back(1);
  critic_ = Mlp(critic_sizes, rng);

  log_std_raw_ =
      Eigen::VectorXd::Constant(config.action_dim, config.init_log_std);
}

PolicyNetwork::Output PolicyNetwork::evaluate(
    const Eigen::MatrixXd& proprio, const Eigen::MatrixXd& privileged) const {
  if (proprio.cols() != config_.proprio_dim ||
      privileged.cols() != config_.privileged_dim ||
      proprio.rows() != privileged.rows())
    throw HardFault("policy evaluate: observation dimension mismatch");
  const Eigen::MatrixXd latent = encoder_.forward(privileged);
  Eigen::MatrixXd trunk(proprio.rows(), proprio.cols() + latent.cols());
  trunk << proprio, latent;
  Output out;
  out.mean = actor_.forward(trunk);
  out.value = critic_.forward(trunk).col(0);
  return out;
}

PolicyNetwork::Output PolicyNetwork::evaluate(const Eigen::MatrixXd& proprio,
                                              const Eigen::MatrixXd& privileged,
                                              ForwardCache& cache) const {
  if (proprio.cols() != config_.proprio_dim ||
      privileged.cols() != config_.privileged_dim ||
      proprio.rows() != privileged.rows())
    throw HardFault("policy evaluate: observation dimension mismatch");
  const Eigen::MatrixXd latent = encoder_.forward(privileged, cache.encoder);
  Eigen::MatrixXd trunk(proprio.rows(), proprio.cols() + latent.cols());
  trunk << proprio, latent;
  Output out;
  out.mean = actor_.forward(trunk, cache.actor);
  out.value = critic_.forward(trunk, cache.critic).col(0);
  return out;
}

void PolicyNetwork::backward(const ForwardCache& cache,
                             const Eigen::MatrixXd& grad_mean,
                             const Eigen::VectorXd& grad_value,
                             Grads& grads) const {
  const Eigen::MatrixXd grad_trunk_actor =
      actor_.backward(cache.actor, grad_mean, grads.actor);
  const Eigen::MatrixXd grad_trunk_critic =
      critic_.backward(cache.critic, grad_value, grads.critic);
  const Eigen::MatrixXd grad_latent =
      grad_trunk_actor.rightCols(config_.latent_dim) +
      grad_trunk_critic.rightCols(config_.latent_dim);
  encoder_.backward(cache.encoder, grad_latent, grads.encoder);
}

Eigen::VectorXd PolicyNetwork::log_std() const {
  return log_std_raw_.cwiseMax(config_.log_std_min)
      .cwiseMin(config_.log_std_max);
}

Eigen::VectorXd PolicyNetwork::log_std_grad_mask() const {
  Eigen::VectorXd mask(log_std_raw_.size());
  for (int i = 0; i < log_std_raw_.size(); ++i) {
    mask[i] = (log_std_raw_[i] > config_.log_std_min &&
               log_std_raw_[i] < config_.log_std_max)
                  ? 1.0
                  : 0.0;
  }
  return mask;
}

PolicyNetwork::Grads PolicyNetwork::make_grads() const {
  Grads grads;
  grads.encoder = encoder_.make_grads();
  grads.actor = actor_.make_grads();
  grads.critic = critic_.make_grads();
  grads.log_std = Eigen::VectorXd::Zero(config_.action_dim);
  return grads;
}

int PolicyNetwork::param_count() const {
  return encoder_.param_count() + actor_.param_count() +
         critic_.param_count() + static_cast<int>(log_std_raw_.size());
}

Eigen::VectorXd PolicyNetwork::get_flat_params() const {
  Eigen::VectorXd flat(param_count());
  int offset = 0;
  const auto copy_out = [&](const auto& m) {
    flat.segment(offset, m.size()) =
        Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    offset += static_cast<int>(m.size());
  };
  for (const auto& net : {&encoder_, &actor_, &critic_})
    for (const auto& layer : net->layers()) {
      copy_out(layer.weight);
      copy_out(layer.bias);
    }
  copy_out(log_std_raw_);
  return flat;
}

void PolicyNetwork::set_flat_params(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count())
    throw HardFault("policy: flat parameter size mismatch");
  int offset = 0;
  const auto copy_in = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) =
        flat.segment(offset, m.size());
    offset += static_cast<int>(m.size());
  };
  for (auto* net : {&encoder_, &actor_, &critic_})
    for (auto& layer : net->layers()) {
      copy_in(layer.weight);
      copy_in(layer.bias);
    }
  copy_in(log_std_raw_);
}

Eigen::VectorXd PolicyNetwork::flatten_grads(const Grads& grads) {
  int total = static_cast<int>(grads.log_std.size());
  for (const auto* g : {&grads.encoder, &grads.actor, &grads.critic})
    for (const auto& layer : g->layers)
      total += static_cast<int>(layer.weight.size() + layer.bias.size());
  Eigen::VectorXd flat(total);
  int offset = 0;
  const auto copy_out = [&](const auto& m) {
    flat.segment(offset, m.size()) =
        Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    offset += static_cast<int>(m.size());
  };
  for (const auto* g : {&grads.encoder, &grads.actor, &grads.critic})
    for (const auto& layer : g->layers) {
      copy_out(layer.weight);
      copy_out(layer.bias);
    }
  copy_out(grads.log_std);
  return flat;
}

void PolicyNetwork::visit_tensors(
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn)
    const {
  for (std::size_t i = 0; i < encoder_.layers().size(); ++i) {
    fn("encoder.w" + std::to_string(i), encoder_.layers()[i].weight);
    fn("encoder.b" + std::to_string(i), encoder_.layers()[i].bias);
  }
  for (std::size_t i = 0; i < actor_.layers().size(); ++i) {
    fn("actor.w" + std::to_string(i), actor_.layers()[i].weight);
    fn("actor.b" + std::to_string(i), actor_.layers()[i].bias);
  }
  for (std::size_t i = 0; i < critic_.layers().size(); ++i) {
    fn("critic.w" + std::to_string(i), critic_.layers()[i].weight);
    fn("critic.b" + std::to_string(i), critic_.layers()[i].bias);
  }
  fn("log_std", log_std_raw_);
}

Eigen::VectorXd gaussian_log_prob(const Eigen::MatrixXd& mean,
                                  const Eigen::VectorXd& log_std,
                                  const Eigen::MatrixXd& actions) {
  const int dim = static_cast<int>(mean.cols());
  const double constant = -0.5 * dim * std::log(2.0 * M_PI);
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
  Eigen::VectorXd out(mean.rows());
  for (int i = 0; i < mean.rows(); ++i) {
    const Eigen::ArrayXd diff =
        (actions.row(i) - mean.row(i)).transpose().array();
    out[i] = constant - log_std.sum() - 0.5 * (diff.square() * inv_var).sum();
  }
  return out;
}

double gaussian_entropy(const Eigen::VectorXd& log_std) {
  const double per_dim = 0.5 * (1.0 + std::log(2.0 * M_PI));
  return log_std.sum() + per_dim * static_cast<double>(log_std.size());
}

}  // namespace pipegym
