#include "pipegym/reward.hpp"

#include <cmath>

#include "pipegym/errors.hpp"

namespace pipegym {

CenterlineSampler CenterlineSampler::default_sampler() {
  return {{-0.25, -0.15, -0.05, 0.05, 0.15, 0.25}};
}

double r_lin_vel(const Eigen::Vector3d& v_target,
                 const Eigen::Vector3d& v_current, double c_vel, double lambda,
                 double tracking_constant) {
  if (c_vel <= 0.0) throw ConfigError("r_lin_vel: c_vel must be > 0");
  return lambda * std::min(v_target.dot(v_current), c_vel) /
         (c_vel + tracking_constant);
}

double r_ang_vel(double yaw_rate_cmd, double yaw_rate, double lambda) {
  return lambda * std::exp(-std::abs(yaw_rate_cmd - yaw_rate));
}

double r_torque(const Vec12& torques, double lambda) {
  return -lambda * torques.squaredNorm();
}

double r_delta_torques(const Vec12& torques, const Vec12& prev_torques,
                       double lambda) {
  return -lambda * (torques - prev_torques).squaredNorm();
}

double r_dof_acc(const Vec12& dq, const Vec12& prev_dq, double dt,
                 double lambda) {
  if (dt <= 0.0) throw ConfigError("r_dof_acc: dt must be > 0");
  return -lambda * ((dq - prev_dq) / dt).squaredNorm();
}

double r_collision(std::span<const double> penalized_force_norms,
                   double threshold, double lambda) {
  int hits = 0;
  for (double force : penalized_force_norms)
    if (force > threshold) ++hits;
  return -lambda * hits;
}

double r_centerline(const Eigen::Vector3d& base_position,
                    const Eigen::Quaterniond& base_orientation,
                    const CenterlineSampler& sampler, double centerline_y,
                    double lambda) {
  if (sampler.sample_offsets.empty()) return 0.0;
  double distance_sum = 0.0;
  for (double offset : sampler.sample_offsets) {
    const Eigen::Vector3d point =
        base_position + base_orientation * Eigen::Vector3d(offset, 0.0, 0.0);
    distance_sum += std::abs(point.y() - centerline_y);
  }
  return -lambda * distance_sum /
         static_cast<double>(sampler.sample_offsets.size());
}

RewardBreakdown total_reward(const RobotState& state,
                             const RobotState& prev_state,
                             const Command& command, double dt,
                             const CenterlineSampler& sampler,
                             double centerline_y,
                             const RewardWeights& weights) {
  RewardBreakdown breakdown;

  const Eigen::Vector3d v_target = Eigen::Vector3d::UnitX();  // pipe axis
  const double c_vel = std::max(command[0], kCommandSpeedFloor);
  breakdown.lin_vel =
      r_lin_vel(v_target, state.base_linear_velocity, c_vel, weights.lin_vel);
  breakdown.ang_vel = r_ang_vel(command[2], state.angular_velocity_body().z(),
                                weights.ang_vel);
  breakdown.torque = r_torque(state.applied_torques, weights.torque);
  breakdown.delta_torques = r_delta_torques(
      state.applied_torques, prev_state.applied_torques, weights.delta_torques);
  breakdown.dof_acc = r_dof_acc(state.dq, prev_state.dq, dt, weights.dof_acc);

  std::array<double, 9> penalized{};
  penalized[0] = state.contact_forces[kContactBase].norm();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    penalized[1 + leg] = state.contact_forces[kContactKnee0 + leg].norm();
    penalized[5 + leg] = state.contact_forces[kContactHip0 + leg].norm();
  }
  breakdown.collision =
      r_collision(penalized, kCollisionForceThreshold, weights.collision);

  breakdown.centerline =
      r_centerline(state.base_position, state.base_orientation, sampler,
                   centerline_y, weights.centerline);

  breakdown.total = breakdown.sum();
  return breakdown;
}

}  // namespace pipegym
