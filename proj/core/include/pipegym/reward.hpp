#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "pipegym/observation.hpp"
#include "pipegym/robot.hpp"

namespace pipegym {

// Multipliers for the seven reward terms; defaults are the training values.
struct RewardWeights {
  double lin_vel = 1.5;
  double ang_vel = 0.5;
  double torque = 1e-5;
  double delta_torques = 1e-7;
  double dof_acc = 2.5e-7;
  double collision = 10.0;
  double centerline = 0.3;
};

inline constexpr double kTrackingConstant = 1e-5;  // C in the lin-vel term
inline constexpr double kCommandSpeedFloor = 0.1;  // m/s
inline constexpr double kCollisionForceThreshold = 1.0;  // N

// Weighted value of each term plus their sum. total is always the exact
// floating-point sum of the seven entries in declaration order.
struct RewardBreakdown {
  double lin_vel = 0.0;
  double ang_vel = 0.0;
  double torque = 0.0;
  double delta_torques = 0.0;
  double dof_acc = 0.0;
  double collision = 0.0;
  double centerline = 0.0;
  double total = 0.0;

  double sum() const {
    return lin_vel + ang_vel + torque + delta_torques + dof_acc + collision +
           centerline;
  }

  static constexpr std::array<const char*, 7> term_names() {
    return {"lin_vel", "ang_vel",   "torque",    "delta_torques",
            "dof_acc", "collision", "centerline"};
  }
  std::array<double, 7> terms() const {
    return {lin_vel, ang_vel,   torque,    delta_torques,
            dof_acc, collision, centerline};
  }
};

// Points along the base longitudinal axis used for the centerline penalty.
struct CenterlineSampler {
  std::vector<double> sample_offsets;  // m, symmetric about the base center

  static CenterlineSampler default_sampler();  // +-{0.05, 0.15, 0.25}
};

// lambda * min(v_target . v_current, c_vel) / (c_vel + C).
// Throws ConfigError when c_vel <= 0.
double r_lin_vel(const Eigen::Vector3d& v_target,
                 const Eigen::Vector3d& v_current, double c_vel, double lambda,
                 double tracking_constant = kTrackingConstant);

// lambda * exp(-|yaw_rate_cmd - yaw_rate|).
double r_ang_vel(double yaw_rate_cmd, double yaw_rate, double lambda);

// -lambda * sum tau_i^2.
double r_torque(const Vec12& torques, double lambda);

// -lambda * sum (tau_i[t] - tau_i[t-1])^2, per joint across control steps.
double r_delta_torques(const Vec12& torques, const Vec12& prev_torques,
                       double lambda);

// -lambda * sum ((dq_i - dq_i_prev)/dt)^2. Throws ConfigError when dt <= 0.
double r_dof_acc(const Vec12& dq, const Vec12& prev_dq, double dt,
                 double lambda);

// -lambda * count of penalized bodies whose contact force exceeds the
// threshold.
double r_collision(std::span<const double> penalized_force_norms,
                   double threshold, double lambda);

// -lambda * mean lateral distance |y_i - centerline_y| of the sampled
// base points.
double r_centerline(const Eigen::Vector3d& base_position,
                    const Eigen::Quaterniond& base_orientation,
                    const CenterlineSampler& sampler, double centerline_y,
                    double lambda);

// All seven terms from one control step. prev_state supplies the previous
// step's torques and joint velocities (zeroed at episode start).
RewardBreakdown total_reward(const RobotState& state,
                             const RobotState& prev_state,
                             const Command& command, double dt,
                             const CenterlineSampler& sampler,
                             double centerline_y, const RewardWeights& weights);

}  // namespace pipegym
