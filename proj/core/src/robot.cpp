#include "pipegym/robot.hpp"

#include <cmath>

namespace pipegym {

Vec12 RobotModel::default_pose() const {
  const double reach = thigh_length + calf_length;
  const double thigh = std::acos(std::min(1.0, standing_height / reach));
  Vec12 pose;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    pose[3 * leg + 0] = 0.0;
    pose[3 * leg + 1] = thigh;
    pose[3 * leg + 2] = -2.0 * thigh;
  }
  return pose;
}

Vec12 RobotModel::joint_lower_all() const {
  Vec12 lower;
  for (int leg = 0; leg < kNumLegs; ++leg)
    lower.segment<3>(3 * leg) = joint_lower;
  return lower;
}

Vec12 RobotModel::joint_upper_all() const {
  Vec12 upper;
  for (int leg = 0; leg < kNumLegs; ++leg)
    upper.segment<3>(3 * leg) = joint_upper;
  return upper;
}

Eigen::Matrix3d RobotModel::base_inertia(double mass) const {
  const double lx = base_length, ly = base_width, lz = base_height;
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();
  inertia(0, 0) = mass / 12.0 * (ly * ly + lz * lz);
  inertia(1, 1) = mass / 12.0 * (lx * lx + lz * lz);
  inertia(2, 2) = mass / 12.0 * (lx * lx + ly * ly);
  return inertia;
}

std::array<LegPoints, kNumLegs> leg_points_base(const RobotModel& model,
                                                const Vec12& q) {
  std::array<LegPoints, kNumLegs> points;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const double side = RobotModel::leg_side(leg);
    const double front = RobotModel::leg_front(leg);
    const double abd = q[3 * leg + 0];
    const double thigh = q[3 * leg + 1];
    const double calf = q[3 * leg + 2];

    const Eigen::Vector3d hip(front * model.hip_offset_x,
                              side * model.hip_offset_y, 0.0);
    const Eigen::AngleAxisd roll(abd, Eigen::Vector3d::UnitX());
    const Eigen::Vector3d lateral(0.0, side * model.abduction_link, 0.0);

    const Eigen::Vector3d knee_plane(-model.thigh_length * std::sin(thigh), 0.0,
                                     -model.thigh_length * std::cos(thigh));
    const Eigen::Vector3d foot_plane(
        knee_plane.x() - model.calf_length * std::sin(thigh + calf), 0.0,
        knee_plane.z() - model.calf_length * std::cos(thigh + calf));

    points[leg].hip = hip;
    points[leg].knee = hip + roll * (lateral + knee_plane);
    points[leg].foot = hip + roll * (lateral + foot_plane);
  }
  return points;
}

std::array<Eigen::Vector3d, kNumLegs> forward_kinematics(
    const RobotModel& model, const Eigen::Vector3d& base_position,
    const Eigen::Quaterniond& base_orientation, const Vec12& q) {
  const auto points = leg_points_base(model, q);
  std::array<Eigen::Vector3d, kNumLegs> feet;
  for (int leg = 0; leg < kNumLegs; ++leg)
    feet[leg] = base_position + base_orientation * points[leg].foot;
  return feet;
}

Vec12 pd_torques(const RobotModel& model, const Vec12& q, const Vec12& dq,
                 const Vec12& action, const Vec24& motor_strength) {
  const Vec12 target =
      model.default_pose() +
      action.cwiseMax(-1.0).cwiseMin(1.0) * model.action_scale;
  Vec12 tau;
  for (int j = 0; j < kNumJoints; ++j) {
    tau[j] = model.kp * motor_strength[j] * (target[j] - q[j]) -
             model.kd * motor_strength[12 + j] * dq[j];
  }
  return tau.cwiseMax(-model.torque_limit).cwiseMin(model.torque_limit);
}

double RobotState::roll() const {
  const Eigen::Quaterniond& rot = base_orientation;
  return std::atan2(2.0 * (rot.w() * rot.x() + rot.y() * rot.z()),
                    1.0 - 2.0 * (rot.x() * rot.x() + rot.y() * rot.y()));
}

double RobotState::pitch() const {
  const Eigen::Quaterniond& rot = base_orientation;
  const double s = 2.0 * (rot.w() * rot.y() - rot.z() * rot.x());
  return std::asin(std::clamp(s, -1.0, 1.0));
}

bool RobotState::finite() const {
  return base_position.allFinite() && base_linear_velocity.allFinite() &&
         base_angular_velocity.allFinite() && q.allFinite() &&
         dq.allFinite() && applied_torques.allFinite() &&
         base_orientation.coeffs().allFinite();
}

}  // namespace pipegym
