#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pipegym {

inline constexpr int kNumLegs = 4;
inline constexpr int kNumJoints = 12;

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Vec24 = Eigen::Matrix<double, 24, 1>;

// Contact bodies tracked by the simulator. Feet carry normal locomotion
// contact; base, hips and knees form the penalized set for the collision
// reward.
enum ContactBody : int {
  kContactBase = 0,
  kContactFoot0 = 1,  // 1..4
  kContactKnee0 = 5,  // 5..8, calf contact point
  kContactHip0 = 9,   // 9..12, thigh contact point
  kNumContactBodies = 13,
};

// Go2-like surrogate: rigid base, four massless 3-DOF legs
// (abduction, thigh, calf) with point feet.
struct RobotModel {
  double base_length = 0.38;      // m
  double base_width = 0.31;       // m
  double base_height = 0.12;      // m
  double standing_height = 0.4;   // m, base center over ground at default pose
  double hip_offset_x = 0.19;     // m
  double hip_offset_y = 0.05;     // m
  double abduction_link = 0.10;   // m, lateral offset of the leg plane
  double thigh_length = 0.213;    // m
  double calf_length = 0.213;     // m
  double nominal_mass = 15.0;     // kg (base; legs are massless)
  double rotor_inertia = 0.01;    // kg m^2 per joint
  double kp = 20.0;               // N m / rad
  double kd = 0.5;                // N m s / rad
  double torque_limit = 23.7;     // N m
  double action_scale = 0.25;     // rad per unit action
  double knee_radius = 0.03;      // m, calf contact sphere
  double hip_radius = 0.04;       // m, thigh contact sphere

  // per-joint-type limits: abduction, thigh, calf
  Eigen::Vector3d joint_lower{-0.8, -1.57, -2.72};
  Eigen::Vector3d joint_upper{0.8, 3.49, -0.30};

  // Joint order: FL, FR, RL, RR; (abduction, thigh, calf) per leg.
  // Thigh/calf angles are solved so the default pose stands exactly at
  // standing_height.
  Vec12 default_pose() const;

  Vec12 joint_lower_all() const;
  Vec12 joint_upper_all() const;

  // +1 for left legs (FL, RL), -1 for right legs.
  static double leg_side(int leg) { return (leg == 0 || leg == 2) ? 1.0 : -1.0; }
  // +1 for front legs, -1 for rear legs.
  static double leg_front(int leg) { return (leg == 0 || leg == 1) ? 1.0 : -1.0; }

  // Base box inertia for the given total mass.
  Eigen::Matrix3d base_inertia(double mass) const;
};

struct LegPoints {
  Eigen::Vector3d hip;
  Eigen::Vector3d knee;
  Eigen::Vector3d foot;
};

// Leg chain points in the base (geometric center) frame.
std::array<LegPoints, kNumLegs> leg_points_base(const RobotModel& model,
                                                const Vec12& q);

// World-frame foot positions for a base pose given by the geometric
// center position and orientation.
std::array<Eigen::Vector3d, kNumLegs> forward_kinematics(
    const RobotModel& model, const Eigen::Vector3d& base_position,
    const Eigen::Quaterniond& base_orientation, const Vec12& q);

// PD joint torques toward default_pose + action * action_scale, with
// per-joint kp/kd strength multipliers, clamped to the torque limit.
Vec12 pd_torques(const RobotModel& model, const Vec12& q, const Vec12& dq,
                 const Vec12& action, const Vec24& motor_strength);

// Full simulator state of one robot.
struct RobotState {
  Eigen::Vector3d base_position{0, 0, 0};  // CoM, world
  Eigen::Quaterniond base_orientation{1, 0, 0, 0};
  Eigen::Vector3d base_linear_velocity{0, 0, 0};   // world
  Eigen::Vector3d base_angular_velocity{0, 0, 0};  // world
  Vec12 q = Vec12::Zero();
  Vec12 dq = Vec12::Zero();
  Vec12 applied_torques = Vec12::Zero();
  std::array<Eigen::Vector3d, kNumLegs> foot_positions{};
  std::array<Eigen::Vector3d, kNumContactBodies> contact_forces{};

  // roll/pitch (ZYX convention) of the base orientation
  double roll() const;
  double pitch() const;

  Eigen::Vector3d angular_velocity_body() const {
    return base_orientation.conjugate() * base_angular_velocity;
  }
  Eigen::Vector3d gravity_body() const {
    return base_orientation.conjugate() * Eigen::Vector3d(0, 0, -1);
  }

  bool finite() const;
};

}  // namespace pipegym
