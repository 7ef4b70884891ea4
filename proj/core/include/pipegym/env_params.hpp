#pragma once

#include <random>

#include <Eigen/Core>

#include "pipegym/robot.hpp"

namespace pipegym {

// Per-episode physical parameters, drawn by domain randomization and
// surfaced to the privileged observation.
struct EnvParams {
  double foot_friction = 1.0;              // randomized mu, used off-pipe
  double added_base_mass = 0.0;            // kg
  Eigen::Vector3d com_offset{0, 0, 0};     // m, CoM relative to geometric center
  Vec24 motor_strength = Vec24::Ones();    // 12 kp + 12 kd multipliers
  double pipe_wall_static_friction = 0.2;  // fixed inside the pipe section
  double pipe_wall_dynamic_friction = 0.1;
  double push_interval = 8.0;   // s
  double push_magnitude = 0.5;  // m/s

  // e_t = [mass(4) | friction(1) | motor strength(24)]
  Eigen::Matrix<double, 29, 1> environment_vector() const;
};

struct RandomizationRanges {
  double friction_min = 0.6;
  double friction_max = 2.0;
  double added_mass_max = 3.0;
  double com_offset_max = 0.03;
  double motor_strength_min = 0.9;
  double motor_strength_max = 1.1;
  bool enabled = true;
};

// Draws one episode's parameters. Disabled ranges return nominal values.
EnvParams randomize_env(std::mt19937_64& rng, const RandomizationRanges& ranges);

}  // namespace pipegym
