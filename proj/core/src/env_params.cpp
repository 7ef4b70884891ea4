#include "pipegym/env_params.hpp"

namespace pipegym {

Eigen::Matrix<double, 29, 1> EnvParams::environment_vector() const {
  Eigen::Matrix<double, 29, 1> env_vec;
  env_vec[0] = added_base_mass;
  env_vec.segment<3>(1) = com_offset;
  env_vec[4] = foot_friction;
  env_vec.segment<24>(5) = motor_strength;
  return env_vec;
}

EnvParams randomize_env(std::mt19937_64& rng,
                        const RandomizationRanges& ranges) {
  EnvParams params;
  if (!ranges.enabled) return params;

  std::uniform_real_distribution<double> friction(ranges.friction_min,
                                                  ranges.friction_max);
  std::uniform_real_distribution<double> mass(0.0, ranges.added_mass_max);
  std::uniform_real_distribution<double> com(-ranges.com_offset_max,
                                             ranges.com_offset_max);
  std::uniform_real_distribution<double> strength(ranges.motor_strength_min,
                                                  ranges.motor_strength_max);
  params.foot_friction = friction(rng);
  params.added_base_mass = mass(rng);
  for (int i = 0; i < 3; ++i) params.com_offset[i] = com(rng);
  for (int i = 0; i < 24; ++i) params.motor_strength[i] = strength(rng);
  return params;
}

}  // namespace pipegym
