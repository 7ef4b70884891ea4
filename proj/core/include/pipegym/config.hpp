#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pipegym/curriculum.hpp"
#include "pipegym/ppo.hpp"
#include "pipegym/reward.hpp"
#include "pipegym/robot.hpp"
#include "pipegym/sim.hpp"
#include "pipegym/terrain.hpp"

namespace pipegym {

struct TerrainConfig {
  double platform_length = 2.0;
  double pipe_length = 16.0;
  double sub_terrain_width = 4.0;
  double cell_size = 0.05;
  double entrance_lift = 0.1;
  double centerline_z = 0.0;
  int grid_rows = 10;
  int grid_cols = 40;
};

// Whole-run configuration; every key in the file format has a default.
struct Config {
  TerrainConfig terrain;
  RobotModel robot;
  RewardWeights rewards;
  CurriculumConfig curriculum;
  PpoConfig ppo;
  SimConfig sim;

  // Sub-terrain template from the [terrain] section (radius/seed/obstacles
  // are per grid cell).
  PipeWorldSpec base_spec() const;
  TerrainGridConfig grid_config(const StageSpec& stage,
                                std::uint64_t seed) const;
  void validate() const;
};

// INI-style file with sections [terrain], [robot], [rewards],
// [curriculum], [ppo], [sim]. Unknown sections or keys are errors;
// missing keys keep their defaults.
Config load_config(const std::filesystem::path& path);
void save_config(const Config& config, const std::filesystem::path& path);

// Canonical text form (fixed key order); basis of the config hash.
std::string serialize_config(const Config& config);
std::uint64_t config_hash(const Config& config);

}  // namespace pipegym
