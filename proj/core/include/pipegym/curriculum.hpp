#pragma once

#include <vector>

namespace pipegym {

// Per-agent difficulty bookkeeping. Levels index terrain rows.
struct CurriculumState {
  int level = 0;
  int max_level = 9;
  int stage = 1;
};

// One training stage: radius interval, obstacle switch, iteration budget.
struct StageSpec {
  int id = 1;
  double radius_min = 0.3;
  double radius_max = 0.5;
  bool obstacles_enabled = false;
  int iteration_budget = 15000;
};

struct CurriculumConfig {
  std::vector<StageSpec> stages;  // empty means the default three-stage schedule
  int max_level = 9;

  static CurriculumConfig defaults();
};

// Promotion distance threshold tau = v_x * T. Throws ConfigError on
// non-positive inputs.
double curriculum_threshold(double v_x, double episode_seconds);

// distance > 0.8*tau levels up, distance < 0.4*tau levels down, both
// clamped; the band in between leaves the level unchanged.
CurriculumState update_level(const CurriculumState& state, double distance,
                             double tau);

// Linear radius ramp: radius_max at level 0 down to radius_min at max_level.
double radius_for_level(const StageSpec& stage, int level, int max_level);

// Validated stage list; defaults follow the three-stage schedule
// ([0.3,0.5] 15000 iters, [0.2,0.3] 8000, [0.2,0.3]+obstacles 8000).
std::vector<StageSpec> stage_schedule(const CurriculumConfig& config);

}  // namespace pipegym
