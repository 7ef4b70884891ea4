#include "pipegym/curriculum.hpp"

#include <algorithm>

#include "pipegym/errors.hpp"

namespace pipegym {

CurriculumConfig CurriculumConfig::defaults() {
  CurriculumConfig config;
  config.stages = {
      {1, 0.3, 0.5, false, 15000},
      {2, 0.2, 0.3, false, 8000},
      {3, 0.2, 0.3, true, 8000},
  };
  config.max_level = 9;
  return config;
}

double curriculum_threshold(double v_x, double episode_seconds) {
  if (v_x <= 0.0) throw ConfigError("curriculum threshold: v_x must be > 0");
  if (episode_seconds <= 0.0)
    throw ConfigError("curriculum threshold: episode length must be > 0");
  return v_x * episode_seconds;
}

CurriculumState update_level(const CurriculumState& state, double distance,
                             double tau) {
  CurriculumState next = state;
  if (distance > 0.8 * tau) {
    next.level = std::min(state.level + 1, state.max_level);
  } else if (distance < 0.4 * tau) {
    next.level = std::max(state.level - 1, 0);
  }
  return next;
}

double radius_for_level(const StageSpec& stage, int level, int max_level) {
  if (max_level <= 0) return stage.radius_max;
  const double t = static_cast<double>(std::clamp(level, 0, max_level)) /
                   static_cast<double>(max_level);
  return stage.radius_max - (stage.radius_max - stage.radius_min) * t;
}

std::vector<StageSpec> stage_schedule(const CurriculumConfig& config) {
  std::vector<StageSpec> stages =
      config.stages.empty() ? CurriculumConfig::defaults().stages : config.stages;
  for (const StageSpec& stage : stages) {
    if (stage.radius_min <= 0.0 || stage.radius_min > stage.radius_max)
      throw ConfigError("stage " + std::to_string(stage.id) +
                        ": empty or invalid radius interval");
    if (stage.iteration_budget <= 0)
      throw ConfigError("stage " + std::to_string(stage.id) +
                        ": iteration budget must be > 0");
  }
  return stages;
}

}  // namespace pipegym
