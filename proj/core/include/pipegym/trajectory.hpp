#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "pipegym/reward.hpp"
#include "pipegym/sim.hpp"

namespace pipegym {

// Per-step CSV dump of one environment: enough raw signals to recompute
// every reward term offline.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(const std::filesystem::path& path);

  static std::string header();

  // Call once per control step, after Environment::step().
  void write_step(const Environment& env, const RewardBreakdown& reward);

 private:
  std::ofstream out_;
  long step_ = 0;
};

struct ReplaySummary {
  long steps = 0;
  long episodes = 0;
  double distance = 0.0;    // summed net displacement per episode
  double mean_speed = 0.0;  // distance / simulated time
  RewardBreakdown term_sums;
  long mismatches = 0;

  bool ok() const { return mismatches == 0; }
};

// Recomputes the reward breakdown from the dumped raw signals and checks
// each term and the total against the logged columns.
ReplaySummary replay_check(const std::filesystem::path& path,
                           double tolerance = 1e-9);

}  // namespace pipegym
