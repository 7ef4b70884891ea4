#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pipegym/config.hpp"
#include "pipegym/sim.hpp"

namespace pipegym {

struct IterationMetrics {
  int iteration = 0;
  int stage = 1;
  int episodes = 0;            // completed this iteration
  double mean_return = 0.0;    // over episodes completed this iteration
  double mean_distance = 0.0;  // over episodes completed this iteration
  double mean_progress = 0.0;  // live net displacement averaged over envs
  double success_rate = 0.0;   // over episodes completed this iteration
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  std::vector<int> level_histogram;
};

struct TrainOptions {
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  int num_envs = 64;
  int workers = 0;          // 0 = auto (hardware, capped by PIPEGYM_THREADS)
  int max_iterations = 0;   // 0 = run the full stage budgets
  int checkpoint_every = 200;
  bool quiet = false;
  bool dump_trajectory = false;  // env 0, trajectory.csv in out_dir
  std::optional<std::filesystem::path> resume_checkpoint;
  // Return false to stop training early (used by smoke checks).
  std::function<bool(const IterationMetrics&)> on_iteration;
};

struct TrainSummary {
  int iterations = 0;
  std::filesystem::path metrics_path;
  std::filesystem::path rewards_path;
  std::filesystem::path checkpoint_path;
  int faults = 0;
  bool stopped_early = false;
};

// Full training loop: rollout collection, GAE, PPO updates, the staged
// terrain schedule, metrics/rewards CSVs and periodic checkpoints.
// Throws ConfigError for bad configs; simulator faults are counted and
// surfaced in the summary.
TrainSummary train(const Config& config, const TrainOptions& options);

}  // namespace pipegym
