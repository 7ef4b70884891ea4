#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pipegym/config.hpp"
#include "pipegym/policy.hpp"
#include "pipegym/sim.hpp"

namespace pipegym {

struct EvalCondition {
  int stage = 0;  // informational, carried into the report
  double radius = 0.3;
  double pipe_length = 16.0;
  bool obstacles = false;
  int trials = 16;
};

struct EpisodeOutcome {
  bool success = false;
  double completion_time = 0.0;  // s, pipe entry to pipe exit
};

struct EvalRow {
  EvalCondition condition;
  int successes = 0;
  double success_rate = 0.0;  // successes / trials, exact
  std::optional<double> mean_completion_time;  // over successes only
  std::optional<double> mean_speed;            // pipe_length / time, averaged
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

// Aggregation used by both the live evaluator and synthetic checks.
EvalRow make_eval_row(const EvalCondition& condition,
                      const std::vector<EpisodeOutcome>& outcomes);

// One greedy-policy (mean action) episode on a fresh single-cell terrain;
// the seed drives terrain obstacles, domain randomization and the command.
EpisodeOutcome run_eval_episode(const PolicyNetwork& policy,
                                const Config& config,
                                const EvalCondition& condition,
                                std::uint64_t seed);

// trials episodes per condition with fresh per-trial seeds, in parallel
// workers; rows keep the condition order.
EvalReport run_eval(const PolicyNetwork& policy, const Config& config,
                    const std::vector<EvalCondition>& conditions,
                    std::uint64_t seed, int workers = 0);

std::string format_report(const EvalReport& report);

}  // namespace pipegym
