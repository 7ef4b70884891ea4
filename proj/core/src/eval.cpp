#include "pipegym/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "pipegym/errors.hpp"

namespace pipegym {

EvalRow make_eval_row(const EvalCondition& condition,
                      const std::vector<EpisodeOutcome>& outcomes) {
  EvalRow row;
  row.condition = condition;
  double time_sum = 0.0;
  double speed_sum = 0.0;
  for (const EpisodeOutcome& outcome : outcomes) {
    if (!outcome.success) continue;
    ++row.successes;
    time_sum += outcome.completion_time;
    if (outcome.completion_time > 0.0)
      speed_sum += condition.pipe_length / outcome.completion_time;
  }
  row.success_rate =
      outcomes.empty()
          ? 0.0
          : static_cast<double>(row.successes) / outcomes.size();
  if (row.successes > 0) {
    row.mean_completion_time = time_sum / row.successes;
    row.mean_speed = speed_sum / row.successes;
  }
  return row;
}

EpisodeOutcome run_eval_episode(const PolicyNetwork& policy,
                                const Config& config,
                                const EvalCondition& condition,
                                std::uint64_t seed) {
  Config eval_config = config;
  eval_config.terrain.pipe_length = condition.pipe_length;
  eval_config.terrain.grid_rows = 1;
  eval_config.terrain.grid_cols = 1;
  eval_config.curriculum.max_level = 0;

  StageSpec stage;
  stage.id = condition.stage > 0 ? condition.stage : 1;
  stage.radius_min = condition.radius;
  stage.radius_max = condition.radius;
  stage.obstacles_enabled = condition.obstacles;

  auto grid = std::make_shared<TerrainGrid>(
      eval_config.grid_config(stage, seed));
  Environment env(eval_config.robot, eval_config.sim, eval_config.rewards,
                  grid, 0, seed);

  EpisodeOutcome outcome;
  std::optional<double> entry_time;
  const int max_steps = eval_config.sim.steps_per_episode() + 8;
  for (int step = 0; step < max_steps; ++step) {
    const ObservationBundle bundle = env.observe();
    const auto out = policy.evaluate(bundle.proprio.transpose(),
                                     bundle.privileged.transpose());
    const Vec12 action = out.mean.row(0).transpose();  // greedy
    const StepResult result = env.step(action);

    const auto& record = env.last_step_record();
    if (!entry_time &&
        record.state.base_position.x() >= env.spec().platform_length)
      entry_time = record.time;

    if (result.done) {
      outcome.success = result.reason == Termination::kSuccess;
      if (outcome.success)
        outcome.completion_time = record.time - entry_time.value_or(0.0);
      break;
    }
  }
  return outcome;
}

EvalReport run_eval(const PolicyNetwork& policy, const Config& config,
                    const std::vector<EvalCondition>& conditions,
                    std::uint64_t seed, int workers) {
  struct Job {
    int condition_index;
    int trial;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < conditions.size(); ++c)
    for (int trial = 0; trial < conditions[c].trials; ++trial)
      jobs.push_back({static_cast<int>(c), trial,
                      seed + 100003ull * c + static_cast<std::uint64_t>(trial)});

  std::vector<EpisodeOutcome> outcomes(jobs.size());
  const int worker_count =
      std::min<int>(resolve_worker_count(workers), std::max<std::size_t>(jobs.size(), 1));
  if (worker_count > 1) {
    std::vector<std::thread> threads;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < worker_count; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (std::size_t j = w; j < jobs.size(); j += worker_count)
            outcomes[j] = run_eval_episode(policy, config,
                                           conditions[jobs[j].condition_index],
                                           jobs[j].seed);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& thread : threads) thread.join();
    if (error) std::rethrow_exception(error);
  } else {
    for (std::size_t j = 0; j < jobs.size(); ++j)
      outcomes[j] = run_eval_episode(policy, config,
                                     conditions[jobs[j].condition_index],
                                     jobs[j].seed);
  }

  EvalReport report;
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    std::vector<EpisodeOutcome> condition_outcomes;
    for (std::size_t j = 0; j < jobs.size(); ++j)
      if (jobs[j].condition_index == static_cast<int>(c))
        condition_outcomes.push_back(outcomes[j]);
    report.rows.push_back(make_eval_row(conditions[c], condition_outcomes));
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "stage  radius_m  pipe_length_m  obstacles  trials  success_rate  "
         "completion_time_s  mean_speed_mps\n";
  for (const EvalRow& row : report.rows) {
    char line[160];
    char time_text[24] = "-";
    char speed_text[24] = "-";
    if (row.mean_completion_time)
      std::snprintf(time_text, sizeof(time_text), "%.2f",
                    *row.mean_completion_time);
    if (row.mean_speed)
      std::snprintf(speed_text, sizeof(speed_text), "%.3f", *row.mean_speed);
    std::snprintf(line, sizeof(line),
                  "%-5d  %-8.3f  %-13.1f  %-9s  %-6d  %6.2f%%       %-17s  %s\n",
                  row.condition.stage, row.condition.radius,
                  row.condition.pipe_length,
                  row.condition.obstacles ? "w" : "w/o", row.condition.trials,
                  100.0 * row.success_rate, time_text, speed_text);
    out << line;
  }
  return out.str();
}

}  // namespace pipegym
