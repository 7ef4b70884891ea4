#include "pipegym/trainer.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "pipegym/checkpoint.hpp"
#include "pipegym/errors.hpp"
#include "pipegym/observation.hpp"
#include "pipegym/trajectory.hpp"

namespace pipegym {

namespace {

std::string csv_num(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.10g", value);
  return buffer;
}

struct StageTable {
  std::vector<StageSpec> stages;
  std::vector<long> cumulative;  // end iteration of each stage (1-based)

  explicit StageTable(const std::vector<StageSpec>& list) : stages(list) {
    long sum = 0;
    for (const StageSpec& stage : stages) {
      sum += stage.iteration_budget;
      cumulative.push_back(sum);
    }
  }
  long total() const { return cumulative.back(); }
  const StageSpec& at_iteration(long iteration) const {
    for (std::size_t i = 0; i < cumulative.size(); ++i)
      if (iteration <= cumulative[i]) return stages[i];
    return stages.back();
  }
};

}  // namespace

TrainSummary train(const Config& config, const TrainOptions& options) {
  config.validate();
  const StageTable table(stage_schedule(config.curriculum));
  long total_iterations = table.total();
  if (options.max_iterations > 0)
    total_iterations = std::min<long>(total_iterations, options.max_iterations);

  std::filesystem::create_directories(options.out_dir / "checkpoints");
  const std::uint64_t cfg_hash = config_hash(config);
  save_config(config, options.out_dir / "config.ini");

  PolicyConfig policy_config;  // teacher dimensions (47 / 296 / 343)
  PolicyNetwork policy(policy_config, options.seed ^ 0x9E3779B97F4A7C15ull);
  AdamOptimizer optimizer(policy.param_count(), config.ppo.learning_rate);

  long start_iteration = 0;
  if (options.resume_checkpoint) {
    const Checkpoint checkpoint = load_checkpoint(*options.resume_checkpoint);
    if (checkpoint.config_hash != cfg_hash)
      throw ConfigError("resume: checkpoint was trained with a different config");
    restore_policy(checkpoint, policy);
    restore_optimizer(checkpoint, optimizer);
    start_iteration = static_cast<long>(checkpoint.iteration);
  }

  const StageSpec* current_stage = &table.at_iteration(start_iteration + 1);
  auto make_grid = [&](const StageSpec& stage) {
    return std::make_shared<TerrainGrid>(
        config.grid_config(stage, options.seed + 7919 * stage.id));
  };
  std::shared_ptr<TerrainGrid> grid = make_grid(*current_stage);

  BatchEnv batch(config.robot, config.sim, config.rewards, grid,
                 options.num_envs, options.seed, options.workers);
  for (int e = 0; e < batch.size(); ++e)
    batch.env(e).set_curriculum({0, config.curriculum.max_level,
                                 current_stage->id});
  batch.reset_all();

  const int num_envs = batch.size();
  Eigen::MatrixXd proprio(num_envs, kProprioDim);
  Eigen::MatrixXd privileged(num_envs, kPrivilegedDim);
  const auto refresh_observations = [&] {
    for (int e = 0; e < num_envs; ++e) {
      const ObservationBundle bundle = batch.env(e).observe();
      proprio.row(e) = bundle.proprio.transpose();
      privileged.row(e) = bundle.privileged.transpose();
    }
  };
  refresh_observations();

  const bool fresh_metrics =
      !options.resume_checkpoint ||
      !std::filesystem::exists(options.out_dir / "metrics.csv");
  std::ofstream metrics(options.out_dir / "metrics.csv",
                        fresh_metrics ? std::ios::trunc : std::ios::app);
  if (!metrics) throw IoError("cannot open metrics.csv for writing");
  if (fresh_metrics) {
    metrics << "iteration,stage,episodes,mean_return,mean_distance,"
               "mean_progress,success_rate,policy_loss,value_loss,entropy,"
               "approx_kl";
    for (int level = 0; level < config.terrain.grid_rows; ++level)
      metrics << ",level_" << level;
    metrics << '\n';
  }

  const bool fresh_rewards =
      !options.resume_checkpoint ||
      !std::filesystem::exists(options.out_dir / "rewards.csv");
  std::ofstream rewards_csv(options.out_dir / "rewards.csv",
                            fresh_rewards ? std::ios::trunc : std::ios::app);
  if (fresh_rewards) {
    rewards_csv << "env,episode,iteration,level,steps,distance,success,reason";
    for (const char* name : RewardBreakdown::term_names())
      rewards_csv << ',' << name;
    rewards_csv << ",total\n";
  }

  std::unique_ptr<TrajectoryWriter> trajectory;
  std::ofstream observation_trace;
  long trace_step = 0;
  if (options.dump_trajectory) {
    trajectory =
        std::make_unique<TrajectoryWriter>(options.out_dir / "trajectory.csv");
    observation_trace.open(options.out_dir / "observations.jsonl");
  }

  std::mt19937_64 action_rng(options.seed ^ 0xA5A5A5A5A5A5A5A5ull);
  std::mt19937_64 update_rng(options.seed ^ 0x5A5A5A5A5A5A5A5Aull);
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  RolloutBuffer buffer(config.ppo.horizon, num_envs, kProprioDim,
                       kPrivilegedDim, 12);
  std::vector<Vec12> actions(num_envs);

  TrainSummary summary;
  summary.metrics_path = options.out_dir / "metrics.csv";
  summary.rewards_path = options.out_dir / "rewards.csv";
  long episode_counter = 0;

  const auto save_at = [&](long iteration) {
    char name[32];
    std::snprintf(name, sizeof(name), "ckpt_%06ld.bin", iteration);
    const Checkpoint checkpoint =
        make_checkpoint(policy, optimizer, cfg_hash, iteration);
    save_checkpoint(options.out_dir / "checkpoints" / name, checkpoint);
    save_checkpoint(options.out_dir / "checkpoints" / "latest.bin", checkpoint);
    summary.checkpoint_path = options.out_dir / "checkpoints" / name;
  };

  long iteration = start_iteration;
  for (iteration = start_iteration + 1; iteration <= total_iterations;
       ++iteration) {
    const StageSpec& stage = table.at_iteration(iteration);
    if (stage.id != current_stage->id) {
      current_stage = &stage;
      grid = make_grid(stage);
      batch.set_terrain(grid, stage.id);
      refresh_observations();
    }

    // rollout
    for (int t = 0; t < config.ppo.horizon; ++t) {
      const auto out = policy.evaluate(proprio, privileged);
      const Eigen::VectorXd log_std = policy.log_std();
      const Eigen::ArrayXd sigma = log_std.array().exp();
      Eigen::MatrixXd action_matrix(num_envs, 12);
      for (int e = 0; e < num_envs; ++e) {
        for (int j = 0; j < 12; ++j)
          action_matrix(e, j) =
              out.mean(e, j) + sigma[j] * unit_normal(action_rng);
        actions[e] = action_matrix.row(e).transpose();
      }
      const Eigen::VectorXd logp =
          gaussian_log_prob(out.mean, log_std, action_matrix);

      for (int e = 0; e < num_envs; ++e) {
        const int r = buffer.row(t, e);
        buffer.proprio.row(r) = proprio.row(e);
        buffer.privileged.row(r) = privileged.row(e);
        buffer.actions.row(r) = action_matrix.row(e);
        buffer.log_probs[r] = logp[e];
        buffer.values[r] = out.value[e];
      }

      const std::vector<StepResult> results = batch.step(actions);
      std::vector<int> truncated;
      for (int e = 0; e < num_envs; ++e) {
        const int r = buffer.row(t, e);
        buffer.rewards[r] = results[e].reward.total;
        buffer.dones[r] = results[e].done ? 1 : 0;
        if (results[e].terminal_observation) truncated.push_back(e);
        proprio.row(e) = results[e].observation.proprio.transpose();
        privileged.row(e) = results[e].observation.privileged.transpose();
      }
      // bootstrap truncated (timed-out) episodes with the terminal value
      if (!truncated.empty()) {
        Eigen::MatrixXd t_proprio(truncated.size(), kProprioDim);
        Eigen::MatrixXd t_privileged(truncated.size(), kPrivilegedDim);
        for (std::size_t i = 0; i < truncated.size(); ++i) {
          const auto& obs = *results[truncated[i]].terminal_observation;
          t_proprio.row(i) = obs.proprio.transpose();
          t_privileged.row(i) = obs.privileged.transpose();
        }
        const auto terminal = policy.evaluate(t_proprio, t_privileged);
        for (std::size_t i = 0; i < truncated.size(); ++i)
          buffer.rewards[buffer.row(t, truncated[i])] +=
              config.ppo.gamma * terminal.value[i];
      }
      if (trajectory) {
        trajectory->write_step(batch.env(0), results[0].reward);
        write_observation_record(observation_trace, trace_step++,
                                 results[0].observation.proprio,
                                 results[0].observation.privileged);
      }
    }

    const auto bootstrap = policy.evaluate(proprio, privileged);
    buffer.compute_advantages(bootstrap.value, config.ppo.gamma,
                              config.ppo.gae_lambda);
    const UpdateStats stats =
        ppo_update(policy, optimizer, buffer, config.ppo, update_rng);

    // per-iteration metrics
    IterationMetrics m;
    m.iteration = static_cast<int>(iteration);
    m.stage = stage.id;
    m.policy_loss = stats.policy_loss;
    m.value_loss = stats.value_loss;
    m.entropy = stats.entropy;
    m.approx_kl = stats.approx_kl;
    m.level_histogram.assign(config.terrain.grid_rows, 0);
    double progress_sum = 0.0;
    for (int e = 0; e < num_envs; ++e) {
      progress_sum += batch.env(e).distance();
      const int level = batch.env(e).curriculum().level;
      if (level >= 0 && level < static_cast<int>(m.level_histogram.size()))
        ++m.level_histogram[level];
    }
    m.mean_progress = progress_sum / num_envs;

    double return_sum = 0.0, distance_sum = 0.0;
    int successes = 0;
    for (int e = 0; e < num_envs; ++e) {
      for (const EpisodeStats& ep : batch.env(e).drain_episodes()) {
        ++m.episodes;
        return_sum += ep.episode_return;
        distance_sum += ep.distance;
        successes += ep.success ? 1 : 0;
        rewards_csv << e << ',' << ++episode_counter << ','
                    << iteration << ',' << ep.level << ',' << ep.steps << ','
                    << csv_num(ep.distance) << ',' << (ep.success ? 1 : 0)
                    << ',' << termination_name(ep.reason);
        for (double term : ep.term_sums.terms())
          rewards_csv << ',' << csv_num(term);
        rewards_csv << ',' << csv_num(ep.term_sums.total) << '\n';
      }
    }
    if (m.episodes > 0) {
      m.mean_return = return_sum / m.episodes;
      m.mean_distance = distance_sum / m.episodes;
      m.success_rate = static_cast<double>(successes) / m.episodes;
    }

    metrics << m.iteration << ',' << m.stage << ',' << m.episodes << ','
            << csv_num(m.mean_return) << ',' << csv_num(m.mean_distance) << ','
            << csv_num(m.mean_progress) << ',' << csv_num(m.success_rate)
            << ',' << csv_num(m.policy_loss) << ',' << csv_num(m.value_loss)
            << ',' << csv_num(m.entropy) << ',' << csv_num(m.approx_kl);
    for (int count : m.level_histogram) metrics << ',' << count;
    metrics << '\n';
    metrics.flush();

    if (!options.quiet && iteration % 25 == 0) {
      std::cout << "iter " << iteration << "/" << total_iterations
                << " stage " << stage.id << " progress "
                << csv_num(m.mean_progress) << " m, return "
                << csv_num(m.mean_return) << ", success "
                << csv_num(m.success_rate) << std::endl;
    }

    if (options.checkpoint_every > 0 &&
        iteration % options.checkpoint_every == 0)
      save_at(iteration);

    if (options.on_iteration && !options.on_iteration(m)) {
      summary.stopped_early = true;
      break;
    }
  }
  const long last_iteration = std::min(iteration, total_iterations);
  save_at(last_iteration);
  summary.iterations = static_cast<int>(last_iteration - start_iteration);

  for (int e = 0; e < num_envs; ++e)
    summary.faults += batch.env(e).fault_count();
  return summary;
}

}  // namespace pipegym
