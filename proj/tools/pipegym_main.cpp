// pipegym command line: train policies, evaluate checkpoints, export
// terrain grids and audit trajectory dumps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pipegym/checkpoint.hpp"
#include "pipegym/config.hpp"
#include "pipegym/errors.hpp"
#include "pipegym/eval.hpp"
#include "pipegym/observation.hpp"
#include "pipegym/terrain.hpp"
#include "pipegym/trainer.hpp"
#include "pipegym/trajectory.hpp"

namespace {

using namespace pipegym;

Config load_or_default(const std::string& config_path) {
  if (config_path.empty()) {
    Config config;
    config.curriculum = CurriculumConfig::defaults();
    config.validate();
    return config;
  }
  return load_config(config_path);
}

EvalCondition parse_condition(const std::string& text, int default_trials) {
  EvalCondition condition;
  condition.trials = default_trials;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("bad --condition entry '" + item +
                        "', expected key=value");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      if (key == "radius")
        condition.radius = std::stod(value);
      else if (key == "length")
        condition.pipe_length = std::stod(value);
      else if (key == "obstacles")
        condition.obstacles = value == "1" || value == "true" || value == "w";
      else if (key == "stage")
        condition.stage = std::stoi(value);
      else if (key == "trials")
        condition.trials = std::stoi(value);
      else
        throw ConfigError("unknown condition key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad value '" + value + "' for condition key " + key);
    }
  }
  return condition;
}

int cmd_train(const std::string& config_path, const TrainOptions& options) {
  const Config config = load_or_default(config_path);
  const TrainSummary summary = train(config, options);
  std::cout << "training finished: " << summary.iterations << " iterations, "
            << summary.faults << " simulator faults\n"
            << "metrics: " << summary.metrics_path.string() << "\n"
            << "checkpoint: " << summary.checkpoint_path.string() << std::endl;
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint_path,
             const std::vector<std::string>& condition_args, int trials,
             int stage, std::uint64_t seed, const std::string& out_dir,
             int workers) {
  const Config config = load_or_default(config_path);

  PolicyNetwork policy(PolicyConfig{}, seed);
  AdamOptimizer optimizer(policy.param_count(), config.ppo.learning_rate);
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  if (checkpoint.config_hash != config_hash(config))
    throw ConfigError("eval: checkpoint was trained with a different config");
  restore_policy(checkpoint, policy);

  std::vector<EvalCondition> conditions;
  for (const std::string& text : condition_args)
    conditions.push_back(parse_condition(text, trials));
  if (conditions.empty()) {
    EvalCondition base;
    base.stage = stage;
    base.pipe_length = config.terrain.pipe_length;
    base.trials = trials;
    base.radius = 0.3;
    base.obstacles = false;
    conditions.push_back(base);
    base.radius = 0.2;
    conditions.push_back(base);
    base.obstacles = true;
    conditions.push_back(base);
  }

  const EvalReport report = run_eval(policy, config, conditions, seed, workers);
  const std::string text = format_report(report);
  std::cout << text;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "report.txt");
    out << text;
  }
  return 0;
}

int cmd_export_terrain(const std::string& config_path, const std::string& out,
                       double radius, bool obstacles, bool depth,
                       std::uint64_t seed) {
  const Config config = load_or_default(config_path);
  PipeWorldSpec spec = config.base_spec();
  spec.radius = radius;
  spec.seed = seed;
  if (obstacles) {
    std::mt19937_64 rng(seed);
    spec.obstacles = sample_obstacles(rng, spec);
  }
  const HeightField field = HeightField::build(spec);
  const std::filesystem::path base(out);
  field.save_grid(base.string() + ".grid.txt");
  field.save_pgm(base.string() + ".pgm");
  std::cout << "wrote " << base.string() << ".grid.txt (" << field.rows()
            << "x" << field.cols() << ") and " << base.string() << ".pgm"
            << std::endl;
  if (depth) {
    // debug view from a robot standing a third of the way in
    RobotState state;
    state.base_position = Eigen::Vector3d(
        spec.platform_length + spec.pipe_length / 3.0, spec.centerline_y,
        spec.platform_height() + config.robot.standing_height);
    const DepthImage image = render_depth(state, field, CameraModel{});
    save_pgm(image, base.string() + ".depth.pgm");
    std::cout << "wrote " << base.string() << ".depth.pgm (" << image.rows
              << "x" << image.cols << ")" << std::endl;
  }
  return 0;
}

int cmd_replay(const std::string& dump_path) {
  const ReplaySummary summary = replay_check(dump_path);
  std::printf("steps: %ld\nepisodes: %ld\ndistance: %.4f m\n"
              "mean speed: %.4f m/s\n",
              summary.steps, summary.episodes, summary.distance,
              summary.mean_speed);
  const auto terms = summary.term_sums.terms();
  const auto names = RewardBreakdown::term_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    std::printf("sum %-14s % .6f\n", names[i], terms[i]);
  std::printf("sum total          % .6f\n", summary.term_sums.total);
  if (!summary.ok()) {
    std::fprintf(stderr, "replay: %ld reward mismatches detected\n",
                 summary.mismatches);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pipegym: RL training harness for quadrupedal pipe traversal"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int envs = 64;
  int workers = 0;
  app.add_option("--config", config_path, "config file (INI sections)");
  app.add_option("--seed", seed, "global random seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--envs", envs, "number of parallel environments");
  app.add_option("--workers", workers,
                 "worker threads (0 = auto, capped by PIPEGYM_THREADS)");

  auto* train_cmd = app.add_subcommand("train", "train a policy");
  int iterations = 0;
  int checkpoint_every = 200;
  bool dump_trajectory = false;
  bool quiet = false;
  std::string resume;
  train_cmd->add_option("--iterations", iterations,
                        "cap total iterations (0 = full stage budgets)");
  train_cmd->add_option("--checkpoint-every", checkpoint_every,
                        "checkpoint interval in iterations");
  train_cmd->add_option("--resume", resume, "checkpoint to resume from");
  train_cmd->add_flag("--dump-trajectory", dump_trajectory,
                      "write a per-step trajectory dump for env 0");
  train_cmd->add_flag("--quiet", quiet, "suppress progress lines");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint_path;
  std::vector<std::string> condition_args;
  int trials = 16;
  int stage = 0;
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("--condition", condition_args,
                       "condition spec, e.g. radius=0.3,obstacles=0,length=16");
  eval_cmd->add_option("--trials", trials, "episodes per condition");
  eval_cmd->add_option("--stage", stage, "training stage label for the report");

  auto* export_cmd =
      app.add_subcommand("export-terrain", "write a heightfield grid + preview");
  std::string export_out = "terrain";
  double radius = 0.5;
  bool with_obstacles = false;
  bool with_depth = false;
  export_cmd->add_option("--out-prefix", export_out,
                         "output path prefix (.grid.txt and .pgm)");
  export_cmd->add_option("--radius", radius, "pipe radius in metres");
  export_cmd->add_flag("--obstacles", with_obstacles, "sample random obstacles");
  export_cmd->add_flag("--depth", with_depth,
                       "also render a depth-camera preview from inside");

  auto* replay_cmd =
      app.add_subcommand("replay", "audit a trajectory dump offline");
  std::string dump_path;
  replay_cmd->add_option("--dump", dump_path, "trajectory csv")->required();

  try {
    app.parse(argc, argv);

    if (*train_cmd) {
      TrainOptions options;
      options.out_dir = out_dir;
      options.seed = seed;
      options.num_envs = envs;
      options.workers = workers;
      options.max_iterations = iterations;
      options.checkpoint_every = checkpoint_every;
      options.dump_trajectory = dump_trajectory;
      options.quiet = quiet;
      if (!resume.empty()) options.resume_checkpoint = resume;
      return cmd_train(config_path, options);
    }
    if (*eval_cmd)
      return cmd_eval(config_path, checkpoint_path, condition_args, trials,
                      stage, seed, out_dir, workers);
    if (*export_cmd)
      return cmd_export_terrain(config_path, export_out, radius,
                                with_obstacles, with_depth, seed);
    if (*replay_cmd) return cmd_replay(dump_path);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const HardFault& e) {
    std::fprintf(stderr, "pipegym: hard fault: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pipegym: %s\n", e.what());
    return 2;
  }
  return 2;
}
