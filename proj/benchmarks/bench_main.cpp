#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "pipegym/observation.hpp"
#include "pipegym/policy.hpp"
#include "pipegym/ppo.hpp"
#include "pipegym/sim.hpp"
#include "pipegym/terrain.hpp"

using namespace pipegym;

namespace {

PipeWorldSpec bench_spec() {
  PipeWorldSpec spec;
  spec.radius = 0.3;
  return spec;
}

std::shared_ptr<TerrainGrid> bench_grid() {
  TerrainGridConfig config;
  config.level_rows = 1;
  config.columns = 1;
  config.radius_min = config.radius_max = 0.3;
  config.seed = 1;
  return std::make_shared<TerrainGrid>(config);
}

}  // namespace

static void BM_HeightFieldBuild(benchmark::State& state) {
  const PipeWorldSpec spec = bench_spec();
  for (auto _ : state) benchmark::DoNotOptimize(HeightField::build(spec));
}
BENCHMARK(BM_HeightFieldBuild);

static void BM_BilinearLookup(benchmark::State& state) {
  const HeightField field = HeightField::build(bench_spec());
  double x = 3.0, y = -0.21;
  for (auto _ : state) {
    benchmark::DoNotOptimize(field.height_at(x, y));
    x += 0.013;
    if (x > 17.0) x = 2.1;
  }
}
BENCHMARK(BM_BilinearLookup);

static void BM_BidirectionalScan(benchmark::State& state) {
  const HeightField field = HeightField::build(bench_spec());
  const ScanGrid grid = ScanGrid::default_grid();
  RobotState robot;
  robot.base_position = Eigen::Vector3d(8.0, 0.0, -0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(scan_downwards(robot, field, grid));
    benchmark::DoNotOptimize(scan_upwards(robot, field, grid));
  }
}
BENCHMARK(BM_BidirectionalScan);

static void BM_ContactSubstep(benchmark::State& state) {
  const RobotModel model;
  const SimConfig config;
  EnvParams params;
  auto grid = bench_grid();
  const auto field = grid->field(0, 0);
  RobotState robot;
  robot.base_position = Eigen::Vector3d(
      1.0, 0.0, grid->spec(0, 0).platform_height() + model.standing_height);
  robot.q = model.default_pose();
  for (auto _ : state) {
    robot = contact_step(model, config, params, *field, robot, Vec12::Zero(),
                         config.dt);
    benchmark::DoNotOptimize(robot);
  }
}
BENCHMARK(BM_ContactSubstep);

static void BM_EnvStep(benchmark::State& state) {
  const RobotModel model;
  SimConfig config;
  config.randomization.enabled = false;
  Environment env(model, config, RewardWeights{}, bench_grid(), 0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(env.step(Vec12::Zero()));
}
BENCHMARK(BM_EnvStep);

static void BM_PolicyForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  PolicyNetwork policy(PolicyConfig{}, 5);
  Eigen::MatrixXd proprio = Eigen::MatrixXd::Random(batch, kProprioDim);
  Eigen::MatrixXd privileged = Eigen::MatrixXd::Random(batch, kPrivilegedDim);
  for (auto _ : state)
    benchmark::DoNotOptimize(policy.evaluate(proprio, privileged));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_PolicyForward)->Arg(1)->Arg(64)->Arg(256);

static void BM_Gae(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 1024;
  Eigen::VectorXd rewards(n), values(n), adv, ret;
  std::vector<std::uint8_t> dones(n, 0);
  for (int i = 0; i < n; ++i) {
    rewards[i] = u(rng);
    values[i] = u(rng);
  }
  for (auto _ : state) {
    gae(rewards, values, dones, 0.0, 0.99, 0.95, adv, ret);
    benchmark::DoNotOptimize(adv);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Gae);

BENCHMARK_MAIN();
