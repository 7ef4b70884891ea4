#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "pipegym/errors.hpp"
#include "pipegym/sim.hpp"

using namespace pipegym;

namespace {

SimConfig quiet_sim() {
  SimConfig config;
  config.randomization.enabled = false;
  config.spawn_joint_noise = 0.0;
  config.spawn_velocity_noise = 0.0;
  config.spawn_joint_velocity_noise = 0.0;
  config.push_magnitude = 0.0;
  return config;
}

std::shared_ptr<TerrainGrid> platform_grid(double radius = 0.5) {
  TerrainGridConfig grid;
  grid.level_rows = 1;
  grid.columns = 1;
  grid.radius_min = grid.radius_max = radius;
  grid.seed = 1;
  return std::make_shared<TerrainGrid>(grid);
}

}  // namespace

TEST_CASE("default pose stands at the standing height") {
  const RobotModel model;
  const Eigen::Vector3d base(0, 0, model.standing_height);
  const auto feet = forward_kinematics(model, base,
                                       Eigen::Quaterniond::Identity(),
                                       model.default_pose());
  for (const auto& foot : feet) CHECK(std::abs(foot.z()) < 1e-3);
  // default pose respects the joint limits
  const Vec12 q = model.default_pose();
  const Vec12 lo = model.joint_lower_all();
  const Vec12 hi = model.joint_upper_all();
  for (int j = 0; j < kNumJoints; ++j) {
    CHECK(q[j] >= lo[j]);
    CHECK(q[j] <= hi[j]);
  }
}

TEST_CASE("folded leg ends at hip height minus the length difference") {
  RobotModel model;
  model.thigh_length = 0.25;
  model.calf_length = 0.20;
  Vec12 q = Vec12::Zero();
  q[2] = M_PI;  // calf folded fully back on the thigh
  const auto points = leg_points_base(model, q);
  CHECK(points[0].foot.z() ==
        doctest::Approx(-(model.thigh_length - model.calf_length))
            .epsilon(1e-12));
}

TEST_CASE("mirrored joint angles give y-mirrored foot positions") {
  const RobotModel model;
  Vec12 q = model.default_pose();
  q[0] = 0.3;   // FL abduction
  q[3] = -0.3;  // FR abduction mirrored
  const auto points = leg_points_base(model, q);
  CHECK(points[0].foot.x() == doctest::Approx(points[1].foot.x()).epsilon(1e-12));
  CHECK(points[0].foot.y() == doctest::Approx(-points[1].foot.y()).epsilon(1e-12));
  CHECK(points[0].foot.z() == doctest::Approx(points[1].foot.z()).epsilon(1e-12));
}

TEST_CASE("pd torques: the linear law, rest case and the clamp") {
  const RobotModel model;
  const Vec24 strength = Vec24::Ones();
  const Vec12 rest = model.default_pose();

  CHECK(pd_torques(model, rest, Vec12::Zero(), Vec12::Zero(), strength)
            .norm() == 0.0);

  Vec12 q = rest;
  q[1] -= 0.1;  // 0.1 rad position error
  const Vec12 tau = pd_torques(model, q, Vec12::Zero(), Vec12::Zero(), strength);
  CHECK(tau[1] == doctest::Approx(20.0 * 0.1).epsilon(1e-12));

  const Vec12 extreme =
      pd_torques(model, rest + Vec12::Constant(2.0), Vec12::Constant(50.0),
                 Vec12::Constant(5.0), strength);
  for (int j = 0; j < kNumJoints; ++j)
    CHECK(std::abs(extreme[j]) <= model.torque_limit);
}

TEST_CASE("motor strength scales the proportional term") {
  const RobotModel model;
  Vec24 strength = Vec24::Ones();
  strength[1] = 1.1;
  Vec12 q = model.default_pose();
  q[1] -= 0.1;
  const Vec12 tau = pd_torques(model, q, Vec12::Zero(), Vec12::Zero(), strength);
  CHECK(tau[1] == doctest::Approx(1.1 * 2.0).epsilon(1e-12));
}

TEST_CASE("dropped robot settles with the normal forces carrying the weight") {
  const RobotModel model;
  const SimConfig config = quiet_sim();
  EnvParams params;
  const auto grid = platform_grid();
  const auto field = grid->field(0, 0);

  RobotState state;
  state.base_position = Eigen::Vector3d(
      1.0, 0.0, grid->spec(0, 0).platform_height() + model.standing_height + 0.05);
  state.q = model.default_pose();

  std::vector<ContactRecord> audit;
  for (int step = 0; step < 200; ++step) {  // 1 s of substeps
    const Vec12 torques = pd_torques(model, state.q, state.dq, Vec12::Zero(),
                                     params.motor_strength);
    audit.clear();
    state = contact_step(model, config, params, *field, state, torques,
                         config.dt, &audit);
  }

  double normal_sum = 0.0;
  for (const ContactRecord& record : audit) {
    normal_sum += record.normal_force;
    CHECK(record.penetration < 0.02);  // soft non-penetration
  }
  const double weight = model.nominal_mass * 9.81;
  CHECK(normal_sum == doctest::Approx(weight).epsilon(0.02));
  // quaternion stays normalized
  CHECK(std::abs(state.base_orientation.norm() - 1.0) < 1e-9);
}

TEST_CASE("zero friction gives exactly zero tangential force") {
  const RobotModel model;
  const SimConfig config = quiet_sim();
  EnvParams params;
  params.foot_friction = 0.0;
  const auto grid = platform_grid();
  const auto field = grid->field(0, 0);

  RobotState state;
  state.base_position = Eigen::Vector3d(
      1.0, 0.0, grid->spec(0, 0).platform_height() + model.standing_height - 0.005);
  state.base_linear_velocity = Eigen::Vector3d(0.4, 0.2, 0.0);
  state.q = model.default_pose();

  std::vector<ContactRecord> audit;
  const Vec12 torques = Vec12::Zero();
  contact_step(model, config, params, *field, state, torques, config.dt,
               &audit);
  REQUIRE(!audit.empty());
  for (const ContactRecord& record : audit) CHECK(record.tangential_force == 0.0);
}

TEST_CASE("friction cone holds on random rollouts") {
  const RobotModel model;
  SimConfig config = quiet_sim();
  config.randomization.enabled = true;
  const RewardWeights weights;
  Environment env(model, config, weights, platform_grid(0.3), 0, 42);
  env.enable_contact_audit(true);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> act(-1.0, 1.0);
  for (int step = 0; step < 250; ++step) {
    Vec12 action;
    for (int j = 0; j < 12; ++j) action[j] = act(rng);
    env.step(action);
  }
  REQUIRE(env.contact_audit().size() > 100);
  for (const ContactRecord& record : env.contact_audit())
    CHECK(record.tangential_force <= record.mu * record.normal_force + 1e-9);
}

TEST_CASE("pushes are bounded and vanish at zero magnitude") {
  EnvParams params;
  params.push_magnitude = 0.0;
  RobotState state;
  state.base_linear_velocity = Eigen::Vector3d(0.3, 0.0, 0.0);
  std::mt19937_64 rng(2);
  apply_push(state, rng, params);
  CHECK(state.base_linear_velocity == Eigen::Vector3d(0.3, 0.0, 0.0));

  params.push_magnitude = 0.5;
  for (int trial = 0; trial < 100; ++trial) {
    RobotState fresh;
    apply_push(fresh, rng, params);
    CHECK(fresh.base_linear_velocity.norm() <= 0.5 + 1e-12);
    CHECK(fresh.base_linear_velocity.z() == 0.0);
  }
}

TEST_CASE("termination rules") {
  const RobotModel model;
  const auto grid = platform_grid(0.3);
  const auto field = grid->field(0, 0);
  const PipeWorldSpec& spec = grid->spec(0, 0);

  RobotState state;
  state.base_position = Eigen::Vector3d(1.0, 0.0, 0.4);

  SUBCASE("no trigger") {
    CHECK(!check_termination(state, *field, spec, 1.0, 20.0, 1.0, 1.0));
  }
  SUBCASE("beyond the pipe end is success") {
    state.base_position.x() = spec.x_end() + 0.01;
    auto reason = check_termination(state, *field, spec, 5.0, 20.0, 1.0, 1.0);
    REQUIRE(reason);
    CHECK(*reason == Termination::kSuccess);
  }
  SUBCASE("timeout at the horizon") {
    auto reason = check_termination(state, *field, spec, 20.0, 20.0, 1.0, 1.0);
    REQUIRE(reason);
    CHECK(*reason == Termination::kTimeout);
  }
  SUBCASE("upside-down on the platform is a fall") {
    state.base_orientation =
        Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitX()));
    auto reason = check_termination(state, *field, spec, 1.0, 20.0, 1.0, 1.0);
    REQUIRE(reason);
    CHECK(*reason == Termination::kFall);
  }
  SUBCASE("no axial progress over the window is stuck") {
    auto reason = check_termination(state, *field, spec, 6.0, 20.0, 0.01, 5.0);
    REQUIRE(reason);
    CHECK(*reason == Termination::kStuck);
  }
}

TEST_CASE("zero actions keep the robot standing for two seconds") {
  const RobotModel model;
  const SimConfig config = quiet_sim();
  Environment env(model, config, RewardWeights{}, platform_grid(), 0, 7);

  for (int step = 0; step < 100; ++step) {  // 2 s at 50 Hz
    const StepResult result = env.step(Vec12::Zero());
    CHECK(!result.done);
  }
  CHECK(env.state().base_position.z() ==
        doctest::Approx(env.spec().platform_height() + model.standing_height)
            .epsilon(0.25));
  CHECK(std::abs(env.state().roll()) < 0.1);
  CHECK(std::abs(env.state().pitch()) < 0.1);
}

TEST_CASE("batched environments are deterministic") {
  const RobotModel model;
  SimConfig config = quiet_sim();
  config.randomization.enabled = true;
  config.spawn_joint_noise = 0.05;
  config.push_magnitude = 0.5;

  BatchEnv a(model, config, RewardWeights{}, platform_grid(0.3), 4, 11, 1);
  BatchEnv b(model, config, RewardWeights{}, platform_grid(0.3), 4, 11, 2);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> act(-1.0, 1.0);
  for (int step = 0; step < 60; ++step) {
    std::vector<Vec12> actions(4);
    for (auto& action : actions)
      for (int j = 0; j < 12; ++j) action[j] = act(rng);
    const auto ra = a.step(actions);
    const auto rb = b.step(actions);
    for (int e = 0; e < 4; ++e) {
      CHECK(ra[e].reward.total == rb[e].reward.total);
      CHECK(ra[e].done == rb[e].done);
      CHECK((ra[e].observation.proprio - rb[e].observation.proprio).norm() ==
            0.0);
      CHECK(
          (ra[e].observation.privileged - rb[e].observation.privileged).norm() ==
          0.0);
    }
  }
  for (int e = 0; e < 4; ++e) {
    CHECK(a.env(e).state().base_position == b.env(e).state().base_position);
    CHECK(a.env(e).state().q == b.env(e).state().q);
  }
}

TEST_CASE("action batch size mismatch is a hard fault") {
  const RobotModel model;
  BatchEnv batch(model, quiet_sim(), RewardWeights{}, platform_grid(), 2, 1, 1);
  std::vector<Vec12> actions(3, Vec12::Zero());
  CHECK_THROWS_AS(batch.step(actions), HardFault);
}

TEST_CASE("done steps hand back a freshly reset observation") {
  const RobotModel model;
  SimConfig config = quiet_sim();
  config.episode_seconds = 0.2;  // 10 control steps
  Environment env(model, config, RewardWeights{}, platform_grid(), 0, 3);

  StepResult result;
  int steps = 0;
  do {
    result = env.step(Vec12::Zero());
    ++steps;
  } while (!result.done && steps < 50);
  REQUIRE(result.done);
  CHECK(result.reason == Termination::kTimeout);
  CHECK(env.elapsed() == 0.0);
  const ObservationBundle fresh = env.observe();
  CHECK((result.observation.proprio - fresh.proprio).norm() == 0.0);
}

TEST_CASE("episode stats are recorded and the curriculum updates") {
  const RobotModel model;
  SimConfig config = quiet_sim();
  config.episode_seconds = 0.2;
  Environment env(model, config, RewardWeights{}, platform_grid(), 0, 3);
  for (int step = 0; step < 25; ++step) env.step(Vec12::Zero());
  const auto episodes = env.drain_episodes();
  CHECK(episodes.size() >= 2);
  for (const EpisodeStats& ep : episodes) {
    CHECK(ep.reason == Termination::kTimeout);
    CHECK(!ep.success);
    CHECK(ep.steps == 10);
  }
  CHECK(env.drain_episodes().empty());
  // standing still demotes to (stays at) level zero
  CHECK(env.curriculum().level == 0);
}

TEST_CASE("energy never increases across steps while passive on flat ground") {
  const RobotModel model;
  const SimConfig config = quiet_sim();
  EnvParams params;
  const auto grid = platform_grid();
  const auto field = grid->field(0, 0);

  RobotState state;
  state.base_position = Eigen::Vector3d(
      1.0, 0.0, grid->spec(0, 0).platform_height() + model.standing_height + 0.02);
  state.q = model.default_pose();

  // kinetic + gravitational + contact-spring energy, all evaluated on the
  // post-step state; sampled per control step (the per-substep shadow
  // energy of the symplectic integrator oscillates within a band)
  const double mass = model.nominal_mass;
  const auto total_energy = [&](const RobotState& s) {
    double spring = 0.0;
    for (const auto& foot : s.foot_positions) {
      const double pen =
          std::max(0.0, field->height_at(foot.x(), foot.y()) - foot.z());
      spring += 0.5 * config.contact_stiffness * pen * pen;
    }
    const Eigen::Matrix3d inertia = model.base_inertia(mass);
    const Eigen::Vector3d omega_body =
        s.base_orientation.conjugate() * s.base_angular_velocity;
    return 0.5 * mass * s.base_linear_velocity.squaredNorm() +
           0.5 * omega_body.dot(inertia * omega_body) +
           mass * 9.81 * s.base_position.z() + spring;
  };

  double previous_energy = 1e300;
  for (int step = 0; step < 100; ++step) {
    for (int sub = 0; sub < config.decimation; ++sub)
      state = contact_step(model, config, params, *field, state, Vec12::Zero(),
                           config.dt);
    const double energy = total_energy(state);
    CHECK(energy <= previous_energy + 1e-9);
    previous_energy = energy;
  }
}

TEST_CASE("randomize_env honours the documented ranges") {
  std::mt19937_64 rng(9);
  RandomizationRanges ranges;
  for (int draw = 0; draw < 10000; ++draw) {
    const EnvParams params = randomize_env(rng, ranges);
    CHECK(params.foot_friction >= 0.6);
    CHECK(params.foot_friction <= 2.0);
    CHECK(params.added_base_mass >= 0.0);
    CHECK(params.added_base_mass <= 3.0);
    for (int i = 0; i < 24; ++i) {
      CHECK(params.motor_strength[i] >= 0.9);
      CHECK(params.motor_strength[i] <= 1.1);
    }
  }
  ranges.enabled = false;
  const EnvParams nominal = randomize_env(rng, ranges);
  CHECK(nominal.foot_friction == 1.0);
  CHECK(nominal.added_base_mass == 0.0);
  CHECK(nominal.motor_strength == Vec24::Ones());
}

TEST_CASE("ceiling contact pushes a too-tall robot down") {
  const RobotModel model;
  const SimConfig config = quiet_sim();
  EnvParams params;
  const auto grid = platform_grid(0.3);
  const auto field = grid->field(0, 0);

  RobotState state;
  // base top corner poking through the ceiling inside the pipe
  state.base_position = Eigen::Vector3d(9.0, 0.0, 0.28);
  state.q = model.default_pose();
  std::vector<ContactRecord> audit;
  state = contact_step(model, config, params, *field, state, Vec12::Zero(),
                       config.dt, &audit);
  bool base_hit = false;
  for (const ContactRecord& record : audit)
    base_hit = base_hit || record.body == kContactBase;
  CHECK(base_hit);
  CHECK(state.contact_forces[kContactBase].z() < 0.0);
}

TEST_CASE("stage handoff keeps the curriculum level") {
  const RobotModel model;
  SimConfig config = quiet_sim();
  TerrainGridConfig grid_config;
  grid_config.level_rows = 10;
  grid_config.columns = 2;
  grid_config.radius_min = 0.3;
  grid_config.radius_max = 0.5;
  grid_config.seed = 1;
  Environment env(model, config, RewardWeights{},
                  std::make_shared<TerrainGrid>(grid_config), 0, 5);
  env.set_curriculum({4, 9, 1});
  env.reset();
  CHECK(env.curriculum().level == 4);

  grid_config.radius_min = 0.2;
  grid_config.radius_max = 0.3;
  env.set_terrain(std::make_shared<TerrainGrid>(grid_config), 2);
  CHECK(env.curriculum().level == 4);  // warm start
  CHECK(env.curriculum().stage == 2);
  CHECK(env.spec().radius == doctest::Approx(0.3 - 0.1 * 4.0 / 9.0));
}
