#include <doctest.h>

#include <cmath>
#include <random>

#include "pipegym/errors.hpp"
#include "pipegym/reward.hpp"

using namespace pipegym;

namespace {

// straight-line re-implementation of the seven terms, kept independent of
// reward.cpp on purpose
namespace oracle {

double lin_vel(const Eigen::Vector3d& vt, const Eigen::Vector3d& vc,
               double c_vel, double w) {
  const double dot = vt[0] * vc[0] + vt[1] * vc[1] + vt[2] * vc[2];
  return w * std::min(dot, c_vel) / (c_vel + 1e-5);
}
double ang_vel(double cmd, double actual, double w) {
  return w * std::exp(-std::fabs(cmd - actual));
}
double torque(const Vec12& tau, double w) {
  double s = 0;
  for (int i = 0; i < 12; ++i) s += tau[i] * tau[i];
  return -w * s;
}
double delta_torques(const Vec12& tau, const Vec12& prev, double w) {
  double s = 0;
  for (int i = 0; i < 12; ++i) s += (tau[i] - prev[i]) * (tau[i] - prev[i]);
  return -w * s;
}
double dof_acc(const Vec12& dq, const Vec12& prev, double dt, double w) {
  double s = 0;
  for (int i = 0; i < 12; ++i) {
    const double a = (dq[i] - prev[i]) / dt;
    s += a * a;
  }
  return -w * s;
}
double collision(const std::vector<double>& forces, double threshold, double w) {
  int n = 0;
  for (double f : forces)
    if (f > threshold) ++n;
  return -w * n;
}
double centerline(const Eigen::Vector3d& pos, const Eigen::Quaterniond& rot,
                  const std::vector<double>& offsets, double y0, double w) {
  double s = 0;
  for (double off : offsets) {
    const Eigen::Vector3d p = pos + rot * Eigen::Vector3d(off, 0, 0);
    s += std::fabs(p.y() - y0);
  }
  return -w * s / offsets.size();
}

}  // namespace oracle

RobotState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RobotState state;
  state.base_position = Eigen::Vector3d(u(rng) * 5 + 8, u(rng), u(rng) * 0.3);
  state.base_orientation =
      Eigen::Quaterniond(1.0 + u(rng), 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng))
          .normalized();
  state.base_linear_velocity = Eigen::Vector3d(u(rng), u(rng), u(rng));
  state.base_angular_velocity = Eigen::Vector3d(u(rng), u(rng), u(rng));
  for (int i = 0; i < 12; ++i) {
    state.q[i] = u(rng);
    state.dq[i] = 3 * u(rng);
    state.applied_torques[i] = 10 * u(rng);
  }
  for (auto& f : state.contact_forces)
    f = Eigen::Vector3d(u(rng), u(rng), u(rng)) * 3.0;
  return state;
}

}  // namespace

TEST_CASE("table defaults load exactly") {
  const RewardWeights w;
  CHECK(w.lin_vel == 1.5);
  CHECK(w.ang_vel == 0.5);
  CHECK(w.torque == 1e-5);
  CHECK(w.delta_torques == 1e-7);
  CHECK(w.dof_acc == 2.5e-7);
  CHECK(w.collision == 10.0);
  CHECK(w.centerline == 0.3);
}

TEST_CASE("linear velocity tracking term") {
  const Eigen::Vector3d target = Eigen::Vector3d::UnitX();
  // exact tracking at c_vel = 1
  CHECK(r_lin_vel(target, Eigen::Vector3d(1, 0, 0), 1.0, 1.5) ==
        doctest::Approx(1.5 / (1.0 + 1e-5)).epsilon(1e-12));
  CHECK(r_lin_vel(target, Eigen::Vector3d(1, 0, 0), 1.0, 1.5) ==
        doctest::Approx(1.4999850).epsilon(1e-6));
  // zero velocity
  CHECK(r_lin_vel(target, Eigen::Vector3d::Zero(), 1.0, 1.5) == 0.0);
  // saturation: overspeed is capped at the exact-tracking value
  CHECK(r_lin_vel(target, Eigen::Vector3d(2, 0, 0), 1.0, 1.5) ==
        r_lin_vel(target, Eigen::Vector3d(1, 0, 0), 1.0, 1.5));
  CHECK_THROWS_AS(r_lin_vel(target, Eigen::Vector3d::Zero(), 0.0, 1.5),
                  ConfigError);
}

TEST_CASE("angular velocity tracking term") {
  CHECK(r_ang_vel(0.3, 0.3, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r_ang_vel(1.0, 0.0, 0.5) ==
        doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(r_ang_vel(1.0, 0.0, 0.5) == doctest::Approx(0.18393972).epsilon(1e-7));
  CHECK(r_ang_vel(50.0, 0.0, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("torque penalty") {
  Vec12 tau = Vec12::Zero();
  CHECK(r_torque(tau, 1e-5) == 0.0);
  tau[3] = 10.0;
  CHECK(r_torque(tau, 1e-5) == doctest::Approx(-1e-3).epsilon(1e-12));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int trial = 0; trial < 50; ++trial) {
    for (int i = 0; i < 12; ++i) tau[i] = u(rng);
    CHECK(r_torque(tau, 1e-5) <= 0.0);
  }
}

TEST_CASE("torque-change penalty") {
  Vec12 tau = Vec12::Zero(), prev = Vec12::Zero();
  CHECK(r_delta_torques(tau, prev, 1e-7) == 0.0);
  tau[0] = 5.0;
  CHECK(r_delta_torques(tau, prev, 1e-7) ==
        doctest::Approx(-2.5e-6).epsilon(1e-12));
  // first step of an episode with a zero baseline and zero torque
  CHECK(r_delta_torques(Vec12::Zero(), Vec12::Zero(), 1e-7) == 0.0);
}

TEST_CASE("joint acceleration penalty") {
  Vec12 dq = Vec12::Ones(), prev = Vec12::Ones();
  CHECK(r_dof_acc(dq, prev, 0.02, 2.5e-7) == 0.0);
  prev[2] = 0.0;
  CHECK(r_dof_acc(dq, prev, 0.02, 2.5e-7) ==
        doctest::Approx(-2.5e-7 * 2500.0).epsilon(1e-12));
  CHECK(r_dof_acc(dq, prev, 0.02, 2.5e-7) ==
        doctest::Approx(-6.25e-4).epsilon(1e-12));
  // halving dt quadruples the magnitude
  CHECK(r_dof_acc(dq, prev, 0.01, 2.5e-7) ==
        doctest::Approx(4.0 * r_dof_acc(dq, prev, 0.02, 2.5e-7)));
  CHECK_THROWS_AS(r_dof_acc(dq, prev, 0.0, 2.5e-7), ConfigError);
}

TEST_CASE("collision penalty counts bodies above the threshold") {
  std::vector<double> forces{0.0, 0.0, 0.0};
  CHECK(r_collision(forces, 1.0, 10.0) == 0.0);
  forces = {5.0};
  CHECK(r_collision(forces, 1.0, 10.0) == -10.0);
  forces = {5.0, 2.0, 0.5};
  CHECK(r_collision(forces, 1.0, 10.0) == -20.0);
}

TEST_CASE("centerline penalty") {
  const CenterlineSampler sampler = CenterlineSampler::default_sampler();
  const Eigen::Quaterniond identity = Eigen::Quaterniond::Identity();
  CHECK(r_centerline(Eigen::Vector3d(5, 0, 0), identity, sampler, 0.0, 0.3) ==
        0.0);
  CHECK(r_centerline(Eigen::Vector3d(5, 0.1, 0), identity, sampler, 0.0, 0.3) ==
        doctest::Approx(-0.03).epsilon(1e-12));

  // yawed pose is strictly worse than the centered unyawed pose
  const Eigen::Quaterniond yawed(Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitZ()));
  const double r_yawed =
      r_centerline(Eigen::Vector3d(5, 0, 0), yawed, sampler, 0.0, 0.3);
  // brute force over the sample points
  double expected = 0.0;
  for (double off : sampler.sample_offsets)
    expected += std::fabs(std::sin(0.4) * off);
  expected = -0.3 * expected / sampler.sample_offsets.size();
  CHECK(r_yawed == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r_yawed < 0.0);
}

TEST_CASE("standing still with zero command earns only the yaw-tracking term") {
  RobotState state;
  state.base_position = Eigen::Vector3d(1.0, 0.0, 0.4);
  const RobotState prev = state;
  const Command command(0.0, 0.0, 0.0);  // c_vel floored at 0.1
  const RewardBreakdown b =
      total_reward(state, prev, command, 0.02,
                   CenterlineSampler::default_sampler(), 0.0, RewardWeights{});
  CHECK(b.lin_vel == 0.0);
  CHECK(b.ang_vel == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b.torque == 0.0);
  CHECK(b.delta_torques == 0.0);
  CHECK(b.dof_acc == 0.0);
  CHECK(b.collision == 0.0);
  CHECK(b.centerline == 0.0);
  CHECK(b.total == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero weights give a zero total") {
  std::mt19937_64 rng(5);
  const RobotState state = random_state(rng);
  const RobotState prev = random_state(rng);
  RewardWeights zero;
  zero.lin_vel = zero.ang_vel = zero.torque = zero.delta_torques = 0.0;
  zero.dof_acc = zero.collision = zero.centerline = 0.0;
  const RewardBreakdown b =
      total_reward(state, prev, Command(0.5, 0, 0), 0.02,
                   CenterlineSampler::default_sampler(), 0.0, zero);
  CHECK(b.total == 0.0);
}

TEST_CASE("perturbing torques changes only the torque-family terms") {
  std::mt19937_64 rng(6);
  RobotState state = random_state(rng);
  const RobotState prev = random_state(rng);
  const Command command(0.6, 0, 0);
  const CenterlineSampler sampler = CenterlineSampler::default_sampler();
  const RewardBreakdown before =
      total_reward(state, prev, command, 0.02, sampler, 0.0, RewardWeights{});
  state.applied_torques[4] += 2.0;
  const RewardBreakdown after =
      total_reward(state, prev, command, 0.02, sampler, 0.0, RewardWeights{});
  CHECK(after.lin_vel == before.lin_vel);
  CHECK(after.ang_vel == before.ang_vel);
  CHECK(after.dof_acc == before.dof_acc);
  CHECK(after.collision == before.collision);
  CHECK(after.centerline == before.centerline);
  CHECK(after.torque != before.torque);
  CHECK(after.delta_torques != before.delta_torques);
}

TEST_CASE("penalty terms are never positive and bounds hold") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const RobotState state = random_state(rng);
    const RobotState prev = random_state(rng);
    std::uniform_real_distribution<double> cmd(0.0, 1.2);
    const Command command(cmd(rng), 0, 0);
    const RewardBreakdown b =
        total_reward(state, prev, command, 0.02,
                     CenterlineSampler::default_sampler(), 0.0, RewardWeights{});
    CHECK(b.torque <= 0.0);
    CHECK(b.delta_torques <= 0.0);
    CHECK(b.dof_acc <= 0.0);
    CHECK(b.collision <= 0.0);
    CHECK(b.centerline <= 0.0);
    CHECK(b.ang_vel > 0.0);
    CHECK(b.ang_vel <= 0.5);
    const double c_vel = std::max(command[0], 0.1);
    CHECK(b.lin_vel <= 1.5 * c_vel / (c_vel + 1e-5) + 1e-12);
  }
}

TEST_CASE("brute-force equivalence over random states") {
  std::mt19937_64 rng(23);
  const RewardWeights w;
  const CenterlineSampler sampler = CenterlineSampler::default_sampler();
  for (int trial = 0; trial < 1000; ++trial) {
    const RobotState state = random_state(rng);
    const RobotState prev = random_state(rng);
    std::uniform_real_distribution<double> cmd(0.1, 1.0);
    const Command command(cmd(rng), 0.0, 0.0);
    const double dt = 0.02;
    const RewardBreakdown b =
        total_reward(state, prev, command, dt, sampler, 0.0, w);

    const double c_vel = std::max(command[0], 0.1);
    std::vector<double> penalized;
    penalized.push_back(state.contact_forces[kContactBase].norm());
    for (int leg = 0; leg < 4; ++leg)
      penalized.push_back(state.contact_forces[kContactKnee0 + leg].norm());
    for (int leg = 0; leg < 4; ++leg)
      penalized.push_back(state.contact_forces[kContactHip0 + leg].norm());

    const double yaw_rate = state.angular_velocity_body().z();
    CHECK(b.lin_vel ==
          doctest::Approx(oracle::lin_vel(Eigen::Vector3d::UnitX(),
                                          state.base_linear_velocity, c_vel,
                                          w.lin_vel))
              .epsilon(1e-12));
    CHECK(b.ang_vel ==
          doctest::Approx(oracle::ang_vel(command[2], yaw_rate, w.ang_vel))
              .epsilon(1e-12));
    CHECK(b.torque ==
          doctest::Approx(oracle::torque(state.applied_torques, w.torque))
              .epsilon(1e-12));
    CHECK(b.delta_torques ==
          doctest::Approx(oracle::delta_torques(state.applied_torques,
                                                prev.applied_torques,
                                                w.delta_torques))
              .epsilon(1e-12));
    CHECK(b.dof_acc ==
          doctest::Approx(oracle::dof_acc(state.dq, prev.dq, dt, w.dof_acc))
              .epsilon(1e-12));
    CHECK(b.collision ==
          doctest::Approx(oracle::collision(penalized, 1.0, w.collision))
              .epsilon(1e-12));
    CHECK(b.centerline ==
          doctest::Approx(oracle::centerline(state.base_position,
                                             state.base_orientation,
                                             sampler.sample_offsets, 0.0,
                                             w.centerline))
              .epsilon(1e-12));

    // bit-for-bit decomposition
    CHECK(b.total == b.sum());
  }
}
