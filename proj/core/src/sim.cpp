#include "pipegym/sim.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>

#include "pipegym/errors.hpp"

namespace pipegym {

void SimConfig::validate() const {
  if (dt <= 0.0) throw ConfigError("sim: dt must be > 0");
  if (decimation < 1) throw ConfigError("sim: decimation must be >= 1");
  if (episode_seconds <= 0.0)
    throw ConfigError("sim: episode_seconds must be > 0");
  if (contact_stiffness <= 0.0)
    throw ConfigError("sim: contact_stiffness must be > 0");
  if (command_vx_min <= 0.0 || command_vx_max < command_vx_min)
    throw ConfigError("sim: bad command velocity range");
}

const char* termination_name(Termination reason) {
  switch (reason) {
    case Termination::kNone: return "none";
    case Termination::kTimeout: return "timeout";
    case Termination::kSuccess: return "success";
    case Termination::kFall: return "fall";
    case Termination::kStuck: return "stuck";
  }
  return "unknown";
}

namespace {

struct ContactPoint {
  Eigen::Vector3d world;
  Eigen::Vector3d velocity;
  double radius = 0.0;
  int body = 0;
};

// Coulomb-capped tangential damper on top of a spring-damper normal force.
struct ContactForce {
  Eigen::Vector3d force{0, 0, 0};
  double normal = 0.0;
  double tangential = 0.0;
  double mu = 0.0;
  double penetration = 0.0;
  bool active = false;
};

ContactForce penalty_contact(const SimConfig& config,
                             const Eigen::Vector3d& normal, double depth,
                             const Eigen::Vector3d& point_velocity, double mu) {
  ContactForce out;
  if (depth <= 0.0) return out;
  const double clamped_depth = std::min(depth, config.max_penetration);
  const double v_n = point_velocity.dot(normal);
  const double f_n = std::max(
      0.0, config.contact_stiffness * clamped_depth - config.contact_damping * v_n);
  if (f_n <= 0.0) return out;

  const Eigen::Vector3d v_t = point_velocity - v_n * normal;
  Eigen::Vector3d f_t = -config.tangential_damping * v_t;
  const double cap = mu * f_n;
  if (f_t.norm() > cap) f_t *= cap / f_t.norm();

  out.force = f_n * normal + f_t;
  out.normal = f_n;
  out.tangential = f_t.norm();
  out.mu = mu;
  out.penetration = clamped_depth;
  out.active = true;
  return out;
}

double surface_mu(const EnvParams& params, const HeightField& field, double x,
                  double tangential_speed, double stick_speed) {
  if (x >= field.pipe_start_x()) {
    return tangential_speed < stick_speed ? params.pipe_wall_static_friction
                                          : params.pipe_wall_dynamic_friction;
  }
  return params.foot_friction;
}

}  // namespace

RobotState contact_step(const RobotModel& model, const SimConfig& config,
                        const EnvParams& params, const HeightField& field,
                        RobotState state, const Vec12& torques, double dt,
                        std::vector<ContactRecord>* audit) {
  const double total_mass = model.nominal_mass + params.added_base_mass;

  // joints: massless legs, rotor inertia only
  state.applied_torques = torques;
  state.dq += torques / model.rotor_inertia * dt;
  state.q += state.dq * dt;
  const Vec12 lower = model.joint_lower_all();
  const Vec12 upper = model.joint_upper_all();
  for (int j = 0; j < kNumJoints; ++j) {
    if (state.q[j] < lower[j]) {
      state.q[j] = lower[j];
      state.dq[j] = std::max(state.dq[j], 0.0);
    } else if (state.q[j] > upper[j]) {
      state.q[j] = upper[j];
      state.dq[j] = std::min(state.dq[j], 0.0);
    }
  }

  const Eigen::Quaterniond& rot = state.base_orientation;
  const Eigen::Vector3d com = state.base_position;
  const Eigen::Vector3d geo_center = com - rot * params.com_offset;

  // leg points and their joint-motion velocity (numeric directional
  // derivative along dq)
  const auto points_base = leg_points_base(model, state.q);
  constexpr double kDiffStep = 1e-6;
  const auto points_base_eps =
      leg_points_base(model, state.q + kDiffStep * state.dq);

  std::vector<ContactPoint> contacts;
  contacts.reserve(2 * kNumLegs * 3 + 10);

  const auto point_velocity =
      [&](const Eigen::Vector3d& world,
          const Eigen::Vector3d& joint_vel_base) -> Eigen::Vector3d {
    return state.base_linear_velocity +
           state.base_angular_velocity.cross(world - com) +
           rot * joint_vel_base;
  };

  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto add_leg_point = [&](const Eigen::Vector3d& p_base,
                                   const Eigen::Vector3d& p_base_eps,
                                   double radius, int body) {
      const Eigen::Vector3d world = geo_center + rot * p_base;
      const Eigen::Vector3d joint_vel = (p_base_eps - p_base) / kDiffStep;
      contacts.push_back({world, point_velocity(world, joint_vel), radius, body});
    };
    add_leg_point(points_base[leg].foot, points_base_eps[leg].foot, 0.0,
                  kContactFoot0 + leg);
    add_leg_point(points_base[leg].knee, points_base_eps[leg].knee,
                  model.knee_radius, kContactKnee0 + leg);
    add_leg_point(points_base[leg].hip, points_base_eps[leg].hip,
                  model.hip_radius, kContactHip0 + leg);
  }

  const double hx = 0.5 * model.base_length;
  const double hy = 0.5 * model.base_width;
  const double hz = 0.5 * model.base_height;
  const Eigen::Vector3d box_points[10] = {
      {hx, hy, -hz},  {hx, -hy, -hz},  {-hx, hy, -hz},  {-hx, -hy, -hz},
      {0.0, 0.0, -hz},
      {hx, hy, hz},   {hx, -hy, hz},   {-hx, hy, hz},   {-hx, -hy, hz},
      {0.0, 0.0, hz}};
  for (const Eigen::Vector3d& p_base : box_points) {
    const Eigen::Vector3d world = geo_center + rot * p_base;
    contacts.push_back(
        {world, point_velocity(world, Eigen::Vector3d::Zero()), 0.0,
         kContactBase});
  }

  for (auto& force : state.contact_forces) force.setZero();
  Eigen::Vector3d total_force(0.0, 0.0, -9.81 * total_mass);
  Eigen::Vector3d total_torque = Eigen::Vector3d::Zero();

  const auto& ceiling = field.ceiling_params();
  for (const ContactPoint& contact : contacts) {
    const Eigen::Vector3d& p = contact.world;

    // floor
    {
      const double floor_z = field.height_at(p.x(), p.y());
      const double depth = floor_z - (p.z() - contact.radius);
      if (depth > 0.0) {
        const Eigen::Vector3d normal = field.normal_at(p.x(), p.y());
        const double speed =
            (contact.velocity - contact.velocity.dot(normal) * normal).norm();
        const double mu = surface_mu(params, field, p.x(), speed,
                                     config.stick_speed);
        const ContactForce cf = penalty_contact(
            config, normal, depth * normal.z(), contact.velocity, mu);
        if (cf.active) {
          total_force += cf.force;
          total_torque += (p - com).cross(cf.force);
          state.contact_forces[contact.body] += cf.force;
          if (audit)
            audit->push_back({contact.body, cf.normal, cf.tangential, cf.mu,
                              cf.penetration});
        }
      }
    }

    // virtual ceiling: upper half-cylinder, radial penalty
    if (ceiling.radius > 0.0 && p.x() >= field.pipe_start_x() &&
        p.z() > ceiling.centerline_z) {
      const double dy = p.y() - ceiling.centerline_y;
      if (std::abs(dy) < ceiling.radius) {
        const double dz = p.z() - ceiling.centerline_z;
        const double rho = std::hypot(dy, dz);
        const double depth = rho + contact.radius - ceiling.radius;
        if (depth > 0.0 && rho > 1e-12) {
          const Eigen::Vector3d normal =
              Eigen::Vector3d(0.0, -dy / rho, -dz / rho);
          const double speed =
              (contact.velocity - contact.velocity.dot(normal) * normal).norm();
          const double mu =
              speed < config.stick_speed ? params.pipe_wall_static_friction
                                         : params.pipe_wall_dynamic_friction;
          const ContactForce cf =
              penalty_contact(config, normal, depth, contact.velocity, mu);
          if (cf.active) {
            total_force += cf.force;
            total_torque += (p - com).cross(cf.force);
            state.contact_forces[contact.body] += cf.force;
            if (audit)
              audit->push_back({contact.body, cf.normal, cf.tangential, cf.mu,
                                cf.penetration});
          }
        }
      }
    }
  }

  // base: semi-implicit Euler
  const Eigen::Matrix3d rot_mat = rot.toRotationMatrix();
  const Eigen::Matrix3d inertia_world =
      rot_mat * model.base_inertia(total_mass) * rot_mat.transpose();
  state.base_linear_velocity += total_force / total_mass * dt;
  state.base_angular_velocity +=
      inertia_world.ldlt().solve(
          total_torque - state.base_angular_velocity.cross(
                             inertia_world * state.base_angular_velocity)) *
      dt;
  state.base_position += state.base_linear_velocity * dt;

  const double omega_norm = state.base_angular_velocity.norm();
  if (omega_norm > 1e-12) {
    const Eigen::Quaterniond delta(Eigen::AngleAxisd(
        omega_norm * dt, state.base_angular_velocity / omega_norm));
    state.base_orientation = (delta * state.base_orientation).normalized();
  }

  state.foot_positions = forward_kinematics(
      model, state.base_position - state.base_orientation * params.com_offset,
      state.base_orientation, state.q);
  return state;
}

void apply_push(RobotState& state, std::mt19937_64& rng,
                const EnvParams& params) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> magnitude(0.0, params.push_magnitude);
  const double theta = angle(rng);
  const double m = magnitude(rng);
  state.base_linear_velocity +=
      Eigen::Vector3d(m * std::cos(theta), m * std::sin(theta), 0.0);
}

std::optional<Termination> check_termination(
    const RobotState& state, const HeightField& field,
    const PipeWorldSpec& spec, double elapsed, double episode_seconds,
    double window_progress, double window_elapsed) {
  const double x = state.base_position.x();
  if (x > spec.x_end()) return Termination::kSuccess;

  const bool on_platform = x < spec.platform_length;
  if (on_platform &&
      (std::abs(state.roll()) > 1.5 || std::abs(state.pitch()) > 1.5))
    return Termination::kFall;
  const double floor_z =
      field.height_at(state.base_position.x(), state.base_position.y());
  if (state.base_position.z() < floor_z - 0.1) return Termination::kFall;

  if (window_elapsed >= 5.0 && window_progress < 0.05)
    return Termination::kStuck;

  if (elapsed >= episode_seconds - 1e-9) return Termination::kTimeout;
  return std::nullopt;
}

Environment::Environment(const RobotModel& model, const SimConfig& config,
                         const RewardWeights& weights,
                         std::shared_ptr<const TerrainGrid> grid, int column,
                         std::uint64_t seed)
    : model_(model),
      config_(config),
      weights_(weights),
      grid_(std::move(grid)),
      column_(column),
      rng_(seed) {
  config_.validate();
  curriculum_.max_level = grid_->levels() - 1;
  curriculum_.level = 0;
  reset();
}

void Environment::set_terrain(std::shared_ptr<const TerrainGrid> grid,
                              int stage_id) {
  grid_ = std::move(grid);
  curriculum_.stage = stage_id;
  curriculum_.max_level = grid_->levels() - 1;
  curriculum_.level = std::min(curriculum_.level, curriculum_.max_level);
  reset();
}

void Environment::spawn() {
  spec_ = &grid_->spec(curriculum_.level, column_);
  field_ = grid_->field(curriculum_.level, column_);

  params_ = randomize_env(rng_, config_.randomization);
  params_.pipe_wall_static_friction = config_.wall_static_friction;
  params_.pipe_wall_dynamic_friction = config_.wall_dynamic_friction;
  params_.push_interval = config_.push_interval;
  params_.push_magnitude = config_.push_magnitude;
  ++episode_index_;

  std::uniform_real_distribution<double> vx(config_.command_vx_min,
                                            config_.command_vx_max);
  command_ = Command(vx(rng_), 0.0, 0.0);

  state_ = RobotState{};
  state_.base_position =
      Eigen::Vector3d(0.5 * spec_->platform_length, spec_->centerline_y,
                      spec_->platform_height() + model_.standing_height);
  state_.base_orientation = Eigen::Quaterniond::Identity();
  state_.q = model_.default_pose();
  if (config_.spawn_joint_noise > 0.0) {
    std::uniform_real_distribution<double> noise(-config_.spawn_joint_noise,
                                                 config_.spawn_joint_noise);
    for (int j = 0; j < kNumJoints; ++j) state_.q[j] += noise(rng_);
  }
  // seed exploration with already-moving states
  if (config_.spawn_velocity_noise > 0.0) {
    std::uniform_real_distribution<double> vel(-config_.spawn_velocity_noise,
                                               config_.spawn_velocity_noise);
    state_.base_linear_velocity.x() = vel(rng_);
    state_.base_linear_velocity.y() = vel(rng_);
  }
  if (config_.spawn_joint_velocity_noise > 0.0) {
    std::uniform_real_distribution<double> vel(
        -config_.spawn_joint_velocity_noise,
        config_.spawn_joint_velocity_noise);
    for (int j = 0; j < kNumJoints; ++j) state_.dq[j] = vel(rng_);
  }
  state_.foot_positions = forward_kinematics(model_, state_.base_position,
                                             state_.base_orientation, state_.q);
  prev_state_ = state_;
  // episode-start baseline for the delta reward terms is exactly zero
  prev_state_.dq.setZero();
  prev_state_.applied_torques.setZero();
  // on auto-reset the record must keep the pre-reset step for dump readers
  if (episode_index_ == 1)
    step_record_ = {state_, command_, spec_->centerline_y, episode_index_, 0.0};
  last_action_.setZero();

  episode_time_ = 0.0;
  next_push_time_ = config_.push_interval;
  spawn_x_ = state_.base_position.x();
  window_start_time_ = 0.0;
  window_start_x_ = spawn_x_;
  episode_steps_ = 0;
  episode_return_ = 0.0;
  episode_term_sums_ = RewardBreakdown{};
}

void Environment::reset() { spawn(); }

void Environment::fault_reset() {
  ++fault_count_;
  if (fault_count_ <= 10) {
    std::cerr << "pipegym: environment fault (non-finite or exploding state), "
                 "resetting\n";
  }
  EpisodeStats stats;
  stats.episode_return = episode_return_;
  stats.distance = distance();
  stats.success = false;
  stats.level = curriculum_.level;
  stats.steps = episode_steps_;
  stats.reason = Termination::kFall;
  stats.term_sums = episode_term_sums_;
  completed_.push_back(stats);
  spawn();
}

StepResult Environment::step(const Vec12& action) {
  if (!action.allFinite()) throw HardFault("env step: non-finite action");

  StepResult result;
  bool faulted = false;
  for (int sub = 0; sub < config_.decimation; ++sub) {
    const Vec12 torques =
        pd_torques(model_, state_.q, state_.dq, action, params_.motor_strength);
    state_ = contact_step(model_, config_, params_, *field_, state_, torques,
                          config_.dt, audit_enabled_ ? &audit_ : nullptr);
    episode_time_ += config_.dt;
    if (episode_time_ >= next_push_time_ - 1e-12) {
      apply_push(state_, rng_, params_);
      next_push_time_ += config_.push_interval;
    }
    if (!state_.finite() || state_.base_linear_velocity.norm() > 100.0) {
      faulted = true;
      break;
    }
  }

  if (faulted) {
    fault_reset();
    result.done = true;
    result.reason = Termination::kFall;
    result.observation = observe();
    return result;
  }

  result.reward =
      total_reward(state_, prev_state_, command_, config_.control_dt(),
                   sampler_, spec_->centerline_y, weights_);
  step_record_ = {state_, command_, spec_->centerline_y, episode_index_,
                  episode_time_};
  episode_return_ += result.reward.total;
  auto accumulate = [](RewardBreakdown& sums, const RewardBreakdown& step) {
    sums.lin_vel += step.lin_vel;
    sums.ang_vel += step.ang_vel;
    sums.torque += step.torque;
    sums.delta_torques += step.delta_torques;
    sums.dof_acc += step.dof_acc;
    sums.collision += step.collision;
    sums.centerline += step.centerline;
    sums.total += step.total;
  };
  accumulate(episode_term_sums_, result.reward);
  ++episode_steps_;
  prev_state_ = state_;
  last_action_ = action;

  const auto reason = check_termination(
      state_, *field_, *spec_, episode_time_, config_.episode_seconds,
      state_.base_position.x() - window_start_x_,
      episode_time_ - window_start_time_);
  if (episode_time_ - window_start_time_ >= 5.0) {
    window_start_time_ = episode_time_;
    window_start_x_ = state_.base_position.x();
  }

  if (reason) {
    EpisodeStats stats;
    stats.episode_return = episode_return_;
    stats.distance = distance();
    stats.success = *reason == Termination::kSuccess;
    stats.level = curriculum_.level;
    stats.steps = episode_steps_;
    stats.reason = *reason;
    stats.term_sums = episode_term_sums_;
    completed_.push_back(stats);

    const double tau =
        curriculum_threshold(command_[0], config_.episode_seconds);
    curriculum_ = update_level(curriculum_, stats.distance, tau);

    result.done = true;
    result.reason = *reason;
    if (*reason == Termination::kTimeout)
      result.terminal_observation = observe();
    spawn();
  }

  result.observation = observe();
  return result;
}

ObservationBundle Environment::observe() {
  ObservationBundle bundle;
  bundle.proprio = assemble_proprio(model_, state_, command_, last_action_);
  if (config_.obs_noise > 0.0) {
    std::uniform_real_distribution<double> noise(-config_.obs_noise,
                                                 config_.obs_noise);
    for (int i = 0; i < kProprioDim; ++i) bundle.proprio[i] += noise(rng_);
  }
  bundle.privileged =
      assemble_privileged(state_, *field_, scan_grid_, params_);
  return bundle;
}

std::vector<EpisodeStats> Environment::drain_episodes() {
  std::vector<EpisodeStats> out;
  out.swap(completed_);
  return out;
}

// ---------------------------------------------------------------------------

struct BatchEnv::Pool {
  explicit Pool(int workers) {
    threads.reserve(workers);
    for (int i = 0; i < workers; ++i)
      threads.emplace_back([this] { loop(); });
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lock(mutex);
      stop = true;
    }
    cv_work.notify_all();
    for (auto& thread : threads) thread.join();
  }

  void loop() {
    std::uint64_t seen = 0;
    for (;;) {
      std::unique_lock<std::mutex> lock(mutex);
      cv_work.wait(lock, [&] { return stop || generation != seen; });
      if (stop) return;
      seen = generation;
      lock.unlock();

      int index;
      while ((index = next.fetch_add(1)) < count) {
        try {
          (*fn)(index);
        } catch (...) {
          std::lock_guard<std::mutex> elock(mutex);
          if (!error) error = std::current_exception();
        }
      }

      lock.lock();
      if (--active == 0) cv_done.notify_all();
    }
  }

  void run(int job_count, const std::function<void(int)>& job) {
    std::unique_lock<std::mutex> lock(mutex);
    fn = &job;
    count = job_count;
    next = 0;
    active = static_cast<int>(threads.size());
    error = nullptr;
    ++generation;
    cv_work.notify_all();
    cv_done.wait(lock, [&] { return active == 0; });
    if (error) std::rethrow_exception(error);
  }

  std::vector<std::thread> threads;
  std::mutex mutex;
  std::condition_variable cv_work, cv_done;
  const std::function<void(int)>* fn = nullptr;
  int count = 0;
  std::atomic<int> next{0};
  int active = 0;
  std::uint64_t generation = 0;
  bool stop = false;
  std::exception_ptr error;
};

BatchEnv::BatchEnv(const RobotModel& model, const SimConfig& config,
                   const RewardWeights& weights,
                   std::shared_ptr<const TerrainGrid> grid, int num_envs,
                   std::uint64_t seed, int workers)
    : workers_(resolve_worker_count(workers)) {
  envs_.reserve(num_envs);
  for (int i = 0; i < num_envs; ++i) {
    envs_.push_back(std::make_unique<Environment>(
        model, config, weights, grid, i % grid->columns(), seed + i));
  }
  if (workers_ > 1) pool_ = std::make_unique<Pool>(workers_);
}

BatchEnv::~BatchEnv() = default;

void BatchEnv::parallel_for(int count, const std::function<void(int)>& fn) {
  if (pool_) {
    pool_->run(count, fn);
  } else {
    for (int i = 0; i < count; ++i) fn(i);
  }
}

void BatchEnv::reset_all() {
  parallel_for(size(), [&](int i) { envs_[i]->reset(); });
}

std::vector<StepResult> BatchEnv::step(const std::vector<Vec12>& actions) {
  if (static_cast<int>(actions.size()) != size())
    throw HardFault("batch step: action count does not match env count");
  std::vector<StepResult> results(envs_.size());
  parallel_for(size(),
               [&](int i) { results[i] = envs_[i]->step(actions[i]); });
  return results;
}

void BatchEnv::set_terrain(std::shared_ptr<const TerrainGrid> grid,
                           int stage_id) {
  for (auto& env : envs_) env->set_terrain(grid, stage_id);
}

int resolve_worker_count(int requested) {
  int workers = requested > 0
                    ? requested
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* cap_str = std::getenv("PIPEGYM_THREADS")) {
    const int cap = std::atoi(cap_str);
    if (cap > 0) workers = std::min(workers, cap);
  }
  return std::max(1, workers);
}

}  // namespace pipegym
