#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "pipegym/curriculum.hpp"
#include "pipegym/env_params.hpp"
#include "pipegym/observation.hpp"
#include "pipegym/reward.hpp"
#include "pipegym/robot.hpp"
#include "pipegym/terrain.hpp"

namespace pipegym {

struct SimConfig {
  double dt = 0.005;            // s, physics substep
  int decimation = 4;           // substeps per control step (50 Hz control)
  double episode_seconds = 20.0;
  double contact_stiffness = 5000.0;   // N/m
  double contact_damping = 50.0;       // N s/m
  double tangential_damping = 1000.0;  // N s/m, capped by the friction cone
  double stick_speed = 0.02;           // m/s, static/dynamic switch
  double max_penetration = 0.05;       // m, spring depth clamp
  double wall_static_friction = 0.2;   // pipe inner surface
  double wall_dynamic_friction = 0.1;
  double push_interval = 8.0;          // s
  double push_magnitude = 0.5;         // m/s
  double command_vx_min = 0.3;         // m/s
  double command_vx_max = 1.0;
  double spawn_joint_noise = 0.05;     // rad, uniform
  double spawn_velocity_noise = 0.4;   // m/s, horizontal, uniform
  double spawn_joint_velocity_noise = 1.0;  // rad/s, uniform
  double obs_noise = 0.0;              // uniform additive, proprio only
  RandomizationRanges randomization;

  double control_dt() const { return dt * decimation; }
  int steps_per_episode() const {
    return static_cast<int>(episode_seconds / control_dt() + 0.5);
  }
  void validate() const;
};

enum class Termination { kNone, kTimeout, kSuccess, kFall, kStuck };
const char* termination_name(Termination reason);

struct StepResult {
  ObservationBundle observation;
  RewardBreakdown reward;
  bool done = false;
  Termination reason = Termination::kNone;
  // pre-reset observation, provided on timeout so the learner can
  // bootstrap the truncated return
  std::optional<ObservationBundle> terminal_observation;
};

// One row of the per-substep contact audit.
struct ContactRecord {
  int body = 0;
  double normal_force = 0.0;
  double tangential_force = 0.0;
  double mu = 0.0;
  double penetration = 0.0;
};

struct EpisodeStats {
  double episode_return = 0.0;
  double distance = 0.0;  // net displacement along +x from spawn
  bool success = false;
  int level = 0;
  int steps = 0;
  Termination reason = Termination::kNone;
  RewardBreakdown term_sums;
};

// One physics substep: PD-driven joint integration (massless legs, rotor
// inertia), penalty contacts with Coulomb friction against the floor
// heightfield and the analytic ceiling, semi-implicit Euler for the base.
RobotState contact_step(const RobotModel& model, const SimConfig& config,
                        const EnvParams& params, const HeightField& field,
                        RobotState state, const Vec12& torques, double dt,
                        std::vector<ContactRecord>* audit = nullptr);

// Adds a uniformly random horizontal velocity increment with magnitude
// at most params.push_magnitude.
void apply_push(RobotState& state, std::mt19937_64& rng,
                const EnvParams& params);

// Success / fall / stuck / timeout rules. window_* describe axial progress
// over the trailing stuck-detection window maintained by the caller.
std::optional<Termination> check_termination(
    const RobotState& state, const HeightField& field,
    const PipeWorldSpec& spec, double elapsed, double episode_seconds,
    double window_progress, double window_elapsed);

// A single agent: one robot in one sub-terrain, with its own RNG stream,
// curriculum row and episode bookkeeping. Auto-resets on termination.
class Environment {
 public:
  Environment(const RobotModel& model, const SimConfig& config,
              const RewardWeights& weights,
              std::shared_ptr<const TerrainGrid> grid, int column,
              std::uint64_t seed);

  void reset();
  StepResult step(const Vec12& action);

  // Stage handoff: swap the terrain grid, keep the curriculum level.
  void set_terrain(std::shared_ptr<const TerrainGrid> grid, int stage_id);

  ObservationBundle observe();

  const RobotState& state() const { return state_; }
  RobotState& mutable_state() { return state_; }  // test hook

  // snapshot of the last step's reward inputs (pre-reset on done),
  // consumed by trajectory dumps
  struct StepRecord {
    RobotState state;
    Command command{0.5, 0.0, 0.0};
    double centerline_y = 0.0;
    long episode = 0;
    double time = 0.0;
  };
  const StepRecord& last_step_record() const { return step_record_; }
  const RewardWeights& weights() const { return weights_; }
  long episode_index() const { return episode_index_; }
  const CurriculumState& curriculum() const { return curriculum_; }
  void set_curriculum(const CurriculumState& state) { curriculum_ = state; }
  const Command& command() const { return command_; }
  void set_command(const Command& command) { command_ = command; }
  const EnvParams& params() const { return params_; }
  void set_params(const EnvParams& params) { params_ = params; }
  const HeightField& field() const { return *field_; }
  const PipeWorldSpec& spec() const { return *spec_; }
  const RobotModel& model() const { return model_; }
  const SimConfig& config() const { return config_; }
  const Vec12& last_action() const { return last_action_; }

  double elapsed() const { return episode_time_; }
  double spawn_x() const { return spawn_x_; }
  double distance() const { return state_.base_position.x() - spawn_x_; }
  int fault_count() const { return fault_count_; }

  // Episodes finished since the last drain.
  std::vector<EpisodeStats> drain_episodes();

  void enable_contact_audit(bool enabled) { audit_enabled_ = enabled; }
  const std::vector<ContactRecord>& contact_audit() const { return audit_; }
  void clear_contact_audit() { audit_.clear(); }

 private:
  void spawn();
  void fault_reset();

  RobotModel model_;
  SimConfig config_;
  RewardWeights weights_;
  CenterlineSampler sampler_ = CenterlineSampler::default_sampler();
  ScanGrid scan_grid_ = ScanGrid::default_grid();
  std::shared_ptr<const TerrainGrid> grid_;
  std::shared_ptr<const HeightField> field_;
  const PipeWorldSpec* spec_ = nullptr;
  int column_ = 0;
  CurriculumState curriculum_;
  std::mt19937_64 rng_;

  RobotState state_;
  RobotState prev_state_;
  StepRecord step_record_;
  EnvParams params_;
  long episode_index_ = 0;
  Command command_{0.5, 0.0, 0.0};
  Vec12 last_action_ = Vec12::Zero();

  double episode_time_ = 0.0;
  double next_push_time_ = 0.0;
  double spawn_x_ = 0.0;
  double window_start_time_ = 0.0;
  double window_start_x_ = 0.0;
  int episode_steps_ = 0;
  double episode_return_ = 0.0;
  RewardBreakdown episode_term_sums_;
  int fault_count_ = 0;

  bool audit_enabled_ = false;
  std::vector<ContactRecord> audit_;
  std::vector<EpisodeStats> completed_;
};

// Data-parallel batch of independent environments. Results are gathered
// in environment order, so runs are deterministic for any worker count.
class BatchEnv {
 public:
  BatchEnv(const RobotModel& model, const SimConfig& config,
           const RewardWeights& weights,
           std::shared_ptr<const TerrainGrid> grid, int num_envs,
           std::uint64_t seed, int workers = 1);
  ~BatchEnv();

  BatchEnv(const BatchEnv&) = delete;
  BatchEnv& operator=(const BatchEnv&) = delete;

  int size() const { return static_cast<int>(envs_.size()); }
  int workers() const { return workers_; }
  Environment& env(int index) { return *envs_[index]; }
  const Environment& env(int index) const { return *envs_[index]; }

  void reset_all();
  // Throws HardFault when actions.size() != size().
  std::vector<StepResult> step(const std::vector<Vec12>& actions);
  void set_terrain(std::shared_ptr<const TerrainGrid> grid, int stage_id);

 private:
  void parallel_for(int count, const std::function<void(int)>& fn);

  std::vector<std::unique_ptr<Environment>> envs_;
  int workers_ = 1;
  struct Pool;
  std::unique_ptr<Pool> pool_;
};

// Worker count: explicit request, capped by PIPEGYM_THREADS when set,
// defaulting to the hardware concurrency.
int resolve_worker_count(int requested);

}  // namespace pipegym
