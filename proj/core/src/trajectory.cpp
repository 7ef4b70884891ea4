#include "pipegym/trajectory.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "pipegym/errors.hpp"

namespace pipegym {

namespace {

constexpr int kContactColumns = 9;  // base, 4 knees, 4 hips

std::string expected_header() {
  std::ostringstream out;
  out << "step,episode,time,dt,cmd_vx,cmd_vy,cmd_yaw,centerline_y";
  out << ",px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz";
  for (int i = 0; i < 12; ++i) out << ",q" << i;
  for (int i = 0; i < 12; ++i) out << ",dq" << i;
  for (int i = 0; i < 12; ++i) out << ",tau" << i;
  out << ",f_base";
  for (int i = 0; i < 4; ++i) out << ",f_knee" << i;
  for (int i = 0; i < 4; ++i) out << ",f_hip" << i;
  for (const char* name : RewardBreakdown::term_names()) out << ",w_" << name;
  for (const char* name : RewardBreakdown::term_names()) out << ",r_" << name;
  out << ",r_total";
  return out.str();
}

void append(std::ostream& out, double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), ",%.17g", value);
  out << buffer;
}

}  // namespace

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& path)
    : out_(path) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_ << header() << '\n';
}

std::string TrajectoryWriter::header() { return expected_header(); }

void TrajectoryWriter::write_step(const Environment& env,
                                  const RewardBreakdown& reward) {
  const Environment::StepRecord& record = env.last_step_record();
  const RobotState& state = record.state;
  const RewardWeights& weights = env.weights();

  out_ << step_++ << ',' << record.episode;
  std::ostringstream row;
  append(row, record.time);
  append(row, env.config().control_dt());
  append(row, record.command[0]);
  append(row, record.command[1]);
  append(row, record.command[2]);
  append(row, record.centerline_y);
  for (int i = 0; i < 3; ++i) append(row, state.base_position[i]);
  append(row, state.base_orientation.w());
  append(row, state.base_orientation.x());
  append(row, state.base_orientation.y());
  append(row, state.base_orientation.z());
  for (int i = 0; i < 3; ++i) append(row, state.base_linear_velocity[i]);
  for (int i = 0; i < 3; ++i) append(row, state.base_angular_velocity[i]);
  for (int i = 0; i < 12; ++i) append(row, state.q[i]);
  for (int i = 0; i < 12; ++i) append(row, state.dq[i]);
  for (int i = 0; i < 12; ++i) append(row, state.applied_torques[i]);
  append(row, state.contact_forces[kContactBase].norm());
  for (int leg = 0; leg < 4; ++leg)
    append(row, state.contact_forces[kContactKnee0 + leg].norm());
  for (int leg = 0; leg < 4; ++leg)
    append(row, state.contact_forces[kContactHip0 + leg].norm());
  append(row, weights.lin_vel);
  append(row, weights.ang_vel);
  append(row, weights.torque);
  append(row, weights.delta_torques);
  append(row, weights.dof_acc);
  append(row, weights.collision);
  append(row, weights.centerline);
  for (double term : reward.terms()) append(row, term);
  append(row, reward.total);
  out_ << row.str() << '\n';
}

ReplaySummary replay_check(const std::filesystem::path& path,
                           double tolerance) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory dump " + path.string());

  std::string header;
  if (!std::getline(in, header))
    throw IoError(path.string() + ": empty file, expected a header line");
  if (header != expected_header())
    throw IoError(path.string() + ": unrecognized trajectory header");

  ReplaySummary summary;
  const CenterlineSampler sampler = CenterlineSampler::default_sampler();

  RobotState prev_state;
  long prev_episode = -1;
  double episode_start_x = 0.0;
  double episode_last_x = 0.0;
  double episode_last_time = 0.0;
  double total_time = 0.0;
  bool have_episode = false;

  const auto close_episode = [&]() {
    if (!have_episode) return;
    summary.distance += episode_last_x - episode_start_x;
    total_time += episode_last_time;
    ++summary.episodes;
  };

  std::string line;
  long line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<double> cols;
    cols.reserve(90);
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        cols.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError(path.string() + ":" + std::to_string(line_number) +
                      ": bad value '" + cell + "'");
      }
    }
    const std::size_t expected =
        8 + 13 + 36 + kContactColumns + 7 + 7 + 1;
    if (cols.size() != expected)
      throw IoError(path.string() + ":" + std::to_string(line_number) +
                    ": expected " + std::to_string(expected) + " columns, got " +
                    std::to_string(cols.size()));

    int k = 0;
    ++k;  // step index
    const long episode = static_cast<long>(cols[k++]);
    const double time = cols[k++];
    const double dt = cols[k++];
    Command command(cols[k], cols[k + 1], cols[k + 2]);
    k += 3;
    const double centerline_y = cols[k++];

    RobotState state;
    state.base_position = Eigen::Vector3d(cols[k], cols[k + 1], cols[k + 2]);
    k += 3;
    state.base_orientation =
        Eigen::Quaterniond(cols[k], cols[k + 1], cols[k + 2], cols[k + 3]);
    k += 4;
    state.base_linear_velocity =
        Eigen::Vector3d(cols[k], cols[k + 1], cols[k + 2]);
    k += 3;
    state.base_angular_velocity =
        Eigen::Vector3d(cols[k], cols[k + 1], cols[k + 2]);
    k += 3;
    for (int i = 0; i < 12; ++i) state.q[i] = cols[k++];
    for (int i = 0; i < 12; ++i) state.dq[i] = cols[k++];
    for (int i = 0; i < 12; ++i) state.applied_torques[i] = cols[k++];
    state.contact_forces[kContactBase] = Eigen::Vector3d(cols[k++], 0, 0);
    for (int leg = 0; leg < 4; ++leg)
      state.contact_forces[kContactKnee0 + leg] =
          Eigen::Vector3d(cols[k++], 0, 0);
    for (int leg = 0; leg < 4; ++leg)
      state.contact_forces[kContactHip0 + leg] =
          Eigen::Vector3d(cols[k++], 0, 0);

    RewardWeights weights;
    weights.lin_vel = cols[k++];
    weights.ang_vel = cols[k++];
    weights.torque = cols[k++];
    weights.delta_torques = cols[k++];
    weights.dof_acc = cols[k++];
    weights.collision = cols[k++];
    weights.centerline = cols[k++];

    std::array<double, 7> logged_terms;
    for (double& term : logged_terms) term = cols[k++];
    const double logged_total = cols[k++];

    if (episode != prev_episode) {
      close_episode();
      prev_state = RobotState{};  // zero torque / joint-velocity baseline
      episode_start_x = state.base_position.x();
      have_episode = true;
      prev_episode = episode;
    }

    const RewardBreakdown recomputed = total_reward(
        state, prev_state, command, dt, sampler, centerline_y, weights);

    const auto terms = recomputed.terms();
    for (std::size_t i = 0; i < terms.size(); ++i)
      if (std::abs(terms[i] - logged_terms[i]) > tolerance) ++summary.mismatches;
    if (std::abs(recomputed.total - logged_total) > tolerance)
      ++summary.mismatches;

    summary.term_sums.lin_vel += logged_terms[0];
    summary.term_sums.ang_vel += logged_terms[1];
    summary.term_sums.torque += logged_terms[2];
    summary.term_sums.delta_torques += logged_terms[3];
    summary.term_sums.dof_acc += logged_terms[4];
    summary.term_sums.collision += logged_terms[5];
    summary.term_sums.centerline += logged_terms[6];
    summary.term_sums.total += logged_total;

    ++summary.steps;
    prev_state = state;
    episode_last_x = state.base_position.x();
    episode_last_time = time;
  }
  close_episode();

  summary.mean_speed = total_time > 0.0 ? summary.distance / total_time : 0.0;
  return summary;
}

}  // namespace pipegym
