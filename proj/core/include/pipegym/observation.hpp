#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>

#include <Eigen/Core>

#include "pipegym/env_params.hpp"
#include "pipegym/robot.hpp"
#include "pipegym/terrain.hpp"

namespace pipegym {

inline constexpr int kProprioDim = 47;
inline constexpr int kScanRows = 11;  // along base x
inline constexpr int kScanCols = 12;  // along base y
inline constexpr int kScanDim = kScanRows * kScanCols;
inline constexpr int kEnvVectorDim = 29;
inline constexpr int kPrivilegedDim = 2 * kScanDim + 3 + kEnvVectorDim;  // 296
inline constexpr int kTeacherDim = kProprioDim + kPrivilegedDim;         // 343

inline constexpr double kScanClip = 1.0;        // m, both directions
inline constexpr double kAngVelScale = 0.25;
inline constexpr double kJointPosScale = 1.0;
inline constexpr double kJointVelScale = 0.05;

using ProprioVector = Eigen::Matrix<double, kProprioDim, 1>;
using PrivilegedVector = Eigen::Matrix<double, kPrivilegedDim, 1>;
using ScanVector = Eigen::Matrix<double, kScanDim, 1>;

// command = (forward m/s, lateral m/s, yaw rate rad/s)
using Command = Eigen::Vector3d;

// Body-frame sample offsets for the bidirectional scandots, yaw-aligned.
struct ScanGrid {
  std::array<double, kScanRows> x_offsets;
  std::array<double, kScanCols> y_offsets;

  // 11 x points over [-0.6, 0.6] (0.12 m apart), 12 y points over
  // [-0.33, 0.33] (0.06 m apart): covers the 0.31 m body plus margin.
  static ScanGrid default_grid();
};

// base_z - floor height at each grid point, yaw-only rotation, clipped to
// [-1, 1] m. Points outside the terrain clamp to the field edge.
ScanVector scan_downwards(const RobotState& state, const HeightField& field,
                          const ScanGrid& grid);

// ceiling height - base_z where the virtual ceiling exists, clip maximum
// (1.0 m) where it does not; same grid and clip as the downward scan.
ScanVector scan_upwards(const RobotState& state, const HeightField& field,
                        const ScanGrid& grid);

// Proprioception, ordered [w, imu, g, c, q, dq, a_prev].
// Throws HardFault on non-finite state.
ProprioVector assemble_proprio(const RobotModel& model, const RobotState& state,
                               const Command& command, const Vec12& last_action);

// Privileged vector, ordered [h_down, h_up, v, e].
PrivilegedVector assemble_privileged(const RobotState& state,
                                     const HeightField& field,
                                     const ScanGrid& grid,
                                     const EnvParams& params);

struct ObservationBundle {
  ProprioVector proprio = ProprioVector::Zero();
  PrivilegedVector privileged = PrivilegedVector::Zero();
};

// Head-mounted depth camera, pinhole model with square pixels.
struct CameraModel {
  Eigen::Vector3d offset{0.3, 0.0, 0.05};  // from base geometric center
  double pitch_down = 15.0 * M_PI / 180.0;
  double horizontal_fov = 87.0 * M_PI / 180.0;
  int rows = 58;
  int cols = 87;
  double near_clip = 0.2;  // m
  double far_clip = 2.0;   // m
};

struct DepthImage {
  int rows = 0;
  int cols = 0;
  Eigen::MatrixXd values;  // normalized depth in [-0.5, 0.5]
};

// Ray-marched depth against the floor heightfield and analytic ceiling.
// Per-pixel depth along the optical axis, clipped to [near, far] and
// mapped affinely to [-0.5, 0.5]; misses return +0.5.
DepthImage render_depth(const RobotState& state, const HeightField& field,
                        const CameraModel& camera);

void save_pgm(const DepthImage& image, const std::filesystem::path& path);

// One observation record per line (JSON) for offline verification.
void write_observation_record(std::ostream& out, long step,
                              const ProprioVector& proprio,
                              const PrivilegedVector& privileged);

}  // namespace pipegym
