#include "pipegym/observation.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "pipegym/errors.hpp"

namespace pipegym {

namespace {

double base_yaw(const Eigen::Quaterniond& rot) {
  return std::atan2(2.0 * (rot.w() * rot.z() + rot.x() * rot.y()),
                    1.0 - 2.0 * (rot.y() * rot.y() + rot.z() * rot.z()));
}

double clip_scan(double value) {
  return std::clamp(value, -kScanClip, kScanClip);
}

}  // namespace

ScanGrid ScanGrid::default_grid() {
  ScanGrid grid;
  for (int i = 0; i < kScanRows; ++i) grid.x_offsets[i] = -0.6 + 0.12 * i;
  for (int j = 0; j < kScanCols; ++j) grid.y_offsets[j] = -0.33 + 0.06 * j;
  return grid;
}

ScanVector scan_downwards(const RobotState& state, const HeightField& field,
                          const ScanGrid& grid) {
  const double yaw = base_yaw(state.base_orientation);
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double bx = state.base_position.x();
  const double by = state.base_position.y();
  const double bz = state.base_position.z();

  ScanVector out;
  for (int i = 0; i < kScanRows; ++i) {
    for (int j = 0; j < kScanCols; ++j) {
      const double px = bx + c * grid.x_offsets[i] - s * grid.y_offsets[j];
      const double py = by + s * grid.x_offsets[i] + c * grid.y_offsets[j];
      out[i * kScanCols + j] = clip_scan(bz - field.height_at(px, py));
    }
  }
  return out;
}

ScanVector scan_upwards(const RobotState& state, const HeightField& field,
                        const ScanGrid& grid) {
  const double yaw = base_yaw(state.base_orientation);
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double bx = state.base_position.x();
  const double by = state.base_position.y();
  const double bz = state.base_position.z();

  ScanVector out;
  for (int i = 0; i < kScanRows; ++i) {
    for (int j = 0; j < kScanCols; ++j) {
      const double px = bx + c * grid.x_offsets[i] - s * grid.y_offsets[j];
      const double py = by + s * grid.x_offsets[i] + c * grid.y_offsets[j];
      const auto ceiling = field.ceiling_at(px, py);
      out[i * kScanCols + j] =
          ceiling ? clip_scan(*ceiling - bz) : kScanClip;
    }
  }
  return out;
}

ProprioVector assemble_proprio(const RobotModel& model, const RobotState& state,
                               const Command& command,
                               const Vec12& last_action) {
  if (!state.finite())
    throw HardFault("assemble_proprio: non-finite robot state");

  ProprioVector obs;
  obs.segment<3>(0) = state.angular_velocity_body() * kAngVelScale;
  obs[3] = state.roll();
  obs[4] = state.pitch();
  obs.segment<3>(5) = state.gravity_body();
  obs.segment<3>(8) = command;
  obs.segment<12>(11) = (state.q - model.default_pose()) * kJointPosScale;
  obs.segment<12>(23) = state.dq * kJointVelScale;
  obs.segment<12>(35) = last_action;
  return obs;
}

PrivilegedVector assemble_privileged(const RobotState& state,
                                     const HeightField& field,
                                     const ScanGrid& grid,
                                     const EnvParams& params) {
  PrivilegedVector priv;
  priv.segment<kScanDim>(0) = scan_downwards(state, field, grid);
  priv.segment<kScanDim>(kScanDim) = scan_upwards(state, field, grid);
  priv.segment<3>(2 * kScanDim) =
      state.base_orientation.conjugate() * state.base_linear_velocity;
  priv.segment<kEnvVectorDim>(2 * kScanDim + 3) = params.environment_vector();
  return priv;
}

DepthImage render_depth(const RobotState& state, const HeightField& field,
                        const CameraModel& camera) {
  DepthImage image;
  image.rows = camera.rows;
  image.cols = camera.cols;
  image.values.resize(camera.rows, camera.cols);

  const Eigen::Quaterniond pitch(
      Eigen::AngleAxisd(camera.pitch_down, Eigen::Vector3d::UnitY()));
  const Eigen::Quaterniond cam_rot = state.base_orientation * pitch;
  const Eigen::Vector3d cam_pos =
      state.base_position + state.base_orientation * camera.offset;

  const double focal =
      0.5 * (camera.cols - 1) / std::tan(0.5 * camera.horizontal_fov);
  const double span = camera.far_clip - camera.near_clip;
  constexpr double kMarchStep = 0.01;

  // the virtual ceiling is a thin shell: solid when crossed from below,
  // open above (rays over the pipe must not register hits)
  constexpr double kCeilingShell = 0.05;
  const auto clearance = [&](const Eigen::Vector3d& p) {
    double c = p.z() - field.height_at(p.x(), p.y());
    if (const auto ceiling = field.ceiling_at(p.x(), p.y())) {
      if (p.z() <= *ceiling + kCeilingShell) c = std::min(c, *ceiling - p.z());
    }
    return c;
  };

  for (int row = 0; row < camera.rows; ++row) {
    for (int col = 0; col < camera.cols; ++col) {
      const double u = (col - 0.5 * (camera.cols - 1)) / focal;
      const double v = (row - 0.5 * (camera.rows - 1)) / focal;
      const Eigen::Vector3d dir_cam = Eigen::Vector3d(1.0, -u, -v).normalized();
      const Eigen::Vector3d dir = cam_rot * dir_cam;
      const double axis_cos = dir_cam.x();  // optical-axis depth per unit t
      const double t_max = camera.far_clip / axis_cos;

      double depth = camera.far_clip;  // miss -> far clip
      double t_prev = 0.0;
      double c_prev = clearance(cam_pos);
      if (c_prev <= 0.0) {
        depth = 0.0;  // camera already inside geometry
      } else {
        for (double t = kMarchStep; t <= t_max; t += kMarchStep) {
          const Eigen::Vector3d p = cam_pos + t * dir;
          const double c = clearance(p);
          if (c <= 0.0) {
            double lo = t_prev, hi = t;
            for (int it = 0; it < 30; ++it) {
              const double mid = 0.5 * (lo + hi);
              (clearance(cam_pos + mid * dir) > 0.0 ? lo : hi) = mid;
            }
            depth = 0.5 * (lo + hi) * axis_cos;
            break;
          }
          t_prev = t;
          c_prev = c;
        }
      }

      const double clipped =
          std::clamp(depth, camera.near_clip, camera.far_clip);
      image.values(row, col) = (clipped - camera.near_clip) / span - 0.5;
    }
  }
  return image;
}

void save_pgm(const DepthImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.cols << ' ' << image.rows << "\n255\n";
  for (int row = 0; row < image.rows; ++row)
    for (int col = 0; col < image.cols; ++col)
      out.put(static_cast<char>(
          std::lround((image.values(row, col) + 0.5) * 255.0)));
  if (!out) throw IoError("failed writing " + path.string());
}

void write_observation_record(std::ostream& out, long step,
                              const ProprioVector& proprio,
                              const PrivilegedVector& privileged) {
  nlohmann::json record;
  record["step"] = step;
  record["proprio"] = std::vector<double>(proprio.data(),
                                          proprio.data() + proprio.size());
  record["privileged"] = std::vector<double>(
      privileged.data(), privileged.data() + privileged.size());
  out << record.dump() << '\n';
}

}  // namespace pipegym
