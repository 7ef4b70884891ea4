#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pipegym/errors.hpp"
#include "pipegym/observation.hpp"

using namespace pipegym;

static_assert(kProprioDim == 47);
static_assert(kPrivilegedDim == 296);
static_assert(kTeacherDim == 343);
static_assert(kScanDim == 132);

namespace {

PipeWorldSpec make_spec(double radius) {
  PipeWorldSpec spec;
  spec.radius = radius;
  return spec;
}

RobotState base_at(double x, double y, double z) {
  RobotState state;
  state.base_position = Eigen::Vector3d(x, y, z);
  return state;
}

// flat floor with a tall wall for all x >= wall_x; no ceiling
HeightField wall_field(double wall_x) {
  const auto path =
      std::filesystem::temp_directory_path() / "pipegym_wall_grid.txt";
  const int rows = 100, cols = 40;
  const double cell = 0.05;
  std::ofstream out(path);
  out << rows << ' ' << cols << ' ' << cell << " 0 -1\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double x = (r + 0.5) * cell;
      out << (c ? " " : "") << (x >= wall_x ? 10.0 : 0.0);
    }
    out << '\n';
  }
  out.close();
  HeightField field = HeightField::load_grid(path);
  std::filesystem::remove(path);
  return field;
}

}  // namespace

TEST_CASE("default scan grid spacing is uniform and spans the body") {
  const ScanGrid grid = ScanGrid::default_grid();
  CHECK(grid.x_offsets.front() == doctest::Approx(-0.6));
  CHECK(grid.x_offsets.back() == doctest::Approx(0.6));
  CHECK(grid.y_offsets.front() == doctest::Approx(-0.33));
  CHECK(grid.y_offsets.back() == doctest::Approx(0.33));
  for (int i = 1; i < kScanRows; ++i)
    CHECK(grid.x_offsets[i] - grid.x_offsets[i - 1] == doctest::Approx(0.12));
  for (int j = 1; j < kScanCols; ++j)
    CHECK(grid.y_offsets[j] - grid.y_offsets[j - 1] == doctest::Approx(0.06));
}

TEST_CASE("downward scan on the flat platform reads the standing height") {
  const PipeWorldSpec spec = make_spec(0.3);
  const HeightField field = HeightField::build(spec);
  const ScanGrid grid = ScanGrid::default_grid();
  const RobotState state = base_at(1.0, 0.0, spec.platform_height() + 0.4);
  const ScanVector scan = scan_downwards(state, field, grid);
  for (int k = 0; k < kScanDim; ++k)
    CHECK(scan[k] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("downward scan sees the concave pipe floor") {
  const HeightField field = HeightField::build(make_spec(0.3));
  const ScanGrid grid = ScanGrid::default_grid();
  const RobotState state = base_at(9.0, 0.0, 0.2);
  const ScanVector scan = scan_downwards(state, field, grid);
  const int mid_row = kScanRows / 2;
  const double center =
      0.5 * (scan[mid_row * kScanCols + 5] + scan[mid_row * kScanCols + 6]);
  const double edge =
      0.5 * (scan[mid_row * kScanCols + 0] + scan[mid_row * kScanCols + 11]);
  CHECK(center > edge);
}

TEST_CASE("yaw-pi scan equals the yaw-0 scan mirrored in x and y") {
  PipeWorldSpec spec = make_spec(0.3);
  std::mt19937_64 rng(9);
  spec.obstacles = sample_obstacles(rng, spec);
  const HeightField field = HeightField::build(spec);
  const ScanGrid grid = ScanGrid::default_grid();

  RobotState forward = base_at(8.3, 0.07, 0.1);
  RobotState backward = forward;
  backward.base_orientation =
      Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitZ()));

  const ScanVector a = scan_downwards(forward, field, grid);
  const ScanVector b = scan_downwards(backward, field, grid);
  for (int i = 0; i < kScanRows; ++i)
    for (int j = 0; j < kScanCols; ++j)
      CHECK(b[i * kScanCols + j] ==
            doctest::Approx(a[(kScanRows - 1 - i) * kScanCols +
                              (kScanCols - 1 - j)])
                .epsilon(1e-6));
}

TEST_CASE("scan values are invariant to yaw on flat terrain") {
  const HeightField field = HeightField::build(make_spec(0.3));
  const ScanGrid grid = ScanGrid::default_grid();
  RobotState state = base_at(1.0, 0.0, 0.4);
  const ScanVector ref = scan_downwards(state, field, grid);
  for (double yaw : {0.3, 1.2, -2.2}) {
    state.base_orientation =
        Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
    const ScanVector rotated = scan_downwards(state, field, grid);
    for (int k = 0; k < kScanDim; ++k)
      CHECK(rotated[k] == doctest::Approx(ref[k]).epsilon(1e-6));
  }
}

TEST_CASE("upward scan: open platform returns the clip maximum") {
  const HeightField field = HeightField::build(make_spec(0.3));
  const ScanGrid grid = ScanGrid::default_grid();
  const RobotState state = base_at(1.0, 0.0, 0.4);
  const ScanVector scan = scan_upwards(state, field, grid);
  for (int k = 0; k < kScanDim; ++k) CHECK(scan[k] == 1.0);
}

TEST_CASE("upward scan reads the analytic ceiling") {
  const PipeWorldSpec spec = make_spec(0.2);
  const HeightField field = HeightField::build(spec);
  const ScanGrid grid = ScanGrid::default_grid();
  const RobotState state = base_at(9.0, 0.0, 0.0);  // at axis height
  const ScanVector scan = scan_upwards(state, field, grid);
  for (int i = 0; i < kScanRows; ++i) {
    for (int j = 0; j < kScanCols; ++j) {
      const double y = grid.y_offsets[j];
      const auto ceiling = ceiling_height_at(spec, y);
      const double expected = ceiling ? std::min(*ceiling, 1.0) : 1.0;
      CHECK(scan[i * kScanCols + j] == doctest::Approx(expected).epsilon(1e-9));
    }
  }
  // near the centerline the gap to the ceiling is the radius
  CHECK(scan[5 * kScanCols + 5] == doctest::Approx(0.2).epsilon(0.01));
}

TEST_CASE("bidirectional consistency: up + down equals the local gap") {
  const PipeWorldSpec spec = make_spec(0.3);
  const HeightField field = HeightField::build(spec);
  const ScanGrid grid = ScanGrid::default_grid();
  const RobotState state = base_at(9.0, 0.0, -0.05);
  const ScanVector down = scan_downwards(state, field, grid);
  const ScanVector up = scan_upwards(state, field, grid);
  for (int i = 0; i < kScanRows; ++i) {
    for (int j = 0; j < kScanCols; ++j) {
      const int k = i * kScanCols + j;
      const double x = 9.0 + grid.x_offsets[i];
      const double y = grid.y_offsets[j];
      const auto ceiling = field.ceiling_at(x, y);
      if (!ceiling) continue;
      const bool unclipped = std::abs(down[k]) < 1.0 && std::abs(up[k]) < 1.0;
      if (!unclipped) continue;
      const double gap = *ceiling - field.height_at(x, y);
      CHECK(down[k] + up[k] == doctest::Approx(gap).epsilon(1e-12));
      // within one cell of the analytic chord
      const double chord = 2.0 * std::sqrt(std::max(
                               0.0, spec.radius * spec.radius - y * y));
      CHECK(std::abs((down[k] + up[k]) - chord) <= spec.cell_size);
    }
  }
}

TEST_CASE("scan entries always stay inside the clip range") {
  const HeightField field = HeightField::build(make_spec(0.2));
  const ScanGrid grid = ScanGrid::default_grid();
  for (double z : {-2.0, 0.0, 3.0}) {
    const RobotState state = base_at(9.0, 0.0, z);
    const ScanVector down = scan_downwards(state, field, grid);
    const ScanVector up = scan_upwards(state, field, grid);
    for (int k = 0; k < kScanDim; ++k) {
      CHECK(down[k] >= -1.0);
      CHECK(down[k] <= 1.0);
      CHECK(up[k] >= -1.0);
      CHECK(up[k] <= 1.0);
    }
  }
}

TEST_CASE("proprioception layout and scaling") {
  const RobotModel model;
  RobotState state;
  state.base_position = Eigen::Vector3d(1, 0, 0.4);
  state.q = model.default_pose();
  const Command command(0.0, 0.0, 0.0);
  const Vec12 last_action = Vec12::Zero();

  SUBCASE("default pose at rest is all zero except gravity") {
    const ProprioVector obs = assemble_proprio(model, state, command, last_action);
    CHECK(obs.size() == 47);
    for (int i = 0; i < 5; ++i) CHECK(obs[i] == 0.0);
    CHECK(obs[5] == 0.0);
    CHECK(obs[6] == 0.0);
    CHECK(obs[7] == -1.0);  // gravity in the base frame
    for (int i = 8; i < 47; ++i) CHECK(obs[i] == 0.0);
  }

  SUBCASE("pure yaw leaves the gravity slots unchanged") {
    state.base_orientation =
        Eigen::Quaterniond(Eigen::AngleAxisd(1.1, Eigen::Vector3d::UnitZ()));
    const ProprioVector obs = assemble_proprio(model, state, command, last_action);
    CHECK(obs[5] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(obs[6] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(obs[7] == doctest::Approx(-1.0).epsilon(1e-12));
  }

  SUBCASE("roll passes through to the IMU slot") {
    state.base_orientation =
        Eigen::Quaterniond(Eigen::AngleAxisd(0.1, Eigen::Vector3d::UnitX()));
    const ProprioVector obs = assemble_proprio(model, state, command, last_action);
    CHECK(obs[3] == doctest::Approx(0.1).epsilon(1e-9));
  }

  SUBCASE("angular velocity and joint velocity scales") {
    state.base_angular_velocity = Eigen::Vector3d(0, 0, 2.0);
    state.dq[0] = 4.0;
    const ProprioVector obs = assemble_proprio(model, state, command, last_action);
    CHECK(obs[2] == doctest::Approx(2.0 * 0.25));
    CHECK(obs[23] == doctest::Approx(4.0 * 0.05));
  }

  SUBCASE("non-finite state is a hard fault") {
    state.dq[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(assemble_proprio(model, state, command, last_action),
                    HardFault);
  }
}

TEST_CASE("privileged vector layout") {
  const HeightField field = HeightField::build(make_spec(0.3));
  const ScanGrid grid = ScanGrid::default_grid();
  RobotState state;
  state.base_position = Eigen::Vector3d(9.0, 0.0, 0.1);
  EnvParams params;
  params.added_base_mass = 1.5;
  params.com_offset = Eigen::Vector3d(0.01, -0.02, 0.005);
  params.foot_friction = 1.3;
  params.motor_strength = Vec24::Constant(1.05);

  const PrivilegedVector priv = assemble_privileged(state, field, grid, params);
  CHECK(priv.size() == 296);

  const ScanVector down = scan_downwards(state, field, grid);
  const ScanVector up = scan_upwards(state, field, grid);
  for (int k = 0; k < kScanDim; ++k) {
    CHECK(priv[k] == down[k]);
    CHECK(priv[kScanDim + k] == up[k]);
  }
  // zero-velocity state leaves the velocity slots zero
  CHECK(priv[264] == 0.0);
  CHECK(priv[265] == 0.0);
  CHECK(priv[266] == 0.0);
  // e_t = [mass(4), friction(1), strength(24)]
  CHECK(priv[267] == 1.5);
  CHECK(priv[268] == 0.01);
  CHECK(priv[269] == -0.02);
  CHECK(priv[270] == 0.005);
  CHECK(priv[271] == 1.3);
  for (int i = 0; i < 24; ++i) CHECK(priv[272 + i] == 1.05);
  CHECK(params.environment_vector().size() == 29);
}

TEST_CASE("depth: open sky renders the far clip everywhere") {
  const HeightField field = HeightField::build(make_spec(0.3));
  CameraModel camera;
  camera.pitch_down = -0.75;  // pitched up past the FOV: every ray ascends
  RobotState state = base_at(1.0, 0.0, 0.4);
  const DepthImage image = render_depth(state, field, camera);
  CHECK(image.rows == 58);
  CHECK(image.cols == 87);
  for (int r = 0; r < image.rows; ++r)
    for (int c = 0; c < image.cols; ++c)
      CHECK(image.values(r, c) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("depth: affine map of an exact nadir distance") {
  const HeightField field = wall_field(1e9);  // flat floor at zero
  CameraModel camera;
  camera.pitch_down = M_PI / 2.0;  // straight down
  camera.offset = Eigen::Vector3d::Zero();
  RobotState state = base_at(2.0, -0.5, 1.2);
  const DepthImage image = render_depth(state, field, camera);
  const double center = image.values(image.rows / 2, image.cols / 2);
  // oracle: (1.2 - 0.2)/(2.0 - 0.2) - 0.5
  CHECK(center == doctest::Approx((1.2 - 0.2) / 1.8 - 0.5).epsilon(1e-3));
}

TEST_CASE("depth: wall one metre ahead maps through the affine range") {
  const HeightField field = wall_field(2.0);
  CameraModel camera;
  camera.pitch_down = 0.0;
  camera.offset = Eigen::Vector3d::Zero();
  RobotState state = base_at(1.0, 0.0, 0.45);
  const DepthImage image = render_depth(state, field, camera);
  const double oracle = (1.0 - 0.2) / 1.8 - 0.5;
  CHECK(oracle == doctest::Approx(-0.0555555).epsilon(1e-4));
  const double center = image.values(image.rows / 2, image.cols / 2);
  // wall face is resolved to within one grid cell
  CHECK(std::abs(center - oracle) < 0.03);
}

TEST_CASE("depth inside the pipe: ceiling pixels are closer than far pixels") {
  const HeightField field = HeightField::build(make_spec(0.3));
  CameraModel camera;
  RobotState state = base_at(6.0, 0.0, -0.05);
  const DepthImage image = render_depth(state, field, camera);
  double top = 0.0, center = 0.0;
  for (int c = 0; c < image.cols; ++c) {
    top += image.values(0, c);
    center += image.values(image.rows / 2, c);
  }
  CHECK(top < center);
  for (int r = 0; r < image.rows; ++r)
    for (int c = 0; c < image.cols; ++c) {
      CHECK(image.values(r, c) >= -0.5);
      CHECK(image.values(r, c) <= 0.5);
    }
}

TEST_CASE("depth image saves as a pgm with matching dimensions") {
  const HeightField field = HeightField::build(make_spec(0.3));
  const DepthImage image = render_depth(base_at(6.0, 0.0, -0.05), field, {});
  const auto path = std::filesystem::temp_directory_path() / "pipegym_depth.pgm";
  save_pgm(image, path);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w, h;
  in >> magic >> w >> h;
  CHECK(magic == "P5");
  CHECK(w == 87);
  CHECK(h == 58);
  std::filesystem::remove(path);
}

TEST_CASE("observation records are valid json lines") {
  std::ostringstream out;
  write_observation_record(out, 7, ProprioVector::Ones(),
                           PrivilegedVector::Zero());
  write_observation_record(out, 8, ProprioVector::Zero(),
                           PrivilegedVector::Ones());
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto record = nlohmann::json::parse(line);
    CHECK(record["proprio"].size() == 47);
    CHECK(record["privileged"].size() == 296);
    ++lines;
  }
  CHECK(lines == 2);
}
