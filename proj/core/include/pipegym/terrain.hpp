#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace pipegym {

// Box obstacle resting on the pipe floor.
struct ObstacleSpec {
  double x_start = 0.0;   // m, along the pipe axis
  double length = 0.2;    // m
  double width = 0.1;     // m
  double height = 0.1;    // m
  double y_offset = 0.0;  // m, obstacle center relative to the pipe centerline
};

// One sub-terrain: a flat spawn platform followed by a half-pipe channel.
// World frame: x along the pipe axis starting at the platform edge,
// y lateral, z up. The pipe centerline runs at (y0, z0).
struct PipeWorldSpec {
  double radius = 0.5;            // m
  double pipe_length = 16.0;      // m
  double platform_length = 2.0;   // m
  double sub_terrain_width = 4.0; // m
  double centerline_y = 0.0;      // m (y0)
  double centerline_z = 0.0;      // m (z0)
  double entrance_lift = 0.1;     // m, rim at the pipe entrance
  double cell_size = 0.05;        // m, grid resolution
  std::uint64_t seed = 0;
  std::vector<ObstacleSpec> obstacles;

  double total_length() const { return platform_length + pipe_length; }
  double x_end() const { return platform_length + pipe_length; }
  // platform sits level with the pipe bottom, so the entrance is the
  // 0.1 m rim rather than a radius-deep drop
  double platform_height() const { return centerline_z - radius; }

  // Throws ConfigError on non-positive dimensions or bad obstacle ranges.
  void validate() const;
};

// Cross-section floor profile without platform/entrance/obstacles:
// z0 - sqrt(r^2 - (y-y0)^2), clamped to the wall top z0 for |y-y0| >= r.
double pipe_floor_profile(const PipeWorldSpec& spec, double y);

// Analytic floor height including platform, entrance rim and obstacles.
// Throws std::domain_error for (x, y) outside the sub-terrain bounds.
double floor_height_at(const PipeWorldSpec& spec, double x, double y);

// Analytic virtual ceiling of the pipe cross-section:
// z0 + sqrt(r^2 - (y-y0)^2) where |y-y0| < r, nullopt elsewhere.
std::optional<double> ceiling_height_at(const PipeWorldSpec& spec, double y);

// Draws 0..4 non-overlapping obstacles inside the pipe section, skipping
// the first metre after the entrance. Gives up on an obstacle after 100
// placement rejections, so the result may have fewer than the drawn count.
std::vector<ObstacleSpec> sample_obstacles(std::mt19937_64& rng,
                                           const PipeWorldSpec& spec);

// Discretized floor grid plus the analytic ceiling parameters.
// Immutable after construction; safe to share across environment workers.
class HeightField {
 public:
  struct CeilingParams {
    double radius = 0.0;  // 0 disables the ceiling
    double centerline_y = 0.0;
    double centerline_z = 0.0;
  };

  HeightField() = default;

  // Samples floor_height_at at cell centers. Throws ConfigError on
  // non-positive cell_size.
  static HeightField build(const PipeWorldSpec& spec);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double cell_size() const { return cell_size_; }
  double origin_x() const { return origin_x_; }
  double origin_y() const { return origin_y_; }
  double size_x() const { return rows_ * cell_size_; }
  double size_y() const { return cols_ * cell_size_; }
  double pipe_start_x() const { return pipe_start_x_; }

  double at(int row, int col) const { return floor_[row * cols_ + col]; }
  double cell_center_x(int row) const { return origin_x_ + (row + 0.5) * cell_size_; }
  double cell_center_y(int col) const { return origin_y_ + (col + 0.5) * cell_size_; }

  bool contains(double x, double y) const;

  // Bilinear floor height; coordinates outside the grid clamp to the edge.
  double height_at(double x, double y) const;

  // Unit surface normal of the bilinear floor patch at (x, y).
  Eigen::Vector3d normal_at(double x, double y) const;

  // Virtual ceiling height; nullopt over the platform and outside the
  // pipe cross-section.
  std::optional<double> ceiling_at(double x, double y) const;

  const CeilingParams& ceiling_params() const { return ceiling_; }

  double min_height() const;
  double max_height() const;

  // Text format: "rows cols cell_size origin_x origin_y" header, then
  // row-major heights with 6 decimal places.
  void save_grid(const std::filesystem::path& path) const;
  static HeightField load_grid(const std::filesystem::path& path);

  // 8-bit grayscale preview, heights normalized to [min, max].
  void save_pgm(const std::filesystem::path& path) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  double cell_size_ = 0.0;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  double pipe_start_x_ = 0.0;
  CeilingParams ceiling_;
  std::vector<double> floor_;
};

// Matrix of sub-terrain specs: rows are curriculum levels with
// non-increasing radius, columns vary only the seed.
struct TerrainGridConfig {
  int level_rows = 10;
  int columns = 40;
  double radius_max = 0.5;  // level 0
  double radius_min = 0.3;  // last level
  bool obstacles_enabled = false;
  std::uint64_t seed = 0;
  PipeWorldSpec base;  // geometry template; radius/seed/obstacles filled per cell

  void validate() const;
};

class TerrainGrid {
 public:
  explicit TerrainGrid(const TerrainGridConfig& config);

  int levels() const { return config_.level_rows; }
  int columns() const { return config_.columns; }
  double level_radius(int level) const;
  const PipeWorldSpec& spec(int level, int column) const;

  // Lazily built, cached heightfield for one cell.
  std::shared_ptr<const HeightField> field(int level, int column) const;

 private:
  TerrainGridConfig config_;
  std::vector<PipeWorldSpec> specs_;
  mutable std::mutex cache_mutex_;
  mutable std::vector<std::shared_ptr<const HeightField>> field_cache_;
};

}  // namespace pipegym
