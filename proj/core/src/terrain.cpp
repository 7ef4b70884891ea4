#include "pipegym/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pipegym/curriculum.hpp"
#include "pipegym/errors.hpp"

namespace pipegym {

namespace {

constexpr double kBoundsEps = 1e-9;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t cell_index) {
  // splitmix64 step keyed by the cell index
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (cell_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

void PipeWorldSpec::validate() const {
  if (radius <= 0.0) throw ConfigError("pipe spec: radius must be > 0");
  if (pipe_length <= 0.0) throw ConfigError("pipe spec: pipe_length must be > 0");
  if (platform_length <= 0.0)
    throw ConfigError("pipe spec: platform_length must be > 0");
  if (sub_terrain_width <= 0.0)
    throw ConfigError("pipe spec: sub_terrain_width must be > 0");
  if (cell_size <= 0.0) throw ConfigError("pipe spec: cell_size must be > 0");
  if (obstacles.size() > 4)
    throw ConfigError("pipe spec: at most 4 obstacles allowed");
  for (const ObstacleSpec& obstacle : obstacles) {
    if (obstacle.x_start < platform_length ||
        obstacle.x_start + obstacle.length > x_end())
      throw ConfigError("pipe spec: obstacle outside the pipe section");
    if (obstacle.height <= 0.0 || obstacle.length <= 0.0 || obstacle.width <= 0.0)
      throw ConfigError("pipe spec: obstacle dimensions must be > 0");
  }
}

double pipe_floor_profile(const PipeWorldSpec& spec, double y) {
  const double dy = y - spec.centerline_y;
  if (std::abs(dy) >= spec.radius) return spec.centerline_z;
  return spec.centerline_z - std::sqrt(spec.radius * spec.radius - dy * dy);
}

double floor_height_at(const PipeWorldSpec& spec, double x, double y) {
  const double half_width = 0.5 * spec.sub_terrain_width;
  if (x < -kBoundsEps || x > spec.total_length() + kBoundsEps ||
      y < spec.centerline_y - half_width - kBoundsEps ||
      y > spec.centerline_y + half_width + kBoundsEps) {
    throw std::domain_error("floor_height_at: coordinates outside sub-terrain");
  }

  if (x < spec.platform_length) return spec.platform_height();

  double h = pipe_floor_profile(spec, y);
  // one-cell rim at the pipe entrance
  if (x < spec.platform_length + spec.cell_size) h += spec.entrance_lift;

  for (const ObstacleSpec& obstacle : spec.obstacles) {
    const double center_y = spec.centerline_y + obstacle.y_offset;
    if (x >= obstacle.x_start && x < obstacle.x_start + obstacle.length &&
        std::abs(y - center_y) <= 0.5 * obstacle.width) {
      h += obstacle.height;
    }
  }
  return h;
}

std::optional<double> ceiling_height_at(const PipeWorldSpec& spec, double y) {
  const double dy = y - spec.centerline_y;
  if (std::abs(dy) > spec.radius) return std::nullopt;
  return spec.centerline_z +
         std::sqrt(std::max(0.0, spec.radius * spec.radius - dy * dy));
}

std::vector<ObstacleSpec> sample_obstacles(std::mt19937_64& rng,
                                           const PipeWorldSpec& spec) {
  std::uniform_int_distribution<int> count_dist(0, 4);
  std::uniform_real_distribution<double> height_dist(0.1, 0.3);
  std::uniform_real_distribution<double> length_dist(0.2, 0.5);
  constexpr double kWidth = 0.1;

  const int count = count_dist(rng);
  const double x_min = spec.platform_length + 1.0;  // keep the entrance clear

  std::vector<ObstacleSpec> placed;
  placed.reserve(count);
  for (int i = 0; i < count; ++i) {
    bool accepted = false;
    for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
      ObstacleSpec candidate;
      candidate.height = height_dist(rng);
      candidate.length = length_dist(rng);
      candidate.width = kWidth;
      const double x_max = spec.x_end() - candidate.length;
      if (x_max <= x_min) break;  // pipe too short for this obstacle
      candidate.x_start =
          std::uniform_real_distribution<double>(x_min, x_max)(rng);
      const double lateral = std::max(0.0, spec.radius - candidate.width);
      candidate.y_offset =
          std::uniform_real_distribution<double>(-lateral, lateral)(rng);

      const bool overlaps = std::any_of(
          placed.begin(), placed.end(), [&](const ObstacleSpec& other) {
            return candidate.x_start < other.x_start + other.length &&
                   other.x_start < candidate.x_start + candidate.length;
          });
      if (!overlaps) {
        placed.push_back(candidate);
        accepted = true;
      }
    }
  }
  return placed;
}

HeightField HeightField::build(const PipeWorldSpec& spec) {
  spec.validate();
  HeightField field;
  field.rows_ = static_cast<int>(std::lround(spec.total_length() / spec.cell_size));
  field.cols_ =
      static_cast<int>(std::lround(spec.sub_terrain_width / spec.cell_size));
  if (field.rows_ < 1 || field.cols_ < 1)
    throw ConfigError("height field: grid resolves to zero cells");
  field.cell_size_ = spec.cell_size;
  field.origin_x_ = 0.0;
  field.origin_y_ = spec.centerline_y - 0.5 * spec.sub_terrain_width;
  field.pipe_start_x_ = spec.platform_length;
  field.ceiling_ = {spec.radius, spec.centerline_y, spec.centerline_z};
  field.floor_.resize(static_cast<std::size_t>(field.rows_) * field.cols_);
  for (int row = 0; row < field.rows_; ++row) {
    const double x = field.cell_center_x(row);
    for (int col = 0; col < field.cols_; ++col) {
      const double y = field.cell_center_y(col);
      field.floor_[row * field.cols_ + col] = floor_height_at(spec, x, y);
    }
  }
  return field;
}

bool HeightField::contains(double x, double y) const {
  return x >= origin_x_ && x <= origin_x_ + size_x() && y >= origin_y_ &&
         y <= origin_y_ + size_y();
}

double HeightField::height_at(double x, double y) const {
  // node space: grid values live at cell centers
  const double gx = std::clamp((x - origin_x_) / cell_size_ - 0.5, 0.0,
                               static_cast<double>(rows_ - 1));
  const double gy = std::clamp((y - origin_y_) / cell_size_ - 0.5, 0.0,
                               static_cast<double>(cols_ - 1));
  const int i0 = std::min(static_cast<int>(gx), rows_ - 2 >= 0 ? rows_ - 2 : 0);
  const int j0 = std::min(static_cast<int>(gy), cols_ - 2 >= 0 ? cols_ - 2 : 0);
  const int i1 = std::min(i0 + 1, rows_ - 1);
  const int j1 = std::min(j0 + 1, cols_ - 1);
  const double u = gx - i0;
  const double v = gy - j0;
  const double h00 = at(i0, j0);
  const double h10 = at(i1, j0);
  const double h01 = at(i0, j1);
  const double h11 = at(i1, j1);
  return h00 * (1 - u) * (1 - v) + h10 * u * (1 - v) + h01 * (1 - u) * v +
         h11 * u * v;
}

Eigen::Vector3d HeightField::normal_at(double x, double y) const {
  const double gx = std::clamp((x - origin_x_) / cell_size_ - 0.5, 0.0,
                               static_cast<double>(rows_ - 1));
  const double gy = std::clamp((y - origin_y_) / cell_size_ - 0.5, 0.0,
                               static_cast<double>(cols_ - 1));
  const int i0 = std::min(static_cast<int>(gx), rows_ - 2 >= 0 ? rows_ - 2 : 0);
  const int j0 = std::min(static_cast<int>(gy), cols_ - 2 >= 0 ? cols_ - 2 : 0);
  const int i1 = std::min(i0 + 1, rows_ - 1);
  const int j1 = std::min(j0 + 1, cols_ - 1);
  const double u = gx - i0;
  const double v = gy - j0;
  const double h00 = at(i0, j0);
  const double h10 = at(i1, j0);
  const double h01 = at(i0, j1);
  const double h11 = at(i1, j1);
  const double dhdx =
      ((h10 - h00) * (1 - v) + (h11 - h01) * v) / cell_size_;
  const double dhdy =
      ((h01 - h00) * (1 - u) + (h11 - h10) * u) / cell_size_;
  return Eigen::Vector3d(-dhdx, -dhdy, 1.0).normalized();
}

std::optional<double> HeightField::ceiling_at(double x, double y) const {
  if (ceiling_.radius <= 0.0) return std::nullopt;
  if (x < pipe_start_x_ || x > origin_x_ + size_x()) return std::nullopt;
  const double dy = y - ceiling_.centerline_y;
  if (std::abs(dy) > ceiling_.radius) return std::nullopt;
  return ceiling_.centerline_z +
         std::sqrt(std::max(0.0, ceiling_.radius * ceiling_.radius - dy * dy));
}

double HeightField::min_height() const {
  return *std::min_element(floor_.begin(), floor_.end());
}

double HeightField::max_height() const {
  return *std::max_element(floor_.begin(), floor_.end());
}

void HeightField::save_grid(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << rows_ << ' ' << cols_ << ' ' << std::setprecision(17) << cell_size_
      << ' ' << origin_x_ << ' ' << origin_y_ << '\n';
  out << std::fixed << std::setprecision(6);
  for (int row = 0; row < rows_; ++row) {
    for (int col = 0; col < cols_; ++col) {
      if (col > 0) out << ' ';
      out << at(row, col);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

HeightField HeightField::load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  HeightField field;
  if (!(in >> field.rows_ >> field.cols_ >> field.cell_size_ >>
        field.origin_x_ >> field.origin_y_))
    throw IoError("malformed grid header in " + path.string());
  if (field.rows_ < 1 || field.cols_ < 1 || field.cell_size_ <= 0.0)
    throw IoError("invalid grid dimensions in " + path.string());
  field.floor_.resize(static_cast<std::size_t>(field.rows_) * field.cols_);
  for (double& value : field.floor_) {
    if (!(in >> value)) throw IoError("truncated grid data in " + path.string());
  }
  return field;
}

void HeightField::save_pgm(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const double lo = min_height();
  const double hi = max_height();
  const double span = hi - lo;
  out << "P5\n" << cols_ << ' ' << rows_ << "\n255\n";
  for (int row = 0; row < rows_; ++row) {
    for (int col = 0; col < cols_; ++col) {
      const double t = span > 0.0 ? (at(row, col) - lo) / span : 0.0;
      out.put(static_cast<char>(std::lround(t * 255.0)));
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void TerrainGridConfig::validate() const {
  if (level_rows < 1) throw ConfigError("terrain grid: need at least one level");
  if (columns < 1) throw ConfigError("terrain grid: need at least one column");
  if (radius_min <= 0.0 || radius_min > radius_max)
    throw ConfigError("terrain grid: empty radius interval");
}

TerrainGrid::TerrainGrid(const TerrainGridConfig& config) : config_(config) {
  config_.validate();
  specs_.reserve(static_cast<std::size_t>(config_.level_rows) * config_.columns);
  field_cache_.resize(static_cast<std::size_t>(config_.level_rows) *
                      config_.columns);
  for (int level = 0; level < config_.level_rows; ++level) {
    for (int column = 0; column < config_.columns; ++column) {
      PipeWorldSpec spec = config_.base;
      spec.radius = level_radius(level);
      spec.seed = mix_seed(config_.seed,
                           static_cast<std::uint64_t>(level) * config_.columns +
                               column);
      spec.obstacles.clear();
      if (config_.obstacles_enabled) {
        std::mt19937_64 rng(spec.seed);
        spec.obstacles = sample_obstacles(rng, spec);
      }
      specs_.push_back(std::move(spec));
    }
  }
}

double TerrainGrid::level_radius(int level) const {
  StageSpec interval;
  interval.radius_min = config_.radius_min;
  interval.radius_max = config_.radius_max;
  return radius_for_level(interval, level, config_.level_rows - 1);
}

const PipeWorldSpec& TerrainGrid::spec(int level, int column) const {
  return specs_.at(static_cast<std::size_t>(level) * config_.columns + column);
}

std::shared_ptr<const HeightField> TerrainGrid::field(int level,
                                                      int column) const {
  const std::size_t index =
      static_cast<std::size_t>(level) * config_.columns + column;
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto& slot = field_cache_.at(index);
  if (!slot) slot = std::make_shared<HeightField>(HeightField::build(spec(level, column)));
  return slot;
}

}  // namespace pipegym
