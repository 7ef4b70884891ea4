#include "pipegym/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "pipegym/errors.hpp"

namespace pipegym {

namespace {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double value = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value '" + text + "' for " + where);
  }
}

int parse_int(const std::string& text, const std::string& where) {
  try {
    std::size_t pos = 0;
    const long value = std::stol(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return static_cast<int>(value);
  } catch (const std::exception&) {
    throw ConfigError("bad integer value '" + text + "' for " + where);
  }
}

bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("bad boolean value '" + text + "' for " + where);
}

struct Binding {
  std::string section;
  std::string key;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

std::vector<Binding> make_bindings() {
  std::vector<Binding> bindings;

  // [terrain]
  const auto td = [&](const std::string& key, double TerrainConfig::*m) {
    bindings.push_back(
        {"terrain", key,
         [m](const Config& c) { return format_double(c.terrain.*m); },
         [m, key](Config& c, const std::string& v) {
           c.terrain.*m = parse_double(v, "terrain." + key);
         }});
  };
  td("platform_length", &TerrainConfig::platform_length);
  td("pipe_length", &TerrainConfig::pipe_length);
  td("sub_terrain_width", &TerrainConfig::sub_terrain_width);
  td("cell_size", &TerrainConfig::cell_size);
  td("entrance_lift", &TerrainConfig::entrance_lift);
  td("centerline_z", &TerrainConfig::centerline_z);
  bindings.push_back({"terrain", "grid_rows",
                      [](const Config& c) { return std::to_string(c.terrain.grid_rows); },
                      [](Config& c, const std::string& v) {
                        c.terrain.grid_rows = parse_int(v, "terrain.grid_rows");
                      }});
  bindings.push_back({"terrain", "grid_cols",
                      [](const Config& c) { return std::to_string(c.terrain.grid_cols); },
                      [](Config& c, const std::string& v) {
                        c.terrain.grid_cols = parse_int(v, "terrain.grid_cols");
                      }});

  // [robot]
  const auto rd = [&](const std::string& key, double RobotModel::*m) {
    bindings.push_back(
        {"robot", key,
         [m](const Config& c) { return format_double(c.robot.*m); },
         [m, key](Config& c, const std::string& v) {
           c.robot.*m = parse_double(v, "robot." + key);
         }});
  };
  rd("base_length", &RobotModel::base_length);
  rd("base_width", &RobotModel::base_width);
  rd("base_height", &RobotModel::base_height);
  rd("standing_height", &RobotModel::standing_height);
  rd("hip_offset_x", &RobotModel::hip_offset_x);
  rd("hip_offset_y", &RobotModel::hip_offset_y);
  rd("abduction_link", &RobotModel::abduction_link);
  rd("thigh_length", &RobotModel::thigh_length);
  rd("calf_length", &RobotModel::calf_length);
  rd("nominal_mass", &RobotModel::nominal_mass);
  rd("rotor_inertia", &RobotModel::rotor_inertia);
  rd("kp", &RobotModel::kp);
  rd("kd", &RobotModel::kd);
  rd("torque_limit", &RobotModel::torque_limit);
  rd("action_scale", &RobotModel::action_scale);
  rd("knee_radius", &RobotModel::knee_radius);
  rd("hip_radius", &RobotModel::hip_radius);

  // [rewards]
  const auto wd = [&](const std::string& key, double RewardWeights::*m) {
    bindings.push_back(
        {"rewards", key,
         [m](const Config& c) { return format_double(c.rewards.*m); },
         [m, key](Config& c, const std::string& v) {
           c.rewards.*m = parse_double(v, "rewards." + key);
         }});
  };
  wd("lin_vel", &RewardWeights::lin_vel);
  wd("ang_vel", &RewardWeights::ang_vel);
  wd("torque", &RewardWeights::torque);
  wd("delta_torques", &RewardWeights::delta_torques);
  wd("dof_acc", &RewardWeights::dof_acc);
  wd("collision", &RewardWeights::collision);
  wd("centerline", &RewardWeights::centerline);

  // [curriculum]
  bindings.push_back(
      {"curriculum", "max_level",
       [](const Config& c) { return std::to_string(c.curriculum.max_level); },
       [](Config& c, const std::string& v) {
         c.curriculum.max_level = parse_int(v, "curriculum.max_level");
       }});

  // [ppo]
  const auto pd = [&](const std::string& key, double PpoConfig::*m) {
    bindings.push_back({"ppo", key,
                        [m](const Config& c) { return format_double(c.ppo.*m); },
                        [m, key](Config& c, const std::string& v) {
                          c.ppo.*m = parse_double(v, "ppo." + key);
                        }});
  };
  const auto pi = [&](const std::string& key, int PpoConfig::*m) {
    bindings.push_back({"ppo", key,
                        [m](const Config& c) { return std::to_string(c.ppo.*m); },
                        [m, key](Config& c, const std::string& v) {
                          c.ppo.*m = parse_int(v, "ppo." + key);
                        }});
  };
  pd("clip", &PpoConfig::clip);
  pd("gae_lambda", &PpoConfig::gae_lambda);
  pd("gamma", &PpoConfig::gamma);
  pd("learning_rate", &PpoConfig::learning_rate);
  pi("epochs", &PpoConfig::epochs);
  pi("minibatches", &PpoConfig::minibatches);
  pi("horizon", &PpoConfig::horizon);
  pd("entropy_coef", &PpoConfig::entropy_coef);
  pd("value_coef", &PpoConfig::value_coef);
  pd("max_grad_norm", &PpoConfig::max_grad_norm);
  pd("desired_kl", &PpoConfig::desired_kl);
  bindings.push_back(
      {"ppo", "adaptive_lr",
       [](const Config& c) {
         return c.ppo.adaptive_lr ? std::string("true") : std::string("false");
       },
       [](Config& c, const std::string& v) {
         c.ppo.adaptive_lr = parse_bool(v, "ppo.adaptive_lr");
       }});
  bindings.push_back(
      {"ppo", "normalize_advantage",
       [](const Config& c) {
         return c.ppo.normalize_advantage ? std::string("true")
                                          : std::string("false");
       },
       [](Config& c, const std::string& v) {
         c.ppo.normalize_advantage = parse_bool(v, "ppo.normalize_advantage");
       }});

  // [sim]
  const auto sd = [&](const std::string& key, double SimConfig::*m) {
    bindings.push_back({"sim", key,
                        [m](const Config& c) { return format_double(c.sim.*m); },
                        [m, key](Config& c, const std::string& v) {
                          c.sim.*m = parse_double(v, "sim." + key);
                        }});
  };
  sd("dt", &SimConfig::dt);
  bindings.push_back(
      {"sim", "decimation",
       [](const Config& c) { return std::to_string(c.sim.decimation); },
       [](Config& c, const std::string& v) {
         c.sim.decimation = parse_int(v, "sim.decimation");
       }});
  sd("episode_seconds", &SimConfig::episode_seconds);
  sd("contact_stiffness", &SimConfig::contact_stiffness);
  sd("contact_damping", &SimConfig::contact_damping);
  sd("tangential_damping", &SimConfig::tangential_damping);
  sd("stick_speed", &SimConfig::stick_speed);
  sd("max_penetration", &SimConfig::max_penetration);
  sd("wall_static_friction", &SimConfig::wall_static_friction);
  sd("wall_dynamic_friction", &SimConfig::wall_dynamic_friction);
  sd("push_interval", &SimConfig::push_interval);
  sd("push_magnitude", &SimConfig::push_magnitude);
  sd("command_vx_min", &SimConfig::command_vx_min);
  sd("command_vx_max", &SimConfig::command_vx_max);
  sd("spawn_joint_noise", &SimConfig::spawn_joint_noise);
  sd("spawn_velocity_noise", &SimConfig::spawn_velocity_noise);
  sd("spawn_joint_velocity_noise", &SimConfig::spawn_joint_velocity_noise);
  sd("obs_noise", &SimConfig::obs_noise);

  const auto rr = [&](const std::string& key,
                      double RandomizationRanges::*m) {
    bindings.push_back(
        {"sim", key,
         [m](const Config& c) { return format_double(c.sim.randomization.*m); },
         [m, key](Config& c, const std::string& v) {
           c.sim.randomization.*m = parse_double(v, "sim." + key);
         }});
  };
  rr("friction_min", &RandomizationRanges::friction_min);
  rr("friction_max", &RandomizationRanges::friction_max);
  rr("added_mass_max", &RandomizationRanges::added_mass_max);
  rr("com_offset_max", &RandomizationRanges::com_offset_max);
  rr("motor_strength_min", &RandomizationRanges::motor_strength_min);
  rr("motor_strength_max", &RandomizationRanges::motor_strength_max);
  bindings.push_back(
      {"sim", "domain_randomization",
       [](const Config& c) {
         return c.sim.randomization.enabled ? std::string("true")
                                            : std::string("false");
       },
       [](Config& c, const std::string& v) {
         c.sim.randomization.enabled =
             parse_bool(v, "sim.domain_randomization");
       }});

  return bindings;
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = make_bindings();
  return table;
}

// stage<i>_<field> keys in [curriculum]
bool apply_stage_key(Config& config, const std::string& key,
                     const std::string& value) {
  if (key.rfind("stage", 0) != 0) return false;
  std::size_t pos = 5;
  std::size_t digits = 0;
  while (pos + digits < key.size() && std::isdigit(key[pos + digits])) ++digits;
  if (digits == 0) return false;
  const int stage_index = std::stoi(key.substr(pos, digits));
  const std::string field = key.substr(pos + digits);
  if (stage_index < 1 ||
      stage_index > static_cast<int>(config.curriculum.stages.size()))
    throw ConfigError("curriculum." + key +
                      ": stage index out of range (set 'stages' first)");
  StageSpec& stage = config.curriculum.stages[stage_index - 1];
  if (field == "_radius_min")
    stage.radius_min = parse_double(value, "curriculum." + key);
  else if (field == "_radius_max")
    stage.radius_max = parse_double(value, "curriculum." + key);
  else if (field == "_obstacles")
    stage.obstacles_enabled = parse_bool(value, "curriculum." + key);
  else if (field == "_iterations")
    stage.iteration_budget = parse_int(value, "curriculum." + key);
  else
    return false;
  return true;
}

void apply_stage_count(Config& config, int count) {
  if (count < 1) throw ConfigError("curriculum.stages must be >= 1");
  const auto defaults = CurriculumConfig::defaults().stages;
  std::vector<StageSpec> stages;
  for (int i = 0; i < count; ++i) {
    StageSpec stage = i < static_cast<int>(defaults.size())
                          ? defaults[i]
                          : defaults.back();
    stage.id = i + 1;
    stages.push_back(stage);
  }
  config.curriculum.stages = std::move(stages);
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

PipeWorldSpec Config::base_spec() const {
  PipeWorldSpec spec;
  spec.pipe_length = terrain.pipe_length;
  spec.platform_length = terrain.platform_length;
  spec.sub_terrain_width = terrain.sub_terrain_width;
  spec.cell_size = terrain.cell_size;
  spec.entrance_lift = terrain.entrance_lift;
  spec.centerline_y = 0.0;
  spec.centerline_z = terrain.centerline_z;
  return spec;
}

TerrainGridConfig Config::grid_config(const StageSpec& stage,
                                      std::uint64_t seed) const {
  TerrainGridConfig grid;
  grid.level_rows = terrain.grid_rows;
  grid.columns = terrain.grid_cols;
  grid.radius_max = stage.radius_max;
  grid.radius_min = stage.radius_min;
  grid.obstacles_enabled = stage.obstacles_enabled;
  grid.seed = seed;
  grid.base = base_spec();
  return grid;
}

void Config::validate() const {
  sim.validate();
  ppo.validate();
  stage_schedule(curriculum);
  base_spec().validate();
  if (terrain.grid_rows < 1 || terrain.grid_cols < 1)
    throw ConfigError("terrain: grid_rows and grid_cols must be >= 1");
  if (robot.kp <= 0.0 || robot.kd < 0.0)
    throw ConfigError("robot: bad PD gains");
  if (robot.nominal_mass <= 0.0)
    throw ConfigError("robot: nominal_mass must be > 0");
  if (curriculum.max_level + 1 > terrain.grid_rows)
    throw ConfigError("curriculum: max_level exceeds terrain grid rows");
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());

  Config config;
  if (config.curriculum.stages.empty())
    config.curriculum = CurriculumConfig::defaults();

  std::string line, section;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path.string() + ":" + std::to_string(line_number) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"terrain",    "robot", "rewards",
                                    "curriculum", "ppo",   "sim"};
      bool ok = false;
      for (const char* name : known) ok = ok || section == name;
      if (!ok)
        throw ConfigError(path.string() + ":" + std::to_string(line_number) +
                          ": unknown section [" + section + "]");
      continue;
    }

    const auto equals = line.find('=');
    if (equals == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_number) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, equals));
    const std::string value = trim(line.substr(equals + 1));
    if (section.empty())
      throw ConfigError(path.string() + ":" + std::to_string(line_number) +
                        ": key outside any section");

    if (section == "curriculum" && key == "stages") {
      apply_stage_count(config, parse_int(value, "curriculum.stages"));
      continue;
    }
    if (section == "curriculum" && apply_stage_key(config, key, value))
      continue;

    bool handled = false;
    for (const Binding& binding : bindings()) {
      if (binding.section == section && binding.key == key) {
        binding.set(config, value);
        handled = true;
        break;
      }
    }
    if (!handled)
      throw ConfigError(path.string() + ":" + std::to_string(line_number) +
                        ": unknown key '" + key + "' in section [" + section +
                        "]");
  }

  config.validate();
  return config;
}

std::string serialize_config(const Config& config) {
  std::ostringstream out;
  const char* sections[] = {"terrain", "robot", "rewards",
                            "curriculum", "ppo", "sim"};
  for (const char* section : sections) {
    out << '[' << section << "]\n";
    if (std::string(section) == "curriculum") {
      out << "max_level = " << config.curriculum.max_level << '\n';
      const auto stages = config.curriculum.stages.empty()
                              ? CurriculumConfig::defaults().stages
                              : config.curriculum.stages;
      out << "stages = " << stages.size() << '\n';
      for (std::size_t i = 0; i < stages.size(); ++i) {
        const std::string prefix = "stage" + std::to_string(i + 1);
        out << prefix << "_radius_min = " << format_double(stages[i].radius_min)
            << '\n';
        out << prefix << "_radius_max = " << format_double(stages[i].radius_max)
            << '\n';
        out << prefix << "_obstacles = "
            << (stages[i].obstacles_enabled ? "true" : "false") << '\n';
        out << prefix << "_iterations = " << stages[i].iteration_budget << '\n';
      }
      continue;
    }
    for (const Binding& binding : bindings()) {
      if (binding.section == section)
        out << binding.key << " = " << binding.get(config) << '\n';
    }
  }
  return out.str();
}

void save_config(const Config& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << serialize_config(config);
  if (!out) throw IoError("failed writing " + path.string());
}

std::uint64_t config_hash(const Config& config) {
  // FNV-1a over the canonical serialization
  const std::string text = serialize_config(config);
  std::uint64_t hash = 0xCBF29CE484222325ull;
  for (unsigned char byte : text) {
    hash ^= byte;
    hash *= 0x100000001B3ull;
  }
  return hash;
}

}  // namespace pipegym
