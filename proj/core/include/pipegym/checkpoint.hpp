#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pipegym/policy.hpp"
#include "pipegym/ppo.hpp"

namespace pipegym {

// Versioned binary blob: magic, version, config hash, iteration counter,
// then named tensors (row-major float64).
struct Checkpoint {
  std::uint32_t version = 1;
  std::uint64_t config_hash = 0;
  std::uint64_t iteration = 0;
  std::map<std::string, Eigen::MatrixXd> tensors;
};

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Policy + optimizer state round-trip helpers.
Checkpoint make_checkpoint(const PolicyNetwork& policy,
                           const AdamOptimizer& optimizer,
                           std::uint64_t config_hash, std::uint64_t iteration);
// Throws IoError on any missing tensor or shape mismatch.
void restore_policy(const Checkpoint& checkpoint, PolicyNetwork& policy);
void restore_optimizer(const Checkpoint& checkpoint, AdamOptimizer& optimizer);

}  // namespace pipegym
