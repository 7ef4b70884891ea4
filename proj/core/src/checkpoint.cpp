#include "pipegym/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "pipegym/errors.hpp"

namespace pipegym {

namespace {

constexpr std::uint32_t kMagic = 0x5047434Bu;  // "PGCK"

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated checkpoint " + path);
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_pod(out, kMagic);
  write_pod(out, checkpoint.version);
  write_pod(out, checkpoint.config_hash);
  write_pod(out, checkpoint.iteration);
  write_pod(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& [name, tensor] : checkpoint.tensors) {
    write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<std::uint64_t>(tensor.rows()));
    write_pod(out, static_cast<std::uint64_t>(tensor.cols()));
    // row-major on disk
    for (Eigen::Index r = 0; r < tensor.rows(); ++r)
      for (Eigen::Index c = 0; c < tensor.cols(); ++c)
        write_pod(out, tensor(r, c));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Checkpoint checkpoint;
  if (read_pod<std::uint32_t>(in, path.string()) != kMagic)
    throw IoError(path.string() + ": not a checkpoint file");
  checkpoint.version = read_pod<std::uint32_t>(in, path.string());
  if (checkpoint.version != 1)
    throw IoError(path.string() + ": unsupported checkpoint version");
  checkpoint.config_hash = read_pod<std::uint64_t>(in, path.string());
  checkpoint.iteration = read_pod<std::uint64_t>(in, path.string());
  const auto count = read_pod<std::uint32_t>(in, path.string());
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in, path.string());
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw IoError("truncated checkpoint " + path.string());
    const auto rows = read_pod<std::uint64_t>(in, path.string());
    const auto cols = read_pod<std::uint64_t>(in, path.string());
    Eigen::MatrixXd tensor(rows, cols);
    for (std::uint64_t r = 0; r < rows; ++r)
      for (std::uint64_t c = 0; c < cols; ++c)
        tensor(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            read_pod<double>(in, path.string());
    checkpoint.tensors.emplace(std::move(name), std::move(tensor));
  }
  return checkpoint;
}

Checkpoint make_checkpoint(const PolicyNetwork& policy,
                           const AdamOptimizer& optimizer,
                           std::uint64_t config_hash, std::uint64_t iteration) {
  Checkpoint checkpoint;
  checkpoint.config_hash = config_hash;
  checkpoint.iteration = iteration;
  policy.visit_tensors([&](const std::string& name, const Eigen::MatrixXd& t) {
    checkpoint.tensors[name] = t;
  });
  checkpoint.tensors["adam.m"] = optimizer.m();
  checkpoint.tensors["adam.v"] = optimizer.v();
  checkpoint.tensors["adam.steps"] =
      Eigen::MatrixXd::Constant(1, 1, static_cast<double>(optimizer.steps()));
  return checkpoint;
}

namespace {

void restore_layers(const Checkpoint& checkpoint, const std::string& prefix,
                    Mlp& net) {
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const std::string wname = prefix + ".w" + std::to_string(i);
    const std::string bname = prefix + ".b" + std::to_string(i);
    const auto wit = checkpoint.tensors.find(wname);
    const auto bit = checkpoint.tensors.find(bname);
    if (wit == checkpoint.tensors.end() || bit == checkpoint.tensors.end())
      throw IoError("checkpoint missing tensor " + wname);
    Mlp::Layer& layer = net.layers()[i];
    if (wit->second.rows() != layer.weight.rows() ||
        wit->second.cols() != layer.weight.cols() ||
        bit->second.size() != layer.bias.size())
      throw IoError("checkpoint tensor shape mismatch for " + wname);
    layer.weight = wit->second;
    layer.bias = bit->second.reshaped();
  }
}

}  // namespace

void restore_policy(const Checkpoint& checkpoint, PolicyNetwork& policy) {
  restore_layers(checkpoint, "encoder", policy.encoder());
  restore_layers(checkpoint, "actor", policy.actor());
  restore_layers(checkpoint, "critic", policy.critic());
  const auto it = checkpoint.tensors.find("log_std");
  if (it == checkpoint.tensors.end())
    throw IoError("checkpoint missing tensor log_std");
  if (it->second.size() != policy.log_std_raw().size())
    throw IoError("checkpoint tensor shape mismatch for log_std");
  policy.log_std_raw() = it->second.reshaped();
}

void restore_optimizer(const Checkpoint& checkpoint, AdamOptimizer& optimizer) {
  const auto m_it = checkpoint.tensors.find("adam.m");
  const auto v_it = checkpoint.tensors.find("adam.v");
  const auto s_it = checkpoint.tensors.find("adam.steps");
  if (m_it == checkpoint.tensors.end() || v_it == checkpoint.tensors.end() ||
      s_it == checkpoint.tensors.end())
    throw IoError("checkpoint missing optimizer state");
  if (m_it->second.size() != optimizer.m().size() ||
      v_it->second.size() != optimizer.v().size())
    throw IoError("checkpoint optimizer state size mismatch");
  optimizer.restore(m_it->second.reshaped(), v_it->second.reshaped(),
                    static_cast<std::int64_t>(s_it->second(0, 0)));
}

}  // namespace pipegym
