#include "esma/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "esma/digest.hpp"
#include "esma/error.hpp"
#include "esma/io.hpp"

namespace esma {

std::string encode_params(std::span<const double> theta) {
  std::string bytes(theta.size() * 8, '\0');
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(theta[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  return bytes;
}

ParamVector decode_params(std::string_view bytes) {
  if (bytes.size() % 8 != 0) throw Error(ErrorKind::data, "parameter file size is not a multiple of 8");
  ParamVector theta(bytes.size() / 8);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t{static_cast<unsigned char>(bytes[i * 8 + b])} << (8 * b);
    theta[i] = std::bit_cast<double>(bits);
  }
  return theta;
}

std::filesystem::path write_checkpoint(const std::filesystem::path& manifest_path, const Checkpoint& ckpt) {
  auto bin_path = manifest_path;
  bin_path.replace_extension(".bin");
  const std::string bytes = encode_params(ckpt.theta);

  nlohmann::json manifest{{"generation", ckpt.generation},
                          {"dimension", ckpt.theta.size()},
                          {"master_seed", ckpt.master_seed},
                          {"digest", sha256_hex(bytes)},
                          {"params_file", bin_path.filename().string()},
                          {"trajectory", ckpt.trajectory}};
  io::write_file_atomic(bin_path, bytes);
  io::write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  return bin_path;
}

Checkpoint read_checkpoint(const std::filesystem::path& manifest_path) {
  if (!std::filesystem::exists(manifest_path)) {
    throw Error(ErrorKind::io, "checkpoint not found: " + manifest_path.string());
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data, "corrupt checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  try {
    Checkpoint ckpt;
    ckpt.generation = manifest.at("generation").get<std::size_t>();
    ckpt.master_seed = manifest.at("master_seed").get<std::uint64_t>();
    const auto dimension = manifest.at("dimension").get<std::size_t>();
    const auto bin_path = manifest_path.parent_path() / manifest.at("params_file").get<std::string>();
    const std::string bytes = io::read_file(bin_path);
    if (sha256_hex(bytes) != manifest.at("digest").get<std::string>()) {
      throw Error(ErrorKind::data, "checkpoint digest mismatch for " + bin_path.string());
    }
    ckpt.theta = decode_params(bytes);
    if (ckpt.theta.size() != dimension) {
      throw Error(ErrorKind::data, fmt::format("checkpoint {} declares dimension {} but holds {} values",
                                               manifest_path.string(), dimension, ckpt.theta.size()));
    }
    if (manifest.contains("trajectory")) {
      ckpt.trajectory = manifest["trajectory"].get<std::vector<es::TrajectoryRow>>();
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data, "corrupt checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
}

}  // namespace esma
