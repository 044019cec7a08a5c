#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "esma/es.hpp"
#include "esma/model.hpp"

namespace esma {

/// A resumable training snapshot: JSON manifest
/// {generation, dimension, master_seed, digest, params_file, trajectory}
/// plus a companion file of little-endian IEEE-754 float64 parameters.
struct Checkpoint {
  std::size_t generation = 0;
  std::uint64_t master_seed = 0;
  ParamVector theta;
  std::vector<es::TrajectoryRow> trajectory;
};

/// Writes `<stem>.json` and `<stem>.bin` atomically, where `manifest_path`
/// is the .json path. Returns the path of the parameter file.
std::filesystem::path write_checkpoint(const std::filesystem::path& manifest_path, const Checkpoint& ckpt);

/// Reads and verifies a checkpoint (dimension and SHA-256 of the parameter
/// bytes). Throws Error(io) if files are missing, Error(data) on mismatch.
Checkpoint read_checkpoint(const std::filesystem::path& manifest_path);

/// Little-endian float64 encoding of a parameter vector.
std::string encode_params(std::span<const double> theta);
ParamVector decode_params(std::string_view bytes);

}  // namespace esma
