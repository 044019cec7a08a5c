#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "esma/runner.hpp"
#include "esma/types.hpp"

namespace fixture {

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(std::string_view tag);

esma::EvalRecord rec(std::string id, bool correct, esma::MetaAnswer meta, std::optional<double> d = std::nullopt);
esma::EvalRecord rec(std::string id, bool correct, bool meta_yes, std::optional<double> d = std::nullopt);

/// Random records; confidences are drawn from a small grid when `ties` so
/// equal scores are common.
std::vector<esma::EvalRecord> random_records(std::uint64_t seed, std::size_t n, bool with_confidence, bool ties);

/// Small, fast surrogate run (dim 16, 400 facts, 40 generations).
esma::runner::RunConfig small_run(const std::filesystem::path& out, std::uint64_t seed);

std::string slurp(const std::filesystem::path& p);

}  // namespace fixture
