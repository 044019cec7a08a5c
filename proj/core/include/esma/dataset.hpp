#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

#include "esma/types.hpp"

namespace esma {

/// Loads a JSON Lines QA file: one object per line with keys `id`,
/// `question` and `answers`. Blank lines are skipped; CRLF is tolerated.
/// Throws Error(data) naming the offending line for malformed records,
/// duplicate ids (both lines) and empty alias lists.
Dataset load_dataset(const std::filesystem::path& path);

/// Same as load_dataset over an in-memory buffer.
Dataset parse_dataset(std::string_view bytes, std::string source = "<memory>");

/// Canonical JSONL serialization: one compact object per line, LF-terminated.
std::string serialize_dataset(const Dataset& d);

/// Rebuilds a dataset from items, hashing their canonical serialization.
Dataset make_dataset(std::vector<QaItem> items, std::string source);

struct DatasetSplit {
  Dataset train;
  Dataset eval;
};

/// Shuffles a copy with a seeded engine and cuts off round(n * eval_fraction)
/// items (clamped to [1, n-1]) for evaluation. The input is never reordered.
DatasetSplit split_dataset(const Dataset& d, double eval_fraction, std::uint64_t seed);

}  // namespace esma
