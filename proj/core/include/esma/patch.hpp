#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "esma/model.hpp"
#include "esma/sdt.hpp"

namespace esma::patch {

enum class Direction { top, bottom };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

/// Elementwise tuned - base. Throws Error(data) on a dimension mismatch.
ParamVector weight_delta(std::span<const double> tuned, std::span<const double> base);

/// Entry order by decreasing |delta|, ties by ascending index. Top
/// selections take a prefix of this order, bottom selections a suffix.
std::vector<std::size_t> magnitude_order(std::span<const double> delta);

/// Number of entries kept for a patching ratio. Top keeps ceil(p/100 * dim)
/// so any p > 0 patches at least one entry; bottom keeps the complement of
/// top at 100 - p, which makes top(p) and bottom(100 - p) an exact partition.
std::size_t patch_count(std::size_t dim, double percent, Direction d);

/// Boolean mask of the entries a patch keeps. Throws Error(domain) unless
/// 0 <= percent <= 100.
std::vector<bool> patch_mask(std::span<const double> delta, double percent, Direction d);

/// Sparse delta: selected entries of `delta`, zeros elsewhere.
ParamVector select_patch(std::span<const double> delta, double percent, Direction d);

/// base + sparse delta. Selected coordinates take the tuned value directly,
/// so p = 0 reproduces base and p = 100 reproduces tuned bit for bit.
ParamVector apply_patch(std::span<const double> base, std::span<const double> tuned, double percent, Direction d);

struct GridPoint {
  double percent = 0.0;
  Direction direction = Direction::top;
};

struct PatchRow {
  Direction direction = Direction::top;
  double percent = 0.0;
  sdt::MetricsSummary metrics;
};

struct PatchReport {
  /// Grouped by direction (top first), ascending in percent.
  std::vector<PatchRow> rows;
};

using Evaluator = std::function<sdt::MetricsSummary(std::span<const double> theta)>;

/// Evaluates base + sparse delta at every grid point.
PatchReport patch_sweep(std::span<const double> base, std::span<const double> tuned,
                        std::span<const GridPoint> grid, const Evaluator& evaluate, std::size_t threads = 1);

/// {0, step, ..., 100} for each direction.
std::vector<GridPoint> default_grid(double step = 10.0, std::vector<Direction> directions = {Direction::top,
                                                                                            Direction::bottom});

/// "direction,p," followed by the metrics columns.
std::string report_csv(const PatchReport& report);

}  // namespace esma::patch
