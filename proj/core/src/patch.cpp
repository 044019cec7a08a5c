#include "esma/patch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "esma/error.hpp"
#include "esma/io.hpp"
#include "esma/parallel.hpp"

namespace esma::patch {

std::string_view to_string(Direction d) { return d == Direction::top ? "top" : "bottom"; }

Direction parse_direction(std::string_view s) {
  if (s == "top") return Direction::top;
  if (s == "bottom") return Direction::bottom;
  throw Error(ErrorKind::config, "unknown patch direction '" + std::string(s) + "'");
}

ParamVector weight_delta(std::span<const double> tuned, std::span<const double> base) {
  if (tuned.size() != base.size()) {
    throw Error(ErrorKind::data, fmt::format("weight_delta: dimensions differ ({} vs {})", tuned.size(), base.size()));
  }
  ParamVector d(tuned.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = tuned[k] - base[k];
  return d;
}

std::vector<std::size_t> magnitude_order(std::span<const double> delta) {
  std::vector<std::size_t> order(delta.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(delta[a]) > std::abs(delta[b]); });
  return order;
}

std::size_t patch_count(std::size_t dim, double percent, Direction d) {
  if (!(percent >= 0.0 && percent <= 100.0)) throw Error(ErrorKind::domain, "patch ratio must lie in [0, 100]");
  auto top = [dim](double p) {
    const double k = std::ceil(p * static_cast<double>(dim) / 100.0);
    return std::min(dim, static_cast<std::size_t>(k));
  };
  return d == Direction::top ? top(percent) : dim - top(100.0 - percent);
}

std::vector<bool> patch_mask(std::span<const double> delta, double percent, Direction d) {
  const std::size_t k = patch_count(delta.size(), percent, d);
  std::vector<bool> mask(delta.size(), false);
  if (k == 0) return mask;
  const auto order = magnitude_order(delta);
  if (d == Direction::top) {
    for (std::size_t r = 0; r < k; ++r) mask[order[r]] = true;
  } else {
    for (std::size_t r = order.size() - k; r < order.size(); ++r) mask[order[r]] = true;
  }
  return mask;
}

ParamVector select_patch(std::span<const double> delta, double percent, Direction d) {
  const auto mask = patch_mask(delta, percent, d);
  ParamVector out(delta.size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (mask[k]) out[k] = delta[k];
  }
  return out;
}

ParamVector apply_patch(std::span<const double> base, std::span<const double> tuned, double percent, Direction d) {
  const auto delta = weight_delta(tuned, base);
  const auto mask = patch_mask(delta, percent, d);
  ParamVector out(base.begin(), base.end());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (mask[k]) out[k] = tuned[k];
  }
  return out;
}

PatchReport patch_sweep(std::span<const double> base, std::span<const double> tuned,
                        std::span<const GridPoint> grid, const Evaluator& evaluate, std::size_t threads) {
  if (base.size() != tuned.size()) {
    throw Error(ErrorKind::data, fmt::format("patch_sweep: base has dimension {}, tuned {}", base.size(), tuned.size()));
  }
  std::vector<GridPoint> points(grid.begin(), grid.end());
  std::stable_sort(points.begin(), points.end(), [](const GridPoint& a, const GridPoint& b) {
    if (a.direction != b.direction) return a.direction == Direction::top;
    return a.percent < b.percent;
  });

  PatchReport report;
  report.rows.resize(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const auto theta = apply_patch(base, tuned, points[i].percent, points[i].direction);
    report.rows[i] = {points[i].direction, points[i].percent, evaluate(theta)};
  });
  return report;
}

std::vector<GridPoint> default_grid(double step, std::vector<Direction> directions) {
  if (!(step > 0.0)) throw Error(ErrorKind::config, "grid step must be > 0");
  std::vector<GridPoint> grid;
  for (Direction d : directions) {
    for (int k = 0;; ++k) {
      const double p = std::min(100.0, k * step);
      grid.push_back({p, d});
      if (p >= 100.0) break;
    }
  }
  return grid;
}

std::string report_csv(const PatchReport& report) {
  std::string out = "direction,p," + std::string(io::kMetricsHeader) + "\n";
  for (const auto& row : report.rows) {
    out += fmt::format("{},{},{}\n", to_string(row.direction), io::format_number(row.percent),
                       io::metrics_csv_fields(row.metrics));
  }
  return out;
}

}  // namespace esma::patch
