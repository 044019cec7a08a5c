#pragma once

// Slow, obviously-correct reference implementations used as test oracles.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "esma/patch.hpp"
#include "esma/types.hpp"

namespace oracle {

/// Phi^-1 by bisection on 0.5 * erfc(-x / sqrt 2) in long double.
long double inverse_normal_cdf(long double p);

/// Probability that a random correct record outranks a random incorrect one
/// (ties count one half), by enumerating every pair.
double mann_whitney_auc(std::span<const esma::EvalRecord> records);

/// Entries kept by a patch, found by fully sorting (|delta|, index) pairs.
std::vector<bool> patch_mask(std::span<const double> delta, double percent, esma::patch::Direction d);

/// sha256sum(1) over the file.
std::string sha256sum(const std::filesystem::path& path);

struct Tally {
  std::size_t n = 0, correct = 0, yes = 0, yes_wrong = 0, no_right = 0, aligned = 0;
  std::size_t hits = 0, false_alarms = 0;
};

/// Counts over parsed records with one branch per (C, meta) cell.
Tally tally(std::span<const esma::EvalRecord> records);

/// Mean and population std in long double.
void mean_std(std::span<const double> xs, long double& mean, long double& stddev);

/// Joint-probability reconstruction of a behavioral summary:
/// p(C,Yes) = Y(1-YFR), p(I,Yes) = Y*YFR, p(C,No) = (1-Y)NFR, p(I,No) = (1-Y)(1-NFR).
struct Reconstruction {
  double hit_rate = 0.0;
  double false_alarm_rate = 0.0;
  double d_type2 = 0.0;
  double raw_alignment = 0.0;
  double accuracy = 0.0;
};
Reconstruction reconstruct(double accuracy, double yes_ratio, double yfr, double nfr);

}  // namespace oracle
