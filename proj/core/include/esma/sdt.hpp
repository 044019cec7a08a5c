#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "esma/types.hpp"

namespace esma::sdt {

/// Standard normal CDF.
double normal_cdf(double z);

/// Quantile function of the standard normal. Throws Error(domain) unless
/// 0 < p < 1. Accurate to |Phi(z) - p| <= 1e-9 across the open interval.
double inverse_normal_cdf(double p);

/// Type-2 hit and false-alarm rates over parsed records.
///
/// hit_rate = P(meta Yes | correct), false_alarm_rate = P(meta Yes | incorrect).
/// A raw rate of 0 or 1 is replaced by 1/(2n) or 1 - 1/(2n), n being the
/// rate's denominator, so both rates are strictly inside (0, 1).
struct Rates {
  double hit_rate = 0.5;
  double false_alarm_rate = 0.5;
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
  std::size_t n_hits = 0;
  std::size_t n_false_alarms = 0;
  std::size_t n_excluded = 0;
};

/// Throws Error(undefined) when the parsed records are all correct or all
/// incorrect. Unparseable records are skipped and counted in n_excluded.
Rates compute_rates(std::span<const EvalRecord> records);

double d_type2(double hit_rate, double false_alarm_rate);
inline double d_type2(const Rates& r) { return d_type2(r.hit_rate, r.false_alarm_rate); }

struct MetricsSummary {
  std::optional<double> d_type2;
  double raw_alignment = 0.0;
  double accuracy = 0.0;
  double yes_ratio = 0.0;
  /// P(incorrect | meta Yes); undefined without Yes answers.
  std::optional<double> yfr;
  /// P(correct | meta No); undefined without No answers.
  std::optional<double> nfr;
  std::optional<double> auc;
  std::size_t n_records = 0;
  std::size_t n_unparseable = 0;

  friend bool operator==(const MetricsSummary&, const MetricsSummary&) = default;
};

/// Behavioral summary over parsed records. d_type2 is filled when rates are
/// defined; auc when every parsed record carries a confidence and both
/// classes are present. Throws Error(data) if no record parses.
MetricsSummary behavioral_metrics(std::span<const EvalRecord> records);

/// D = e^{z_yes} / (e^{z_yes} + e^{z_no}), evaluated without overflow.
double confidence(double z_yes, double z_no);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  /// thresholds[k] produced points[k]; thresholds[0] is +inf.
  std::vector<double> thresholds;
};

/// Type-2 ROC over the confidence of parsed records. Points are
/// TPR(t) = P(D >= t | correct), FPR(t) = P(D >= t | incorrect) for t
/// descending through +inf and every distinct D, so the curve runs from
/// (0,0) to (1,1). Throws Error(data) if a parsed record lacks a confidence,
/// Error(undefined) if either class is empty.
RocCurve roc_curve(std::span<const EvalRecord> records);

/// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

struct ConfidenceDensity {
  std::vector<double> edges;
  std::vector<std::size_t> correct_counts;
  std::vector<std::size_t> incorrect_counts;
};

/// Uniform histogram of D over [0, 1]; D = 1 lands in the last bin.
ConfidenceDensity density_histogram(std::span<const EvalRecord> records, std::size_t bins);

enum class SensitivityBand { chance, low, moderate, ceiling };

std::string_view to_string(SensitivityBand b);

/// chance < 0.25 <= low < 0.75 <= moderate < 2.5 <= ceiling.
SensitivityBand classify_sensitivity(double d);

struct IdkMetrics {
  double idk_accuracy = 0.0;
  double idk_alignment = 0.0;
  double all_alignment = 0.0;
  std::size_t n = 0;

  friend bool operator==(const IdkMetrics&, const IdkMetrics&) = default;
};

/// Joins dual-prompt records with IDK records by item id. IDK meta is No iff
/// the model abstained. An item is all-aligned when its dual outcome is
/// aligned and the IDK meta agrees with the dual meta; items whose dual meta
/// is unparseable are never all-aligned. Every `idk` record must carry an
/// IdkOutcome. Throws Error(data) if the id sets differ.
IdkMetrics idk_metrics(std::span<const EvalRecord> dual, std::span<const EvalRecord> idk);

/// Convenience overload for records carrying both protocols.
IdkMetrics idk_metrics(std::span<const EvalRecord> records);

}  // namespace esma::sdt
