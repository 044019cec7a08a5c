#include "esma/sdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_map>

#include "esma/error.hpp"

namespace esma::sdt {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::domain, "inverse_normal_cdf: p must lie in (0, 1)");
  }
  // Acklam's rational approximation (relative error ~1.2e-9) followed by one
  // Halley step against erfc, which brings it to full double precision.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Work on the nearer tail so the residual keeps its relative precision.
  const double e = (p < 0.5) ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

Rates compute_rates(std::span<const EvalRecord> records) {
  Rates r;
  for (const auto& rec : records) {
    if (!rec.parsed()) {
      ++r.n_excluded;
      continue;
    }
    if (rec.correct) {
      ++r.n_correct;
      if (rec.meta_yes()) ++r.n_hits;
    } else {
      ++r.n_incorrect;
      if (rec.meta_yes()) ++r.n_false_alarms;
    }
  }
  if (r.n_correct == 0 || r.n_incorrect == 0) {
    throw Error(ErrorKind::undefined, "rates undefined: need at least one correct and one incorrect record");
  }
  auto corrected = [](std::size_t k, std::size_t n) {
    const double nn = static_cast<double>(n);
    if (k == 0) return 1.0 / (2.0 * nn);
    if (k == n) return 1.0 - 1.0 / (2.0 * nn);
    return static_cast<double>(k) / nn;
  };
  r.hit_rate = corrected(r.n_hits, r.n_correct);
  r.false_alarm_rate = corrected(r.n_false_alarms, r.n_incorrect);
  return r;
}

double d_type2(double hit_rate, double false_alarm_rate) {
  return inverse_normal_cdf(hit_rate) - inverse_normal_cdf(false_alarm_rate);
}

MetricsSummary behavioral_metrics(std::span<const EvalRecord> records) {
  MetricsSummary m;
  m.n_records = records.size();
  std::size_t n = 0, n_correct = 0, n_yes = 0, n_aligned = 0, yes_wrong = 0, no_right = 0;
  bool all_confident = true;
  for (const auto& rec : records) {
    if (!rec.parsed()) {
      ++m.n_unparseable;
      continue;
    }
    ++n;
    n_correct += rec.correct;
    n_aligned += rec.outcome().aligned;
    if (rec.meta_yes()) {
      ++n_yes;
      yes_wrong += !rec.correct;
    } else {
      no_right += rec.correct;
    }
    all_confident = all_confident && rec.confidence.has_value();
  }
  if (n == 0) throw Error(ErrorKind::data, "behavioral_metrics: no parsed records");

  const double nn = static_cast<double>(n);
  m.accuracy = static_cast<double>(n_correct) / nn;
  m.yes_ratio = static_cast<double>(n_yes) / nn;
  m.raw_alignment = static_cast<double>(n_aligned) / nn;
  if (n_yes > 0) m.yfr = static_cast<double>(yes_wrong) / static_cast<double>(n_yes);
  if (n_yes < n) m.nfr = static_cast<double>(no_right) / static_cast<double>(n - n_yes);

  if (n_correct > 0 && n_correct < n) {
    m.d_type2 = d_type2(compute_rates(records));
    if (all_confident) m.auc = auc(roc_curve(records));
  }
  return m;
}

double confidence(double z_yes, double z_no) {
  if (!std::isfinite(z_yes) || !std::isfinite(z_no)) {
    throw Error(ErrorKind::domain, "confidence: logits must be finite");
  }
  // Logistic of the logit difference, branching on sign to avoid overflow.
  const double delta = z_yes - z_no;
  if (delta >= 0.0) return 1.0 / (1.0 + std::exp(-delta));
  const double e = std::exp(delta);
  return e / (1.0 + e);
}

RocCurve roc_curve(std::span<const EvalRecord> records) {
  struct Scored {
    double d;
    bool correct;
  };
  std::vector<Scored> scored;
  scored.reserve(records.size());
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& rec : records) {
    if (!rec.parsed()) continue;
    if (!rec.confidence) throw Error(ErrorKind::data, "roc_curve: record " + rec.item_id + " has no confidence");
    scored.push_back({*rec.confidence, rec.correct});
    (rec.correct ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorKind::undefined, "rates undefined: need at least one correct and one incorrect record");
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.d > b.d; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scored.size();) {
    const double t = scored[i].d;
    for (; i < scored.size() && scored[i].d == t; ++i) (scored[i].correct ? tp : fp)++;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                            static_cast<double>(tp) / static_cast<double>(n_pos)});
    curve.thresholds.push_back(t);
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

ConfidenceDensity density_histogram(std::span<const EvalRecord> records, std::size_t bins) {
  if (bins < 2) throw Error(ErrorKind::domain, "density_histogram: bins must be >= 2");
  ConfidenceDensity h;
  h.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) h.edges[k] = static_cast<double>(k) / static_cast<double>(bins);
  h.correct_counts.assign(bins, 0);
  h.incorrect_counts.assign(bins, 0);
  for (const auto& rec : records) {
    if (!rec.parsed()) continue;
    if (!rec.confidence) throw Error(ErrorKind::data, "density_histogram: record " + rec.item_id + " has no confidence");
    const double d = *rec.confidence;
    if (!(d >= 0.0 && d <= 1.0)) throw Error(ErrorKind::domain, "density_histogram: confidence outside [0, 1]");
    auto bin = static_cast<std::size_t>(d * static_cast<double>(bins));
    bin = std::min(bin, bins - 1);
    (rec.correct ? h.correct_counts : h.incorrect_counts)[bin]++;
  }
  return h;
}

std::string_view to_string(SensitivityBand b) {
  switch (b) {
    case SensitivityBand::chance: return "chance";
    case SensitivityBand::low: return "low";
    case SensitivityBand::moderate: return "moderate";
    case SensitivityBand::ceiling: return "ceiling";
  }
  return "chance";
}

SensitivityBand classify_sensitivity(double d) {
  if (d < 0.25) return SensitivityBand::chance;
  if (d < 0.75) return SensitivityBand::low;
  if (d < 2.5) return SensitivityBand::moderate;
  return SensitivityBand::ceiling;
}

IdkMetrics idk_metrics(std::span<const EvalRecord> dual, std::span<const EvalRecord> idk) {
  if (dual.size() != idk.size()) throw Error(ErrorKind::data, "idk_metrics: dual and idk record counts differ");
  if (dual.empty()) throw Error(ErrorKind::data, "idk_metrics: no records");

  std::unordered_map<std::string_view, const EvalRecord*> by_id;
  by_id.reserve(idk.size());
  for (const auto& r : idk) {
    if (!r.idk) throw Error(ErrorKind::data, "idk_metrics: record " + r.item_id + " has no idk outcome");
    by_id.emplace(r.item_id, &r);
  }

  std::size_t idk_correct = 0, idk_aligned = 0, all_aligned = 0;
  for (const auto& d : dual) {
    auto it = by_id.find(d.item_id);
    if (it == by_id.end()) throw Error(ErrorKind::data, "idk_metrics: no idk record for item " + d.item_id);
    const IdkOutcome& o = *it->second->idk;
    idk_correct += o.correct;
    idk_aligned += align(o.correct, o.meta_yes());
    all_aligned += d.parsed() && d.outcome().aligned && o.meta_yes() == d.meta_yes();
  }
  const double n = static_cast<double>(dual.size());
  return {static_cast<double>(idk_correct) / n, static_cast<double>(idk_aligned) / n,
          static_cast<double>(all_aligned) / n, dual.size()};
}

IdkMetrics idk_metrics(std::span<const EvalRecord> records) { return idk_metrics(records, records); }

}  // namespace esma::sdt
