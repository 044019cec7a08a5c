#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "esma/error.hpp"
#include "esma/sdt.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace esma;
using fixture::rec;

TEST(InverseCdf, KnownPoints) {
  EXPECT_EQ(sdt::inverse_normal_cdf(0.5), 0.0);
  EXPECT_NEAR(sdt::inverse_normal_cdf(0.975), static_cast<double>(oracle::inverse_normal_cdf(0.975L)), 1e-9);
  EXPECT_NEAR(sdt::inverse_normal_cdf(0.975), 1.959964, 1e-5);
}

TEST(InverseCdf, Symmetric) {
  for (int k = 1; k <= 49; ++k) {
    const double p = k / 100.0;
    EXPECT_NEAR(sdt::inverse_normal_cdf(p), -sdt::inverse_normal_cdf(1.0 - p), 1e-12) << p;
  }
}

TEST(InverseCdf, MatchesBisectionOracle) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> logu(std::log(1e-6), std::log(0.5));
  for (int i = 0; i < 2000; ++i) {
    double p = std::exp(logu(g));
    if (i % 2) p = 1.0 - p;
    EXPECT_NEAR(sdt::inverse_normal_cdf(p), static_cast<double>(oracle::inverse_normal_cdf(p)), 1e-6) << p;
  }
}

TEST(InverseCdf, RejectsOutsideOpenInterval) {
  EXPECT_THROW(sdt::inverse_normal_cdf(0.0), Error);
  EXPECT_THROW(sdt::inverse_normal_cdf(1.0), Error);
  EXPECT_THROW(sdt::inverse_normal_cdf(std::nan("")), Error);
}

TEST(Rates, SymmetricTable) {
  const std::vector<EvalRecord> r{rec("a", true, true), rec("b", true, false), rec("c", false, true),
                                  rec("d", false, false)};
  const auto rates = sdt::compute_rates(r);
  EXPECT_DOUBLE_EQ(rates.hit_rate, 0.5);
  EXPECT_DOUBLE_EQ(rates.false_alarm_rate, 0.5);
  EXPECT_EQ(sdt::d_type2(rates), 0.0);
}

TEST(Rates, EdgeCorrection) {
  std::vector<EvalRecord> r;
  for (int i = 0; i < 3; ++i) r.push_back(rec("c" + std::to_string(i), true, true));
  for (int i = 0; i < 3; ++i) r.push_back(rec("i" + std::to_string(i), false, false));
  const auto rates = sdt::compute_rates(r);
  EXPECT_DOUBLE_EQ(rates.hit_rate, 1.0 - 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(rates.false_alarm_rate, 1.0 / 6.0);
}

TEST(Rates, UndefinedWithoutBothClasses) {
  const std::vector<EvalRecord> r{rec("a", true, true), rec("b", true, false)};
  try {
    sdt::compute_rates(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::undefined);
  }
}

TEST(Rates, CountsMatchTally) {
  auto r = fixture::random_records(20, 20, false, false);
  r[3].meta = MetaAnswer::unparseable;
  const auto t = oracle::tally(r);
  const auto rates = sdt::compute_rates(r);
  EXPECT_EQ(rates.n_correct, t.correct);
  EXPECT_EQ(rates.n_incorrect, t.n - t.correct);
  EXPECT_EQ(rates.n_hits, t.hits);
  EXPECT_EQ(rates.n_false_alarms, t.false_alarms);
  EXPECT_EQ(rates.n_excluded, 1u);
}

TEST(DType2, Examples) {
  EXPECT_EQ(sdt::d_type2(0.5, 0.5), 0.0);
  EXPECT_NEAR(sdt::d_type2(0.841345, 0.5), 1.0, 1e-4);
  EXPECT_NEAR(sdt::d_type2(0.5831, 0.5045), 0.20, 0.02);
}

TEST(Behavioral, HandCount) {
  const std::vector<EvalRecord> r{rec("a", true, true), rec("b", false, true), rec("c", false, false),
                                  rec("d", true, false)};
  const auto m = sdt::behavioral_metrics(r);
  EXPECT_EQ(m.accuracy, 0.5);
  EXPECT_EQ(m.yes_ratio, 0.5);
  EXPECT_EQ(*m.yfr, 0.5);
  EXPECT_EQ(*m.nfr, 0.5);
  EXPECT_EQ(m.raw_alignment, 0.5);
  EXPECT_FALSE(m.auc.has_value());
}

TEST(Behavioral, AllYesCorrect) {
  const std::vector<EvalRecord> r{rec("a", true, true), rec("b", true, true)};
  const auto m = sdt::behavioral_metrics(r);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.yes_ratio, 1.0);
  EXPECT_EQ(*m.yfr, 0.0);
  EXPECT_FALSE(m.nfr.has_value());
  EXPECT_FALSE(m.d_type2.has_value());
  EXPECT_EQ(m.raw_alignment, 1.0);
}

TEST(Behavioral, IdentitiesAndTally) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto r = fixture::random_records(seed, 40, false, false);
    if (seed % 3 == 0) r[0].meta = MetaAnswer::unparseable;
    const auto m = sdt::behavioral_metrics(r);
    const auto t = oracle::tally(r);
    const double n = static_cast<double>(t.n);
    EXPECT_DOUBLE_EQ(m.accuracy, t.correct / n);
    EXPECT_DOUBLE_EQ(m.yes_ratio, t.yes / n);
    EXPECT_DOUBLE_EQ(m.raw_alignment, t.aligned / n);
    EXPECT_EQ(m.n_unparseable, seed % 3 == 0 ? 1u : 0u);
    if (m.yfr && m.nfr) {
      EXPECT_NEAR(m.raw_alignment, m.yes_ratio * (1 - *m.yfr) + (1 - m.yes_ratio) * (1 - *m.nfr), 1e-12);
      EXPECT_NEAR(m.accuracy, m.yes_ratio * (1 - *m.yfr) + (1 - m.yes_ratio) * *m.nfr, 1e-12);
    }
  }
}

TEST(Behavioral, PopulationIdentityForATableRow) {
  const double yes = 0.8220, yfr = 0.0435, nfr = 0.8181;
  EXPECT_NEAR(yes * (1 - yfr) + (1 - yes) * (1 - nfr), 0.8187, 5e-4);
}

TEST(Behavioral, NothingParsed) {
  const std::vector<EvalRecord> r{rec("a", true, MetaAnswer::unparseable)};
  EXPECT_THROW(sdt::behavioral_metrics(r), Error);
}

TEST(Confidence, Examples) {
  EXPECT_EQ(sdt::confidence(0.3, 0.3), 0.5);
  EXPECT_NEAR(sdt::confidence(std::log(3.0), 0.0), 0.75, 1e-15);
  EXPECT_NEAR(sdt::confidence(1000.0, 0.0), 1.0, 1e-12);
  EXPECT_GE(sdt::confidence(-1000.0, 0.0), 0.0);
  EXPECT_NEAR(sdt::confidence(1.0, 0.0), 0.7311, 1e-4);
  EXPECT_THROW(sdt::confidence(INFINITY, 0.0), Error);
}

TEST(Roc, PerfectSeparation) {
  const std::vector<EvalRecord> r{rec("a", true, true, 0.9), rec("b", true, true, 0.8), rec("c", false, false, 0.2),
                                  rec("d", false, false, 0.1)};
  EXPECT_EQ(sdt::auc(sdt::roc_curve(r)), 1.0);
}

TEST(Roc, IdenticalScoresGiveHalf) {
  const std::vector<EvalRecord> r{rec("a", true, true, 0.6), rec("b", false, true, 0.6), rec("c", false, true, 0.6),
                                  rec("d", true, true, 0.6)};
  const auto curve = sdt::roc_curve(r);
  EXPECT_EQ(sdt::auc(curve), 0.5);
  EXPECT_EQ(curve.points.front().fpr, 0.0);
  EXPECT_EQ(curve.points.back().tpr, 1.0);
}

TEST(Roc, MatchesPairCounting) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = fixture::random_records(seed, 50, true, seed % 2 == 0);
    const auto t = oracle::tally(r);
    if (t.correct == 0 || t.correct == t.n) continue;
    EXPECT_NEAR(sdt::auc(sdt::roc_curve(r)), oracle::mann_whitney_auc(r), 1e-12) << seed;
  }
}

TEST(Roc, CurveIsMonotone) {
  const auto r = fixture::random_records(5, 60, true, true);
  const auto c = sdt::roc_curve(r);
  ASSERT_EQ(c.points.size(), c.thresholds.size());
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
    EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
    EXPECT_LT(c.thresholds[i], c.thresholds[i - 1]);
  }
}

TEST(Density, Boundaries) {
  std::vector<EvalRecord> r{rec("a", true, true, 0.0)};
  auto h = sdt::density_histogram(r, 10);
  EXPECT_EQ(h.correct_counts[0], 1u);
  EXPECT_EQ(h.edges.size(), 11u);
  r = {rec("b", false, true, 1.0)};
  h = sdt::density_histogram(r, 10);
  EXPECT_EQ(h.incorrect_counts[9], 1u);
  EXPECT_THROW(sdt::density_histogram(r, 1), Error);
}

TEST(Density, MatchesDirectBinning) {
  const auto r = fixture::random_records(9, 100, true, false);
  const std::size_t bins = 7;
  const auto h = sdt::density_histogram(r, bins);
  std::vector<std::size_t> c(bins), w(bins);
  for (const auto& x : r) {
    for (std::size_t k = 0; k < bins; ++k) {
      const double lo = static_cast<double>(k) / bins, hi = static_cast<double>(k + 1) / bins;
      if (*x.confidence >= lo && (*x.confidence < hi || (k + 1 == bins && *x.confidence <= hi))) {
        (x.correct ? c : w)[k]++;
        break;
      }
    }
  }
  EXPECT_EQ(h.correct_counts, c);
  EXPECT_EQ(h.incorrect_counts, w);
}

TEST(Sensitivity, Bands) {
  EXPECT_EQ(sdt::classify_sensitivity(0.0), sdt::SensitivityBand::chance);
  EXPECT_EQ(sdt::classify_sensitivity(-1.0), sdt::SensitivityBand::chance);
  EXPECT_EQ(sdt::classify_sensitivity(0.5), sdt::SensitivityBand::low);
  EXPECT_EQ(sdt::classify_sensitivity(1.0), sdt::SensitivityBand::moderate);
  EXPECT_EQ(sdt::classify_sensitivity(2.5), sdt::SensitivityBand::ceiling);
}

TEST(Idk, SingleItemCases) {
  auto with_idk = [](EvalRecord r, bool abstained, bool correct) {
    r.idk = IdkOutcome{abstained, correct};
    return r;
  };
  std::vector<EvalRecord> one{with_idk(rec("a", true, true), false, true)};
  auto m = sdt::idk_metrics(one);
  EXPECT_EQ(m.idk_accuracy, 1.0);
  EXPECT_EQ(m.idk_alignment, 1.0);
  EXPECT_EQ(m.all_alignment, 1.0);

  one = {with_idk(rec("b", false, false), true, false)};
  m = sdt::idk_metrics(one);
  EXPECT_EQ(m.idk_accuracy, 0.0);
  EXPECT_EQ(m.idk_alignment, 1.0);
  EXPECT_EQ(m.all_alignment, 1.0);

  one = {with_idk(rec("c", true, true), true, false)};
  EXPECT_EQ(sdt::idk_metrics(one).all_alignment, 0.0);
}

TEST(Idk, JoinsById) {
  std::vector<EvalRecord> dual{rec("a", true, true), rec("b", false, false)};
  std::vector<EvalRecord> idk{rec("b", false, false), rec("a", true, true)};
  idk[0].idk = IdkOutcome{true, false};
  idk[1].idk = IdkOutcome{false, true};
  const auto m = sdt::idk_metrics(dual, idk);
  EXPECT_EQ(m.all_alignment, 1.0);
  idk.pop_back();
  EXPECT_THROW(sdt::idk_metrics(dual, idk), Error);
}
