#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/statistics/univariate_statistics.hpp>
#include <random>

#include "support.hpp"
#include "vframe/vframe.hpp"

using namespace vframe;

namespace {

double ref_t_cdf(double x, double df) {
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), x);
}

double ref_chi_cdf(double x, double df) {
  return boost::math::cdf(boost::math::chi_squared_distribution<double>(df), x);
}

// Welch t from Boost moments, long double arithmetic.
TTestResult ref_welch(const std::vector<double>& a, const std::vector<double>& b) {
  auto [ma, va] = boost::math::statistics::mean_and_sample_variance(a);
  auto [mb, vb] = boost::math::statistics::mean_and_sample_variance(b);
  const long double na = a.size(), nb = b.size();
  const long double qa = va / na, qb = vb / nb;
  TTestResult r;
  r.t = static_cast<double>((static_cast<long double>(ma) - mb) / std::sqrt(qa + qb));
  r.df = static_cast<double>((qa + qb) * (qa + qb) / (qa * qa / (na - 1) + qb * qb / (nb - 1)));
  r.p = 2 * boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<double>(r.df),
                                                     std::fabs(r.t)));
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// special functions

TEST(SpecialFunctions, IncompleteBetaMatchesBoost) {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 2000; ++i) {
    const double a = std::exp(vtest::uniform(rng, std::log(0.05), std::log(5000.0)));
    const double b = std::exp(vtest::uniform(rng, std::log(0.05), std::log(5000.0)));
    const double x = vtest::uniform(rng, 0.0, 1.0);
    const auto got = special::incomplete_beta(a, b, x, 1.0 - x);
    ASSERT_NEAR(got.lower, boost::math::ibeta(a, b, x), 1e-10) << a << " " << b << " " << x;
    ASSERT_NEAR(got.upper, boost::math::ibetac(a, b, x), 1e-10) << a << " " << b << " " << x;
  }
}

TEST(SpecialFunctions, IncompleteGammaMatchesBoost) {
  std::mt19937_64 rng(67);
  for (int i = 0; i < 2000; ++i) {
    const double a = std::exp(vtest::uniform(rng, std::log(0.05), std::log(5000.0)));
    const double x = vtest::uniform(rng, 0.0, 3.0 * a + 20.0);
    const auto got = special::incomplete_gamma(a, x);
    ASSERT_NEAR(got.lower, boost::math::gamma_p(a, x), 1e-10) << a << " " << x;
    ASSERT_NEAR(got.upper, boost::math::gamma_q(a, x), 1e-10) << a << " " << x;
  }
}

TEST(TCdf, ZeroIsHalf) {
  for (double df : {1.0, 2.0, 7.5, 117.0, 8171.0, 1e6}) EXPECT_DOUBLE_EQ(t_cdf(0.0, df), 0.5);
}

TEST(TCdf, Symmetric) {
  std::mt19937_64 rng(71);
  for (int i = 0; i < 1000; ++i) {
    const double x = vtest::uniform(rng, -50, 50), df = std::exp(vtest::uniform(rng, 0, std::log(1e6)));
    EXPECT_NEAR(t_cdf(x, df) + t_cdf(-x, df), 1.0, 1e-14);
  }
}

TEST(TCdf, MatchesBoostOverDocumentedRange) {
  std::mt19937_64 rng(73);
  for (int i = 0; i < 5000; ++i) {
    const double x = vtest::uniform(rng, -50, 50), df = std::exp(vtest::uniform(rng, 0, std::log(1e6)));
    ASSERT_NEAR(t_cdf(x, df), ref_t_cdf(x, df), 1e-10) << x << " " << df;
  }
}

TEST(TCdf, RejectsNonPositiveDf) {
  EXPECT_THROW(t_cdf(1.0, 0.0), ValidationError);
  EXPECT_THROW(t_cdf(1.0, -3.0), ValidationError);
}

TEST(ChiSquareCdf, ZeroAtOrigin) {
  for (int df = 1; df <= 50; ++df) EXPECT_EQ(chi_square_cdf(0.0, df), 0.0);
}

TEST(ChiSquareCdf, MonotoneInX) {
  for (int df : {1, 2, 5, 30, 400}) {
    double prev = 0.0;
    for (double x = 0.0; x < 3.0 * df + 50; x += 0.25) {
      const double c = chi_square_cdf(x, df);
      ASSERT_GE(c, prev);
      prev = c;
    }
  }
}

TEST(ChiSquareCdf, MatchesBoostOverDocumentedRange) {
  std::mt19937_64 rng(79);
  for (int i = 0; i < 5000; ++i) {
    const int df = vtest::uniform_int(rng, 1, 1000);
    const double x = vtest::coin(rng, 0.8) ? vtest::uniform(rng, 0, 3.0 * df + 30) : vtest::uniform(rng, 0, 1e4);
    ASSERT_NEAR(chi_square_cdf(x, df), ref_chi_cdf(x, df), 1e-10) << x << " " << df;
  }
}

TEST(ChiSquareCdf, RejectsNegativeX) { EXPECT_THROW(chi_square_cdf(-0.1, 2), ValidationError); }

// ---------------------------------------------------------------------------
// stars

TEST(Stars, Cutpoints) {
  EXPECT_EQ(stars(0.0005), Stars::three);
  EXPECT_EQ(stars(0.05), Stars::none);
  EXPECT_EQ(stars(0.02), Stars::one);
  EXPECT_EQ(stars(0.001), Stars::two);
  EXPECT_EQ(stars(0.01), Stars::one);
  EXPECT_EQ(stars(1.0), Stars::none);
  EXPECT_THROW(stars(-0.01), ValidationError);
  EXPECT_THROW(stars(1.5), ValidationError);
  EXPECT_THROW(stars(std::nan("")), ValidationError);
}

// ---------------------------------------------------------------------------
// Welch

TEST(Welch, RiotFollowerFromSummaries) {
  const auto r = welch_t_summary({648, 0.17e6, 0.67e6}, {7525, 0.39e6, 1.86e6});
  EXPECT_NEAR(r.t, -6.48, 0.01);
  EXPECT_NEAR(r.df, 1725, 2);
  EXPECT_EQ(r.stars, Stars::three);
}

TEST(Welch, DebatePlayFromSummaries) {
  const auto r = welch_t_summary({3709, 1.09, 2.96}, {4464, 1.65, 3.20});
  EXPECT_NEAR(r.t, -8.21, 0.01);
  EXPECT_NEAR(r.df, 8077, 1);
}

TEST(Welch, EqualSummariesGiveZero) {
  const auto r = welch_t_summary({50, 3.0, 1.0}, {80, 3.0, 1.0});
  EXPECT_EQ(r.t, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
}

TEST(Welch, ZeroStandardErrorRejected) {
  EXPECT_THROW(welch_t_summary({5, 1.0, 0.0}, {5, 2.0, 0.0}), ValidationError);
  EXPECT_THROW(welch_t_summary({1, 1.0, 1.0}, {5, 2.0, 1.0}), ValidationError);
}

TEST(Welch, IdenticalSamplesGiveZero) {
  const std::vector<double> a{1, 2, 3, 4, 10};
  EXPECT_EQ(welch_t_raw(a, a).t, 0.0);
}

TEST(Welch, RawErrors) {
  EXPECT_THROW(welch_t_raw(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), ValidationError);
  EXPECT_THROW(welch_t_raw(std::vector<double>{3.0, 3.0}, std::vector<double>{3.0, 3.0}), ValidationError);
}

TEST(Welch, RawMatchesReference) {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 500; ++trial) {
    std::normal_distribution<double> ga(vtest::uniform(rng, -5, 5), vtest::uniform(rng, 0.1, 10));
    std::normal_distribution<double> gb(vtest::uniform(rng, -5, 5), vtest::uniform(rng, 0.1, 10));
    std::vector<double> a(static_cast<std::size_t>(vtest::uniform_int(rng, 2, 400)));
    std::vector<double> b(static_cast<std::size_t>(vtest::uniform_int(rng, 2, 400)));
    for (auto& v : a) v = ga(rng);
    for (auto& v : b) v = gb(rng);
    const auto got = welch_t_raw(a, b), ref = ref_welch(a, b);
    ASSERT_NEAR(got.t, ref.t, 1e-9);
    ASSERT_NEAR(got.df, ref.df, 1e-6 * ref.df);
    ASSERT_NEAR(got.p, ref.p, 1e-10);
  }
}

TEST(Welch, AntisymmetricUnderRelabeling) {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(static_cast<std::size_t>(vtest::uniform_int(rng, 2, 100)));
    std::vector<double> b(static_cast<std::size_t>(vtest::uniform_int(rng, 2, 100)));
    for (auto& v : a) v = vtest::uniform(rng, 0, 1e6);
    for (auto& v : b) v = vtest::uniform(rng, 0, 1e6);
    const auto ab = welch_t_raw(a, b), ba = welch_t_raw(b, a);
    ASSERT_EQ(ab.t, -ba.t);
    ASSERT_EQ(ab.df, ba.df);
    ASSERT_EQ(ab.p, ba.p);
  }
}

TEST(Welch, DfWithinBounds) {
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 5000; ++trial) {
    const GroupSummary a{vtest::uniform_int(rng, 2, 9000), vtest::uniform(rng, -10, 10), vtest::uniform(rng, 0.001, 50)};
    const GroupSummary b{vtest::uniform_int(rng, 2, 9000), vtest::uniform(rng, -10, 10), vtest::uniform(rng, 0.001, 50)};
    const double df = welch_t_summary(a, b).df;
    ASSERT_GE(df, static_cast<double>(std::min(a.n, b.n) - 1) - 1e-9);
    ASSERT_LE(df, static_cast<double>(a.n + b.n - 2) + 1e-9);
  }
}

TEST(Student, PooledDf) {
  const auto r = student_t_summary({65, 0.26, 0.97}, {8108, 0.38, 1.80});
  EXPECT_EQ(r.df, 8171.0);
}

TEST(Summarize, SampleStandardDeviation) {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  const auto g = summarize(x);
  EXPECT_EQ(g.n, 8);
  EXPECT_DOUBLE_EQ(g.mean, 5.0);
  EXPECT_NEAR(g.sd, std::sqrt(32.0 / 7.0), 1e-15);
}

// ---------------------------------------------------------------------------
// chi-square

TEST(ChiSquare, RiotByUserType) {
  const auto r = chi_square_independence({{486, 4128}, {149, 3160}, {13, 237}});
  EXPECT_NEAR(r.chi2, 98.62, 0.01);
  EXPECT_EQ(r.df, 2);
  EXPECT_LT(r.p, 0.001);
}

TEST(ChiSquare, DebateByLength) {
  const auto r = chi_square_independence({{1281, 2346}, {990, 1373}, {1438, 745}});
  EXPECT_NEAR(r.chi2, 529.56, 0.01);
  EXPECT_NEAR(r.cells[0][0].expected, 1646, 0.5);
}

TEST(ChiSquare, ObservedEqualsExpected) {
  const auto r = chi_square_independence({{10, 20}, {30, 60}});
  EXPECT_EQ(r.chi2, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
  for (const auto& row : r.cells)
    for (const auto& c : row) EXPECT_EQ(c.flag, CellFlag::none);
}

TEST(ChiSquare, Errors) {
  EXPECT_THROW(chi_square_independence({{1, 2}}), ValidationError);
  EXPECT_THROW(chi_square_independence({{1, 2}, {3}}), ValidationError);
  EXPECT_THROW(chi_square_independence({{0, 2}, {0, 3}}), ValidationError);
  EXPECT_THROW(chi_square_independence({{-1, 2}, {3, 4}}), ValidationError);
}

TEST(ChiSquare, MatchesDirectComputation) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const int rows = vtest::uniform_int(rng, 2, 5), cols = vtest::uniform_int(rng, 2, 5);
    std::vector<std::vector<std::int64_t>> obs(static_cast<std::size_t>(rows),
                                               std::vector<std::int64_t>(static_cast<std::size_t>(cols)));
    for (auto& row : obs)
      for (auto& c : row) c = vtest::uniform_int(rng, 1, 3000);
    const auto r = chi_square_independence(obs);

    long double n = 0;
    std::vector<long double> rs(obs.size(), 0), cs(obs[0].size(), 0);
    for (std::size_t i = 0; i < obs.size(); ++i)
      for (std::size_t j = 0; j < obs[i].size(); ++j) {
        rs[i] += obs[i][j];
        cs[j] += obs[i][j];
        n += obs[i][j];
      }
    long double chi2 = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      long double row_expected = 0;
      for (std::size_t j = 0; j < obs[i].size(); ++j) {
        const long double e = rs[i] * cs[j] / n;
        chi2 += (obs[i][j] - e) * (obs[i][j] - e) / e;
        const long double z = (obs[i][j] - e) / std::sqrt(e * (1 - rs[i] / n) * (1 - cs[j] / n));
        ASSERT_NEAR(r.cells[i][j].adj_residual, static_cast<double>(z), 1e-9);
        ASSERT_EQ(r.cells[i][j].flag, z > 1.96 ? CellFlag::above : z < -1.96 ? CellFlag::below : CellFlag::none);
        row_expected += r.cells[i][j].expected;
      }
      ASSERT_NEAR(static_cast<double>(row_expected), static_cast<double>(rs[i]), 1e-9);
    }
    const int df = (rows - 1) * (cols - 1);
    ASSERT_EQ(r.df, df);
    ASSERT_NEAR(r.chi2, static_cast<double>(chi2), 1e-9 * static_cast<double>(chi2) + 1e-12);
    ASSERT_GE(r.chi2, 0.0);
    const double ref_p = boost::math::cdf(
        boost::math::complement(boost::math::chi_squared_distribution<double>(df), r.chi2));
    ASSERT_NEAR(r.p, ref_p, 1e-10);
  }
}

// ---------------------------------------------------------------------------
// taxonomies and frequencies

TEST(Tier, Boundaries) {
  EXPECT_EQ(tier_of(0), UserTier::ordinary);
  EXPECT_EQ(tier_of(49'999), UserTier::ordinary);
  EXPECT_EQ(tier_of(50'000), UserTier::mid_tier);
  EXPECT_EQ(tier_of(2'500'000), UserTier::mid_tier);
  EXPECT_EQ(tier_of(2'500'001), UserTier::celebrity);
  EXPECT_THROW(tier_of(-1), ValidationError);
}

TEST(LengthBins, Boundaries) {
  EXPECT_EQ(length_bin(1), LengthBin::s1_15);
  EXPECT_EQ(length_bin(15), LengthBin::s1_15);
  EXPECT_EQ(length_bin(16), LengthBin::s16_45);
  EXPECT_EQ(length_bin(45), LengthBin::s16_45);
  EXPECT_EQ(length_bin(46), LengthBin::s46_60);
  EXPECT_EQ(length_bin(60), LengthBin::s46_60);
  EXPECT_EQ(length_bin(61), LengthBin::overflow);
  EXPECT_THROW(length_bin(0), ValidationError);
}

TEST(Frequency, PublishedPercentages) {
  EXPECT_EQ(format_centi(percent_centi(648, 8173)), "7.93");
  EXPECT_EQ(format_centi(percent_centi(489, 8173)), "5.98");
  EXPECT_EQ(format_centi(percent_centi(65, 8173)), "0.80");
}

TEST(Frequency, RoundsHalfUp) {
  EXPECT_EQ(percent_centi(1, 8), 1250);
  EXPECT_EQ(percent_centi(1, 16), 625);
  EXPECT_EQ(percent_centi(1, 32), 313);  // 3.125
  EXPECT_EQ(format_percent(0.74605), "74.61");
}

TEST(Frequency, EmptyInputEmptyTable) {
  EXPECT_TRUE(frequency_table(std::vector<FrameLabelSet>{}, std::vector<VideoMeta>{}).empty());
}

TEST(Frequency, ComplementsSumToHundred) {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = vtest::uniform_int(rng, 1, 9000);
    std::vector<FrameLabelSet> labels(static_cast<std::size_t>(n));
    std::vector<VideoMeta> meta(static_cast<std::size_t>(n));
    const double p = vtest::uniform(rng, 0, 1);
    for (int i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)].riot = vtest::coin(rng, p);
      meta[static_cast<std::size_t>(i)].verified = vtest::coin(rng, p);
    }
    const auto rows = frequency_table(labels, meta);
    ASSERT_EQ(rows.size(), 14u);
    for (std::size_t k = 0; k < rows.size(); k += 2) {
      ASSERT_EQ(rows[k].count + rows[k + 1].count, n);
      ASSERT_LE(std::abs(rows[k].percent_centi + rows[k + 1].percent_centi - 10000), 1);
    }
  }
}
