#pragma once

// Inferential statistics for engagement comparisons and frame-by-category
// contingency tables: Welch t-tests (from raw samples or published
// summaries), chi-square independence tests with adjusted standardized
// residuals, and the distribution functions behind their p-values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vframe/datamodel.hpp"

namespace vframe {

// ============================================================================
// SPECIAL FUNCTIONS
// ============================================================================

namespace special {

inline constexpr double kEps = 1e-16;
inline constexpr double kTiny = 1e-300;
inline constexpr int kMaxIter = 200000;

// Stirling remainder: lgamma(x) - [(x - 0.5) ln x - x + 0.5 ln(2 pi)], x >= 10.
inline double stirling_correction(double x) {
  const double r = 1.0 / x, r2 = r * r;
  return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 / 1188))));
}

// ln B(a, b) without the cancellation that lgamma(a)+lgamma(b)-lgamma(a+b)
// suffers once either argument is large.
inline double log_beta(double a, double b) {
  const double p = std::min(a, b), q = std::max(a, b);
  constexpr double half_log_2pi = 0.91893853320467274178;
  if (q < 10.0) return std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
  const double corr = stirling_correction(q) - stirling_correction(p + q);
  if (p < 10.0) {
    // lgamma(q) - lgamma(p + q) expanded around q
    return std::lgamma(p) + corr + p - p * std::log(p + q) -
           (q - 0.5) * std::log1p(p / q);
  }
  return -0.5 * std::log(q) + half_log_2pi + stirling_correction(p) + corr +
         (p - 0.5) * std::log(p / (p + q)) + q * std::log1p(-p / (p + q));
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
inline double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw InvariantViolation("incomplete beta continued fraction did not converge");
}

struct BetaPair {
  double lower;  // I_x(a, b)
  double upper;  // 1 - I_x(a, b)
};

// Regularized incomplete beta and its complement. y must equal 1 - x; pass
// it separately when it is known more precisely than 1 - x.
inline BetaPair incomplete_beta(double a, double b, double x, double y) {
  if (x <= 0.0) return {0.0, 1.0};
  if (y <= 0.0) return {1.0, 0.0};
  const double lx = x < 0.5 ? std::log(x) : std::log1p(-y);
  const double ly = y < 0.5 ? std::log(y) : std::log1p(-x);
  const double front = std::exp(a * lx + b * ly - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double lower = front * beta_continued_fraction(a, b, x) / a;
    return {lower, 1.0 - lower};
  }
  const double upper = front * beta_continued_fraction(b, a, y) / b;
  return {1.0 - upper, upper};
}

struct GammaPair {
  double lower;  // P(a, x)
  double upper;  // Q(a, x)
};

// Regularized incomplete gamma: series below a + 1, continued fraction above.
inline GammaPair incomplete_gamma(double a, double x) {
  if (x <= 0.0) return {0.0, 1.0};
  const double log_front = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, del = 1.0 / a, sum = del;
    for (int n = 1; n <= kMaxIter; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) {
        const double lower = sum * std::exp(log_front);
        return {lower, 1.0 - lower};
      }
    }
    throw InvariantViolation("incomplete gamma series did not converge");
  }
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) {
      const double upper = std::exp(log_front) * h;
      return {1.0 - upper, upper};
    }
  }
  throw InvariantViolation("incomplete gamma continued fraction did not converge");
}

}  // namespace special

// ============================================================================
// DISTRIBUTIONS
// ============================================================================

// P(|T| >= |t|) for Student's t with df degrees of freedom.
inline double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("df", "must be > 0");
  if (std::isnan(t)) throw ValidationError("t", "NaN");
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  return special::incomplete_beta(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2)).lower;
}

inline double t_cdf(double x, double df) {
  const double tail = 0.5 * t_two_sided_p(x, df);
  return x > 0.0 ? 1.0 - tail : tail;
}

inline double chi_square_cdf(double x, double df) {
  if (!(x >= 0.0)) throw ValidationError("x", "chi-square argument must be >= 0");
  if (!(df > 0.0)) throw ValidationError("df", "must be > 0");
  return special::incomplete_gamma(df / 2.0, x / 2.0).lower;
}

// Upper tail, computed directly so tiny p-values keep their precision.
inline double chi_square_sf(double x, double df) {
  if (!(x >= 0.0)) throw ValidationError("x", "chi-square argument must be >= 0");
  if (!(df > 0.0)) throw ValidationError("df", "must be > 0");
  return special::incomplete_gamma(df / 2.0, x / 2.0).upper;
}

inline Stars stars(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p", "p-value outside [0,1]");
  if (p < 0.001) return Stars::three;
  if (p < 0.01) return Stars::two;
  if (p < 0.05) return Stars::one;
  return Stars::none;
}

// ============================================================================
// WELCH T-TEST
// ============================================================================

// t = mean_a - mean_b over the unpooled standard error; Welch-Satterthwaite df.
inline TTestResult welch_t_summary(const GroupSummary& a, const GroupSummary& b) {
  if (a.n < 2 || b.n < 2) throw ValidationError("n", "each group needs n >= 2");
  if (!(a.sd >= 0.0) || !(b.sd >= 0.0)) throw ValidationError("sd", "must be >= 0");
  const double va = a.sd * a.sd / static_cast<double>(a.n);
  const double vb = b.sd * b.sd / static_cast<double>(b.n);
  const double se2 = va + vb;
  if (!(se2 > 0.0)) throw ValidationError("sd", "zero pooled standard error");
  TTestResult r;
  r.t = (a.mean - b.mean) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / static_cast<double>(a.n - 1) +
                      vb * vb / static_cast<double>(b.n - 1));
  r.p = t_two_sided_p(r.t, r.df);
  r.stars = stars(r.p);
  return r;
}

// Classic pooled-variance Student t, df = n_a + n_b - 2. Kept for comparing
// against reports that used it.
inline TTestResult student_t_summary(const GroupSummary& a, const GroupSummary& b) {
  if (a.n < 2 || b.n < 2) throw ValidationError("n", "each group needs n >= 2");
  if (!(a.sd >= 0.0) || !(b.sd >= 0.0)) throw ValidationError("sd", "must be >= 0");
  const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
  const double pooled = ((na - 1.0) * a.sd * a.sd + (nb - 1.0) * b.sd * b.sd) / (na + nb - 2.0);
  const double se2 = pooled * (1.0 / na + 1.0 / nb);
  if (!(se2 > 0.0)) throw ValidationError("sd", "zero pooled standard error");
  TTestResult r;
  r.t = (a.mean - b.mean) / std::sqrt(se2);
  r.df = na + nb - 2.0;
  r.p = t_two_sided_p(r.t, r.df);
  r.stars = stars(r.p);
  return r;
}

inline GroupSummary summarize(std::span<const double> sample) {
  GroupSummary g;
  g.n = static_cast<std::int64_t>(sample.size());
  if (sample.empty()) return g;
  double sum = 0.0;
  for (double v : sample) sum += v;
  g.mean = sum / static_cast<double>(sample.size());
  if (sample.size() < 2) return g;
  double ss = 0.0, comp = 0.0;
  for (double v : sample) {
    ss += (v - g.mean) * (v - g.mean);
    comp += v - g.mean;
  }
  const double n = static_cast<double>(sample.size());
  g.sd = std::sqrt(std::max(0.0, (ss - comp * comp / n) / (n - 1.0)));
  return g;
}

inline TTestResult welch_t_raw(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw ValidationError("n", "each sample needs at least 2 values");
  const GroupSummary sa = summarize(a), sb = summarize(b);
  if (sa.sd == 0.0 && sb.sd == 0.0)
    throw ValidationError("sd", "both samples have zero variance; df undefined");
  return welch_t_summary(sa, sb);
}

inline TTestResult student_t_raw(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw ValidationError("n", "each sample needs at least 2 values");
  return student_t_summary(summarize(a), summarize(b));
}

// ============================================================================
// CHI-SQUARE INDEPENDENCE
// ============================================================================

inline constexpr double kResidualCutoff = 1.96;

inline ChiSquareResult chi_square_independence(
    const std::vector<std::vector<std::int64_t>>& observed) {
  const std::size_t rows = observed.size();
  if (rows < 2) throw ValidationError("observed", "need at least 2 rows");
  const std::size_t cols = observed[0].size();
  if (cols < 2) throw ValidationError("observed", "need at least 2 columns");
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (observed[i].size() != cols) throw ValidationError("observed", "ragged matrix");
    for (std::size_t j = 0; j < cols; ++j) {
      if (observed[i][j] < 0) throw ValidationError("observed", "negative count");
      const auto v = static_cast<double>(observed[i][j]);
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
    }
  }
  for (std::size_t i = 0; i < rows; ++i)
    if (row_sum[i] == 0.0) throw ValidationError("observed", "zero margin in row " + std::to_string(i));
  for (std::size_t j = 0; j < cols; ++j)
    if (col_sum[j] == 0.0) throw ValidationError("observed", "zero margin in column " + std::to_string(j));

  ChiSquareResult r;
  r.df = static_cast<int>((rows - 1) * (cols - 1));
  r.cells.assign(rows, std::vector<ChiCell>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      ChiCell& cell = r.cells[i][j];
      cell.observed = observed[i][j];
      cell.expected = row_sum[i] * col_sum[j] / total;
      const double diff = static_cast<double>(cell.observed) - cell.expected;
      r.chi2 += diff * diff / cell.expected;
      cell.adj_residual =
          diff / std::sqrt(cell.expected * (1.0 - row_sum[i] / total) * (1.0 - col_sum[j] / total));
      if (cell.adj_residual > kResidualCutoff) cell.flag = CellFlag::above;
      else if (cell.adj_residual < -kResidualCutoff) cell.flag = CellFlag::below;
    }
  }
  r.p = chi_square_sf(r.chi2, r.df);
  return r;
}

// ============================================================================
// TAXONOMIES AND FREQUENCIES
// ============================================================================

enum class UserTier { ordinary, mid_tier, celebrity };

inline constexpr const char* tier_name(UserTier t) {
  switch (t) {
    case UserTier::ordinary: return "ordinary user";
    case UserTier::mid_tier: return "mid-tier influencer";
    case UserTier::celebrity: return "celebrity influencer";
  }
  return "?";
}

inline UserTier tier_of(std::int64_t follower_count) {
  if (follower_count < 0) throw ValidationError("follower_count", "negative count");
  if (follower_count < 50'000) return UserTier::ordinary;
  if (follower_count <= 2'500'000) return UserTier::mid_tier;
  return UserTier::celebrity;
}

enum class LengthBin { s1_15, s16_45, s46_60, overflow };

inline constexpr const char* length_bin_name(LengthBin b) {
  switch (b) {
    case LengthBin::s1_15: return "1 ~ 15s";
    case LengthBin::s16_45: return "16 ~ 45s";
    case LengthBin::s46_60: return "46 ~ 60s";
    case LengthBin::overflow: return "> 60s";
  }
  return "?";
}

inline LengthBin length_bin(std::int64_t duration_s) {
  if (duration_s < 1) throw ValidationError("duration_s", "duration_s < 1");
  if (duration_s <= 15) return LengthBin::s1_15;
  if (duration_s <= 45) return LengthBin::s16_45;
  if (duration_s <= 60) return LengthBin::s46_60;
  return LengthBin::overflow;
}

struct FrequencyRow {
  std::string label;
  std::int64_t count = 0;
  double percent = 0.0;            // rounded half-up to 2 decimals
  std::int64_t percent_centi = 0;  // percent * 100, exact
};

// count / total as a percentage, rounded half-up to two decimals in integer
// arithmetic (so 648 / 8173 is exactly 793 hundredths).
inline std::int64_t percent_centi(std::int64_t count, std::int64_t total) {
  if (total <= 0) throw ValidationError("total", "must be > 0");
  return (count * 20000 + total) / (2 * total);
}

inline std::string format_centi(std::int64_t centi) {
  const char* sign = centi < 0 ? "-" : "";
  centi = centi < 0 ? -centi : centi;
  return sign + std::to_string(centi / 100) + "." + (centi % 100 < 10 ? "0" : "") +
         std::to_string(centi % 100);
}

inline std::string format_percent(double fraction) {
  return format_centi(static_cast<std::int64_t>(std::floor(fraction * 10000.0 + 0.5 + 1e-9)));
}

// Each element and its complement, then source (verified) and identity rows.
inline std::vector<FrequencyRow> frequency_table(std::span<const FrameLabelSet> labels,
                                                 std::span<const VideoMeta> meta) {
  if (labels.size() != meta.size())
    throw ValidationError("labels", "labels and meta differ in length");
  std::vector<FrequencyRow> rows;
  if (labels.empty()) return rows;
  const auto total = static_cast<std::int64_t>(labels.size());
  auto pair = [&](const std::string& yes, const std::string& no, auto pred) {
    std::int64_t n = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) n += pred(labels[i], meta[i]) ? 1 : 0;
    for (auto [label, count] : {std::pair{yes, n}, std::pair{no, total - n}}) {
      FrequencyRow row{label, count, 0.0, percent_centi(count, total)};
      row.percent = static_cast<double>(row.percent_centi) / 100.0;
      rows.push_back(std::move(row));
    }
  };
  pair("riot", "non-riot", [](const FrameLabelSet& l, const VideoMeta&) { return l.riot; });
  pair("confrontation", "non-confrontation",
       [](const FrameLabelSet& l, const VideoMeta&) { return l.confrontation; });
  pair("spectacle", "non-spectacle", [](const FrameLabelSet& l, const VideoMeta&) { return l.spectacle; });
  pair("debate", "non-debate", [](const FrameLabelSet& l, const VideoMeta&) { return l.debate; });
  pair("verified", "unverified", [](const FrameLabelSet&, const VideoMeta& m) { return m.verified; });
  pair("black", "non-black", [](const FrameLabelSet& l, const VideoMeta&) { return l.black_presence; });
  pair("black group", "non-black group",
       [](const FrameLabelSet& l, const VideoMeta&) { return l.black_group_presence; });
  return rows;
}

}  // namespace vframe
