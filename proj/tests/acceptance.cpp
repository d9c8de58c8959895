// Acceptance run: one PASS/FAIL line per criterion, detail lines indented
// below it. Exit status is nonzero when any criterion fails.

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "support.hpp"
#include "vframe/vframe.hpp"

using namespace vframe;
using Clock = std::chrono::steady_clock;

namespace {

const std::filesystem::path kData = VFRAME_DATA;

int failures = 0;

void verdict(bool ok, const std::string& name, const std::vector<std::string>& details = {}) {
  std::printf("%s  %s\n", ok ? "PASS" : "FAIL", name.c_str());
  for (const auto& d : details) std::printf("      %s\n", d.c_str());
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------

void t_reanalysis() {
  const auto start = Clock::now();
  const auto rows = parse_summary_rows(detail::read_file(kData / "table2_summary.jsonl"), "table2_summary.jsonl");
  std::vector<TReplication> reps;
  for (const auto& r : rows) reps.push_back(replicate_t(r));
  const double elapsed = seconds_since(start);

  struct Named {
    const char* split;
    const char* metric;
    double t;
    double df;
  };
  const Named named[] = {{"riot", "follower", -6.68, 1721}, {"riot", "share", -8.58, 2483},
                         {"riot", "comment", -6.81, 2357},  {"debate", "play", -8.23, 8077},
                         {"verified", "play", 5.33, 493},   {"spectacle", "play", -3.75, 117}};
  std::vector<std::string> details;
  bool named_ok = true;
  for (const Named& n : named) {
    const TReplication* hit = nullptr;
    for (const auto& r : reps)
      if (r.row.split == n.split && r.row.metric == n.metric) hit = &r;
    if (!hit) {
      named_ok = false;
      details.push_back(fmt("%s/%s: row missing", n.split, n.metric));
      continue;
    }
    const TTestResult& used = hit->compared_pooled ? hit->pooled : hit->welch;
    const bool ok = std::abs(used.t - n.t) <= kTRoundingTolerance && std::abs(used.df - n.df) <= kDfRoundingTolerance;
    named_ok = named_ok && ok;
    details.push_back(fmt("%s/%s: t %.2f (published %.2f), df %.0f (published %.0f) %s", n.split, n.metric, used.t,
                          n.t, used.df, n.df, ok ? "ok" : "OUT"));
  }

  bool all_ok = true;
  std::size_t checked = 0;
  for (const auto& r : reps) {
    if (r.row.ambiguous || !r.row.reported_t) continue;
    ++checked;
    const TTestResult& used = r.compared_pooled ? r.pooled : r.welch;
    const bool t_ok = std::abs(used.t - *r.row.reported_t) <= kTRoundingTolerance;
    const bool df_ok = !r.row.reported_df || std::abs(used.df - *r.row.reported_df) <= kDfRoundingTolerance;
    if (!(t_ok && df_ok)) {
      all_ok = false;
      details.push_back(fmt("%s/%s: t %.2f vs published %.2f (delta %.2f); rounding range %.2f..%.2f", r.row.split.c_str(),
                            r.row.metric.c_str(), used.t, *r.row.reported_t, used.t - *r.row.reported_t, r.t_low,
                            r.t_high));
    }
  }
  details.push_back(fmt("named rows %s; %zu unambiguous rows checked, %s", named_ok ? "ok" : "OUT", checked,
                        all_ok ? "all within tolerance" : "some outside tolerance"));
  details.push_back(fmt("runtime %.4f s", elapsed));
  verdict(named_ok && all_ok && elapsed < 1.0, "t-test reanalysis of published group summaries", details);
}

void chi_reanalysis() {
  const auto blocks = parse_counts_blocks(detail::read_file(kData / "table3_counts.jsonl"), "table3_counts.jsonl");
  const double significant[] = {98.62, 11.66, 194.3, 49.49, 529.56};
  std::vector<std::string> details;
  bool ok = true;
  std::size_t matched = 0;
  for (const auto& blk : blocks) {
    const ChiReplication r = replicate_chi(blk);
    const bool chi_ok = !blk.reported_chi2 || std::abs(r.result.chi2 - *blk.reported_chi2) <= kChiRoundingTolerance;
    const bool exp_ok = r.max_expected_delta <= 1.0;
    for (double s : significant)
      if (blk.reported_chi2 && *blk.reported_chi2 == s && chi_ok) ++matched;
    ok = ok && chi_ok && exp_ok && r.flags_match;
    details.push_back(fmt("%s x %s: chi2 %.2f (published %.2f), max expected delta %.2f, flags %s",
                          blk.dimension.c_str(), blk.frame.c_str(), r.result.chi2,
                          blk.reported_chi2 ? *blk.reported_chi2 : NAN, r.max_expected_delta,
                          r.flags_match ? "match" : "DIFFER"));
  }
  ok = ok && matched == 5;

  // spot check: debate x 1-15s expected count
  for (const auto& blk : blocks)
    if (blk.dimension == "video length" && blk.frame == "debate") {
      const double e = chi_square_independence(blk.observed).cells[0][0].expected;
      ok = ok && std::abs(e - 1646) <= 1.0;
      details.push_back(fmt("debate x 1-15s expected %.2f (published 1646)", e));
    }
  verdict(ok, "chi-square reanalysis of published contingency counts", details);
}

void accuracy_arithmetic() {
  const std::string a = format_percent(make_report({0.7375, 0.7750, 0.7675, 0.7350, 0.7150}).overall);
  const std::string b = format_percent(make_report({0.71, 0.78, 0.76, 0.77, 0.69}).overall);
  verdict(a == "74.60" && b == "74.20", "overall accuracy is the mean of five elements",
          {"fine-tuning set " + a + "%", "validation set " + b + "%"});
}

void frequency_rendering() {
  const std::int64_t total = 8173;
  std::vector<FrameLabelSet> labels(total);
  std::vector<VideoMeta> meta(total);
  for (std::int64_t i = 0; i < total; ++i) {
    auto& l = labels[static_cast<std::size_t>(i)];
    l.riot = i < 648;
    l.confrontation = i < 65;
    l.spectacle = i < 103;
    l.debate = i < 3709;
    l.black_presence = i < 4386;
    meta[static_cast<std::size_t>(i)].verified = i < 489;
  }
  const auto rows = frequency_table(labels, meta);
  const std::pair<const char*, const char*> want[] = {{"riot", "7.93"},   {"confrontation", "0.80"},
                                                      {"spectacle", "1.26"}, {"debate", "45.38"},
                                                      {"black", "53.66"},  {"verified", "5.98"}};
  bool ok = true;
  std::vector<std::string> details;
  for (auto [label, text] : want) {
    std::string got = "missing";
    for (const auto& r : rows)
      if (r.label == label) got = format_centi(r.percent_centi);
    ok = ok && got == text;
    details.push_back(fmt("%s %s%% (want %s%%)", label, got.c_str(), text));
  }
  verdict(ok, "frequency percentages of 8173 videos", details);
}

void oracle_equivalence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20200525);
  const int pairs = 12000;
  int agree = 0;
  for (int i = 0; i < pairs; ++i) {
    RuleConfig cfg = i % 4 == 0 ? RuleConfig{} : vtest::random_config(rng);
    const bool protest = vtest::coin(rng, 0.2);
    cfg.confront_requires_protest = protest;
    const ScoreStream s = vtest::random_stream(rng, 40, protest);
    if (classify_video(s, cfg) == oracle_classify(s, cfg)) ++agree;
  }
  const double elapsed = seconds_since(start);
  verdict(agree == pairs && elapsed < 60.0, "rule engine matches brute-force oracle",
          {fmt("%d of %d random (stream, config) pairs agree", agree, pairs), fmt("runtime %.2f s", elapsed)});
}

void monotonicity() {
  std::mt19937_64 rng(8173);
  const int trials = 1000;
  struct Rule {
    const char* name;
    std::function<bool(const FrameLabelSet&)> get;
    std::function<void(FrameScore&)> raise;
  };
  const Rule rules[] = {
      {"riot under higher violence", [](const FrameLabelSet& l) { return l.riot; },
       [&](FrameScore& f) { f.violence = std::min(1.0, f.violence + vtest::uniform(rng, 0.0, 0.3)); }},
      {"spectacle under larger crowds", [](const FrameLabelSet& l) { return l.spectacle; },
       [&](FrameScore& f) { f.crowd_count += vtest::uniform_int(rng, 0, 60); }},
      {"confrontation under higher police confidence", [](const FrameLabelSet& l) { return l.confrontation; },
       [&](FrameScore& f) { f.police_conf = std::min(1.0, f.police_conf + vtest::uniform(rng, 0.0, 0.3)); }},
      {"debate under larger head areas", [](const FrameLabelSet& l) { return l.debate; },
       [&](FrameScore& f) {
         for (auto& face : f.faces)
           face.head_area_fraction = std::min(1.0, face.head_area_fraction + vtest::uniform(rng, 0.0, 0.1));
       }},
  };
  bool ok = true;
  std::vector<std::string> details;
  for (const Rule& rule : rules) {
    int flips = 0, positives = 0;
    for (int t = 0; t < trials; ++t) {
      const RuleConfig cfg = t % 2 == 0 ? RuleConfig{} : vtest::random_config(rng);
      const ScoreStream before = vtest::random_stream(rng, 40);
      ScoreStream after = before;
      for (auto& f : after)
        if (vtest::coin(rng, 0.5)) rule.raise(f);
      const bool was = rule.get(classify_video(before, cfg));
      const bool now = rule.get(classify_video(after, cfg));
      positives += was;
      flips += was && !now;
    }
    ok = ok && flips == 0;
    details.push_back(fmt("%s: %d trials, %d positive before, %d true->false flips", rule.name, trials, positives, flips));
  }
  verdict(ok, "rules are monotone in their driving score", details);
}

ScoreStream violence_run(double v, int len) {
  ScoreStream s = vtest::flat_stream(12);
  for (int i = 0; i < len; ++i) s[static_cast<std::size_t>(2 + i)].violence = v;
  return s;
}

void calibration_recovery() {
  RuleConfig truth;
  truth.riot_violence_threshold = 0.6;
  truth.riot_min_run = 4;
  std::mt19937_64 rng(13);
  std::vector<ScoreStream> streams{violence_run(0.65, 4), violence_run(0.65, 3), violence_run(0.55, 6),
                                   violence_run(0.75, 4), violence_run(0.68, 8), violence_run(0.45, 8)};
  for (int i = 0; i < 300; ++i) streams.push_back(vtest::random_stream(rng, 40));
  std::vector<LabeledVideo> labeled;
  StreamMap map;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const std::string id = "v" + std::to_string(i);
    labeled.push_back({id, oracle_classify(streams[i], truth)});
    map[id] = streams[i];
  }
  GridSpec grid;
  grid.values[Param::riot_violence_threshold] = {0.4, 0.5, 0.6, 0.7};
  grid.values[Param::riot_min_run] = {1, 2, 3, 4, 5, 6, 7, 8};
  grid.target_elements = {Element::riot};
  const GridResult r = grid_search(labeled, map, grid, RuleConfig{});
  const bool ok = r.best.riot_violence_threshold == 0.6 && r.best.riot_min_run == 4 && r.report[Element::riot] == 1.0;
  verdict(ok, "grid search recovers planted thresholds",
          {fmt("planted violence > 0.60 for 4 s; recovered %.2f for %d s, riot accuracy %.4f over %zu videos",
               r.best.riot_violence_threshold, r.best.riot_min_run, r.report[Element::riot], labeled.size())});
}

void special_functions() {
  const double dfs[] = {1, 2, 117, 1721, 8171};
  double worst_t = 0, worst_chi = 0;
  int points = 0;
  for (double df : dfs) {
    const boost::math::students_t t_ref(df);
    const boost::math::chi_squared chi_ref(df);
    for (int k = 0; k < 20; ++k) {
      const double x = -6.0 + 12.0 * k / 19.0;
      worst_t = std::max(worst_t, std::abs(t_cdf(x, df) - boost::math::cdf(t_ref, x)));
      const double q = df * (0.05 + 2.95 * k / 19.0);
      worst_chi = std::max(worst_chi, std::abs(chi_square_cdf(q, df) - boost::math::cdf(chi_ref, q)));
      ++points;
    }
  }
  verdict(worst_t <= 1e-8 && worst_chi <= 1e-8 && points == 100, "t and chi-square CDFs match Boost.Math",
          {fmt("%d points per distribution; max |diff| t %.2e, chi-square %.2e", points, worst_t, worst_chi)});
}

double ref_kappa(const std::vector<char>& x, const std::vector<char>& y) {
  double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && y[i]) ++a;
    else if (x[i]) ++b;
    else if (y[i]) ++c;
    else ++d;
  }
  return 2 * (a * d - b * c) / ((a + b) * (b + d) + (a + c) * (c + d));
}

void kappa() {
  const bool same_a[] = {true, false, true, false, true};
  const bool flip_a[] = {true, false, true, false};
  const bool flip_b[] = {false, true, false, true};
  const double one = cohen_kappa(same_a, same_a).kappa;
  const double minus_one = cohen_kappa(flip_a, flip_b).kappa;

  std::mt19937_64 rng(50);
  double worst = 0;
  int compared = 0;
  while (compared < 50) {
    const std::size_t n = static_cast<std::size_t>(vtest::uniform_int(rng, 5, 200));
    std::vector<char> x(n), y(n);
    const double px = vtest::uniform(rng, 0.1, 0.9), agree = vtest::uniform(rng, 0.3, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = vtest::coin(rng, px);
      y[i] = vtest::coin(rng, agree) ? x[i] : !x[i];
    }
    const double ref = ref_kappa(x, y);
    if (!std::isfinite(ref)) continue;  // both coders constant and equal
    auto xb = std::make_unique<bool[]>(n), yb = std::make_unique<bool[]>(n);
    for (std::size_t i = 0; i < n; ++i) {
      xb[i] = x[i];
      yb[i] = y[i];
    }
    const double got = cohen_kappa(std::span<const bool>(xb.get(), n), std::span<const bool>(yb.get(), n)).kappa;
    worst = std::max(worst, std::abs(got - ref));
    ++compared;
  }
  verdict(one == 1.0 && minus_one == -1.0 && worst <= 1e-12, "Cohen's kappa",
          {fmt("identical coders %.1f, opposite coders %.1f", one, minus_one),
           fmt("%d random pairs, max |diff| vs 2(ad-bc) form %.2e", compared, worst)});
}

}  // namespace

int main() {
  t_reanalysis();
  chi_reanalysis();
  accuracy_arithmetic();
  frequency_rendering();
  oracle_equivalence();
  monotonicity();
  calibration_recovery();
  special_functions();
  kappa();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
