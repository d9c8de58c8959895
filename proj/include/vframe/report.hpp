#pragma once

// Corpus-level reports: frequency table, the t-test battery (frame, source
// and identity splits against six engagement metrics), chi-square tables of
// frames by user tier and by video length, and the duration histogram.
// Also recomputes published t and chi-square values from aggregates.
//
// All statistics run on raw units; display scaling happens only when
// rendering.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vframe/datamodel.hpp"
#include "vframe/detail/util.hpp"
#include "vframe/ingest.hpp"
#include "vframe/stats.hpp"

namespace vframe {

// ============================================================================
// METRICS AND SPLITS
// ============================================================================

enum class Metric { follower, duration, play, like, comment, share };

inline constexpr Metric kAllMetrics[] = {Metric::follower, Metric::duration, Metric::play,
                                         Metric::like,     Metric::comment,  Metric::share};

struct MetricInfo {
  const char* name;
  double display_divisor;
  const char* unit;
};

inline constexpr MetricInfo metric_info(Metric m) {
  switch (m) {
    case Metric::follower: return {"follower", 1e6, "million"};
    case Metric::duration: return {"duration", 1.0, "second"};
    case Metric::play: return {"play", 1e6, "million"};
    case Metric::like: return {"like", 1e6, "million"};
    case Metric::comment: return {"comment", 1e3, "thousand"};
    case Metric::share: return {"share", 1e3, "thousand"};
  }
  return {"?", 1.0, ""};
}

inline std::optional<Metric> metric_from_name(std::string_view name) {
  for (Metric m : kAllMetrics)
    if (name == metric_info(m).name) return m;
  return std::nullopt;
}

inline double metric_value(const VideoMeta& v, Metric m) {
  switch (m) {
    case Metric::follower: return static_cast<double>(v.follower_count);
    case Metric::duration: return static_cast<double>(v.duration_s);
    case Metric::play: return static_cast<double>(v.play_count);
    case Metric::like: return static_cast<double>(v.like_count);
    case Metric::comment: return static_cast<double>(v.comment_count);
    case Metric::share: return static_cast<double>(v.share_count);
  }
  return 0.0;
}

enum class SplitKind { riot, confrontation, spectacle, debate, verified, black };

inline constexpr SplitKind kAllSplits[] = {SplitKind::riot,   SplitKind::confrontation,
                                           SplitKind::spectacle, SplitKind::debate,
                                           SplitKind::verified,  SplitKind::black};

struct SplitInfo {
  const char* name;
  const char* yes;
  const char* no;
};

inline constexpr SplitInfo split_info(SplitKind s) {
  switch (s) {
    case SplitKind::riot: return {"riot", "Riot", "Non-riot"};
    case SplitKind::confrontation: return {"confrontation", "Confrontation", "Non-confront"};
    case SplitKind::spectacle: return {"spectacle", "Spectacle", "Non-spect"};
    case SplitKind::debate: return {"debate", "Debate", "Non-debate"};
    case SplitKind::verified: return {"verified", "Verified", "Unverified"};
    case SplitKind::black: return {"black", "Black", "Non-Black"};
  }
  return {"?", "?", "?"};
}

inline bool split_value(SplitKind s, const FrameLabelSet& l, const VideoMeta& m) {
  switch (s) {
    case SplitKind::riot: return l.riot;
    case SplitKind::confrontation: return l.confrontation;
    case SplitKind::spectacle: return l.spectacle;
    case SplitKind::debate: return l.debate;
    case SplitKind::verified: return m.verified;
    case SplitKind::black: return l.black_presence;
  }
  return false;
}

// ============================================================================
// REPORT BUNDLE
// ============================================================================

inline constexpr const char* kInsufficient = "insufficient n";

struct TTestRow {
  SplitKind split;
  Metric metric;
  GroupSummary yes;  // raw units
  GroupSummary no;
  std::optional<TTestResult> result;  // empty when the test is undefined
  std::string note;
};

struct ChiTable {
  std::string dimension;  // "user type" or "video length"
  std::string frame;      // riot, confrontation, spectacle, debate
  std::vector<std::string> row_labels;
  std::vector<std::vector<std::int64_t>> observed;  // columns: yes, non
  std::optional<ChiSquareResult> result;
  std::string note;
};

struct ReportBundle {
  std::size_t n = 0;
  std::vector<FrequencyRow> frequencies;
  std::vector<TTestRow> ttests;
  std::vector<ChiTable> chi_tables;
  std::vector<std::pair<std::int64_t, std::int64_t>> histogram;  // duration_s, count
};

namespace detail {

inline ChiTable make_chi_table(std::string dimension, Element frame,
                               std::vector<std::string> row_labels,
                               std::vector<std::vector<std::int64_t>> observed) {
  ChiTable t{std::move(dimension), element_name(frame), std::move(row_labels), std::move(observed),
             std::nullopt, ""};
  try {
    t.result = chi_square_independence(t.observed);
  } catch (const ValidationError& e) {
    t.note = std::string(kInsufficient) + ": " + e.reason();
  }
  return t;
}

}  // namespace detail

// labels and meta must cover the same video ids.
inline ReportBundle build_report(const std::map<std::string, FrameLabelSet>& labels,
                                 std::span<const VideoMeta> meta) {
  std::vector<std::string> orphans;
  std::map<std::string, bool> meta_ids;
  for (const auto& m : meta) {
    meta_ids[m.video_id] = true;
    if (!labels.count(m.video_id)) orphans.push_back(m.video_id + " (no labels)");
  }
  for (const auto& [id, _] : labels)
    if (!meta_ids.count(id)) orphans.push_back(id + " (no metadata)");
  if (!orphans.empty()) {
    std::string msg = "labels/meta join failed for " + std::to_string(orphans.size()) + " id(s):";
    for (std::size_t i = 0; i < orphans.size() && i < 20; ++i) msg += " " + orphans[i];
    if (orphans.size() > 20) msg += " ...";
    throw InputError(msg);
  }

  std::vector<FrameLabelSet> joined;
  joined.reserve(meta.size());
  for (const auto& m : meta) joined.push_back(labels.at(m.video_id));

  ReportBundle b;
  b.n = meta.size();
  b.frequencies = frequency_table(joined, meta);

  for (SplitKind s : kAllSplits) {
    for (Metric metric : kAllMetrics) {
      std::vector<double> yes, no;
      for (std::size_t i = 0; i < meta.size(); ++i)
        (split_value(s, joined[i], meta[i]) ? yes : no).push_back(metric_value(meta[i], metric));
      TTestRow row{s, metric, summarize(yes), summarize(no), std::nullopt, ""};
      try {
        row.result = welch_t_raw(yes, no);
      } catch (const ValidationError& e) {
        row.note = std::string(kInsufficient) + ": " + e.reason();
      }
      b.ttests.push_back(std::move(row));
    }
  }

  const Element frames[] = {Element::riot, Element::confrontation, Element::spectacle,
                            Element::debate};
  for (Element frame : frames) {
    std::vector<std::vector<std::int64_t>> obs(3, std::vector<std::int64_t>(2, 0));
    for (std::size_t i = 0; i < meta.size(); ++i)
      ++obs[static_cast<std::size_t>(tier_of(meta[i].follower_count))]
           [element_value(joined[i], frame) ? 0 : 1];
    b.chi_tables.push_back(detail::make_chi_table(
        "user type", frame,
        {tier_name(UserTier::ordinary), tier_name(UserTier::mid_tier), tier_name(UserTier::celebrity)},
        std::move(obs)));
  }
  for (Element frame : frames) {
    std::vector<std::vector<std::int64_t>> obs(3, std::vector<std::int64_t>(2, 0));
    for (std::size_t i = 0; i < meta.size(); ++i) {
      const LengthBin bin = length_bin(meta[i].duration_s);
      if (bin == LengthBin::overflow) continue;
      ++obs[static_cast<std::size_t>(bin)][element_value(joined[i], frame) ? 0 : 1];
    }
    b.chi_tables.push_back(detail::make_chi_table(
        "video length", frame,
        {length_bin_name(LengthBin::s1_15), length_bin_name(LengthBin::s16_45),
         length_bin_name(LengthBin::s46_60)},
        std::move(obs)));
  }

  std::map<std::int64_t, std::int64_t> hist;
  std::int64_t max_duration = 0;
  for (const auto& m : meta) {
    ++hist[m.duration_s];
    max_duration = std::max(max_duration, m.duration_s);
  }
  for (std::int64_t d = 1; d <= max_duration; ++d) {
    auto it = hist.find(d);
    b.histogram.emplace_back(d, it == hist.end() ? 0 : it->second);
  }
  return b;
}

// ============================================================================
// RENDERING
// ============================================================================

namespace detail {

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

inline const char* flag_text(CellFlag f) {
  switch (f) {
    case CellFlag::none: return "";
    case CellFlag::below: return "below";
    case CellFlag::above: return "above";
  }
  return "";
}

inline const char* flag_mark(CellFlag f) {
  switch (f) {
    case CellFlag::none: return "";
    case CellFlag::below: return "-";
    case CellFlag::above: return "+";
  }
  return "";
}

}  // namespace detail

inline std::string render_frequency_tsv(const ReportBundle& b) {
  std::string out = "label\tcount\tpercent\n";
  for (const auto& r : b.frequencies)
    out += r.label + "\t" + std::to_string(r.count) + "\t" + format_centi(r.percent_centi) + "\n";
  return out;
}

// Means and SDs in display units; t, df, p unaffected by scaling.
inline std::string render_ttests_tsv(const ReportBundle& b) {
  std::string out =
      "split\tmetric\tunit\tn_yes\tmean_yes\tsd_yes\tn_no\tmean_no\tsd_no\tt\tdf\tp\tstars\tnote\n";
  for (const auto& r : b.ttests) {
    const MetricInfo mi = metric_info(r.metric);
    const double k = mi.display_divisor;
    out += std::string(split_info(r.split).name) + "\t" + mi.name + "\t" + mi.unit + "\t" +
           std::to_string(r.yes.n) + "\t" + detail::num(r.yes.mean / k) + "\t" +
           detail::num(r.yes.sd / k) + "\t" + std::to_string(r.no.n) + "\t" +
           detail::num(r.no.mean / k) + "\t" + detail::num(r.no.sd / k) + "\t";
    if (r.result)
      out += detail::num(r.result->t) + "\t" + detail::num(r.result->df) + "\t" +
             detail::num(r.result->p) + "\t" + stars_text(r.result->stars) + "\t";
    else
      out += "\t\t\t\t";
    out += r.note + "\n";
  }
  return out;
}

inline std::string render_chisquare_tsv(const ReportBundle& b) {
  std::string out = "dimension\tframe\tchi2\tdf\tp\tstars\tnote\n";
  for (const auto& t : b.chi_tables) {
    out += t.dimension + "\t" + t.frame + "\t";
    if (t.result)
      out += detail::num(t.result->chi2) + "\t" + std::to_string(t.result->df) + "\t" +
             detail::num(t.result->p) + "\t" + stars_text(stars(t.result->p)) + "\t";
    else
      out += "\t\t\t\t";
    out += t.note + "\n";
  }
  return out;
}

inline std::string render_chisquare_cells_tsv(const ReportBundle& b) {
  std::string out = "dimension\tframe\trow\tcolumn\tobserved\texpected\tadj_residual\tflag\n";
  const char* cols[] = {"yes", "non"};
  for (const auto& t : b.chi_tables) {
    for (std::size_t i = 0; i < t.row_labels.size(); ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        out += t.dimension + "\t" + t.frame + "\t" + t.row_labels[i] + "\t" + cols[j] + "\t" +
               std::to_string(t.observed[i][j]) + "\t";
        if (t.result) {
          const ChiCell& c = t.result->cells[i][j];
          out += detail::num(c.expected) + "\t" + detail::num(c.adj_residual) + "\t" +
                 detail::flag_text(c.flag);
        } else {
          out += "\t\t";
        }
        out += "\n";
      }
    }
  }
  return out;
}

inline std::string render_histogram_tsv(const ReportBundle& b) {
  std::string out = "duration_s\tcount\n";
  for (const auto& [d, n] : b.histogram) out += std::to_string(d) + "\t" + std::to_string(n) + "\n";
  return out;
}

// Fixed-width rendering in the layout of the published tables.
inline std::string render_text_report(const ReportBundle& b) {
  using detail::fixed;
  using detail::pad;
  std::ostringstream out;
  out << "Corpus: N = " << b.n << "\n\n";

  out << "Frequencies\n";
  for (const auto& r : b.frequencies)
    out << "  " << pad(r.label, 20, true) << pad(std::to_string(r.count), 8) << "  "
        << pad(format_centi(r.percent_centi) + "%", 8) << "\n";

  out << "\nT-tests (M (SD); t (df)); follower, play, like in millions; comment, share in "
         "thousands; duration in seconds\n";
  out << "  " << pad("", 16, true);
  for (Metric m : kAllMetrics) out << pad(metric_info(m).name, 32);
  out << "\n";
  for (SplitKind s : kAllSplits) {
    const SplitInfo si = split_info(s);
    for (int side = 0; side < 2; ++side) {
      out << "  " << pad(side == 0 ? si.yes : si.no, 16, true);
      for (Metric m : kAllMetrics) {
        const TTestRow* row = nullptr;
        for (const auto& r : b.ttests)
          if (r.split == s && r.metric == m) row = &r;
        const GroupSummary& g = side == 0 ? row->yes : row->no;
        const double k = metric_info(m).display_divisor;
        std::string cell = fixed(g.mean / k, 2) + " (" + fixed(g.sd / k, 2) + ")";
        if (side == 0) {
          cell += row->result ? "  " + std::string(stars_text(row->result->stars)) + fixed(row->result->t, 2) +
                                    " (" + fixed(row->result->df, 0) + ")"
                              : std::string("  ") + kInsufficient;
        } else {
          cell += "  n=" + std::to_string(g.n);
        }
        out << pad(cell, 32);
      }
      out << "\n";
    }
  }

  out << "\nChi-square tests (actual / expected; + above, - below expected at .05)\n";
  for (const auto& t : b.chi_tables) {
    out << "  " << t.dimension << " x " << t.frame << ": ";
    if (t.result)
      out << stars_text(stars(t.result->p)) << "chi2(" << t.result->df << ") = " << fixed(t.result->chi2, 2)
          << ", p = " << detail::num(t.result->p) << "\n";
    else
      out << t.note << "\n";
    for (std::size_t i = 0; i < t.row_labels.size(); ++i) {
      out << "    " << pad(t.row_labels[i], 22, true);
      for (std::size_t j = 0; j < 2; ++j) {
        std::string cell = std::to_string(t.observed[i][j]);
        if (t.result) {
          const ChiCell& c = t.result->cells[i][j];
          cell += detail::flag_mark(c.flag);
          cell += " / " + fixed(c.expected, 0);
        }
        out << pad(cell, 18);
      }
      out << "\n";
    }
  }

  out << "\nDuration histogram (seconds: count)\n";
  for (const auto& [d, n] : b.histogram)
    if (n > 0) out << "  " << pad(std::to_string(d), 5) << ": " << n << "\n";
  return out.str();
}

inline void write_report(const ReportBundle& b, const std::filesystem::path& out_dir) {
  detail::write_file_atomic(out_dir / "frequency.tsv", render_frequency_tsv(b));
  detail::write_file_atomic(out_dir / "ttests.tsv", render_ttests_tsv(b));
  detail::write_file_atomic(out_dir / "chisquare.tsv", render_chisquare_tsv(b));
  detail::write_file_atomic(out_dir / "chisquare_cells.tsv", render_chisquare_cells_tsv(b));
  detail::write_file_atomic(out_dir / "histogram.tsv", render_histogram_tsv(b));
  detail::write_file_atomic(out_dir / "report.txt", render_text_report(b));
}

// ============================================================================
// REANALYSIS FROM PUBLISHED AGGREGATES
// ============================================================================

// Tolerances for calling a recomputed value consistent with a value computed
// from two-decimal summaries.
inline constexpr double kTRoundingTolerance = 0.35;
inline constexpr double kDfRoundingTolerance = 20.0;
inline constexpr double kChiRoundingTolerance = 1.0;

struct SummaryRow {
  std::string split;
  std::string metric;
  double unit_scale = 1.0;  // display unit -> raw unit
  GroupSummary group_a;     // display units as published
  GroupSummary group_b;
  std::optional<double> reported_t;
  std::optional<double> reported_df;
  bool ambiguous = false;  // source typesetting unclear
};

struct CountsBlock {
  std::string dimension;
  std::string frame;
  std::vector<std::string> rows;
  std::vector<std::vector<std::int64_t>> observed;
  std::optional<double> reported_chi2;
  std::vector<std::vector<double>> reported_expected;  // optional
  std::vector<std::vector<std::string>> reported_flags;  // optional, "" or a letter
};

namespace detail {

inline GroupSummary group_from_json(const json& obj, const char* name) {
  if (!obj.is_object()) throw ValidationError(name, "expected an object {n, mean, sd}");
  Fields f(obj);
  f.require_exact({"n", "mean", "sd"});
  GroupSummary g{f.integer("n"), f.real("mean"), f.real("sd")};
  if (g.n < 1) throw ValidationError(std::string(name) + ".n", "must be >= 1");
  if (g.sd < 0) throw ValidationError(std::string(name) + ".sd", "must be >= 0");
  return g;
}

inline void allow_only(const json& obj, std::initializer_list<const char*> names) {
  std::set<std::string> allowed(names.begin(), names.end());
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ValidationError(key, "unknown field");
}

}  // namespace detail

inline std::vector<SummaryRow> parse_summary_rows(const std::string& text,
                                                  const std::string& source = "<summary>") {
  std::vector<SummaryRow> out;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    json obj = detail::parse_json_line(line, line_no, source);
    try {
      detail::Fields f(obj);
      detail::allow_only(obj, {"split", "metric", "unit_scale", "group_a", "group_b", "reported_t",
                               "reported_df", "ambiguous"});
      SummaryRow r;
      r.metric = f.string("metric");
      r.unit_scale = f.real("unit_scale");
      if (!(r.unit_scale > 0)) throw ValidationError("unit_scale", "must be > 0");
      r.group_a = detail::group_from_json(f.at("group_a"), "group_a");
      r.group_b = detail::group_from_json(f.at("group_b"), "group_b");
      if (obj.contains("split")) r.split = f.string("split");
      if (obj.contains("reported_t")) r.reported_t = f.real("reported_t");
      if (obj.contains("reported_df")) r.reported_df = f.real("reported_df");
      if (obj.contains("ambiguous")) r.ambiguous = f.boolean("ambiguous");
      out.push_back(std::move(r));
    } catch (const ValidationError& e) {
      throw InputError(source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const json::out_of_range& e) {
      throw InputError(source + ":" + std::to_string(line_no) + ": missing field: " + e.what());
    }
  });
  return out;
}

inline std::vector<CountsBlock> parse_counts_blocks(const std::string& text,
                                                    const std::string& source = "<counts>") {
  std::vector<CountsBlock> out;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    json obj = detail::parse_json_line(line, line_no, source);
    try {
      detail::Fields f(obj);
      detail::allow_only(obj, {"dimension", "frame", "rows", "observed", "reported_chi2",
                               "reported_expected", "reported_flags"});
      CountsBlock blk;
      if (obj.contains("dimension")) blk.dimension = f.string("dimension");
      if (obj.contains("frame")) blk.frame = f.string("frame");
      if (obj.contains("rows"))
        for (const json& r : f.at("rows")) {
          if (!r.is_string()) throw ValidationError("rows", "expected strings");
          blk.rows.push_back(r.get<std::string>());
        }
      const json& observed = f.at("observed");
      if (!observed.is_array()) throw ValidationError("observed", "expected a matrix");
      for (const json& row : observed) {
        if (!row.is_array()) throw ValidationError("observed", "expected a matrix");
        std::vector<std::int64_t> counts;
        for (const json& c : row) {
          if (c.is_number_float() && c.get<double>() != std::floor(c.get<double>()))
            throw ValidationError("observed", "non-integer count");
          if (!c.is_number()) throw ValidationError("observed", "expected numbers");
          counts.push_back(static_cast<std::int64_t>(std::llround(c.get<double>())));
        }
        blk.observed.push_back(std::move(counts));
      }
      if (obj.contains("reported_chi2")) blk.reported_chi2 = f.real("reported_chi2");
      if (obj.contains("reported_expected"))
        blk.reported_expected = f.at("reported_expected").get<std::vector<std::vector<double>>>();
      if (obj.contains("reported_flags"))
        blk.reported_flags = f.at("reported_flags").get<std::vector<std::vector<std::string>>>();
      out.push_back(std::move(blk));
    } catch (const ValidationError& e) {
      throw InputError(source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw InputError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return out;
}

// Published means and SDs carry two decimals in display units.
inline constexpr double kDisplayHalfStep = 0.005;

struct TReplication {
  SummaryRow row;
  TTestResult welch;
  TTestResult pooled;
  bool compared_pooled = false;  // reported df equals n_a + n_b - 2
  double t_low = 0.0;            // range of t over summaries that round to the published ones
  double t_high = 0.0;
  std::string verdict;
};

struct ChiReplication {
  CountsBlock block;
  ChiSquareResult result;
  double max_expected_delta = 0.0;  // vs reported expected, if given
  bool flags_match = true;          // vs reported flags, if given
  std::string verdict;
};

inline TReplication replicate_t(const SummaryRow& row) {
  const double k = row.unit_scale;
  const GroupSummary a{row.group_a.n, row.group_a.mean * k, row.group_a.sd * k};
  const GroupSummary b{row.group_b.n, row.group_b.mean * k, row.group_b.sd * k};
  TReplication r{row, welch_t_summary(a, b), student_t_summary(a, b), false, 0.0, 0.0, ""};
  const double pooled_df = static_cast<double>(a.n + b.n - 2);
  r.compared_pooled = row.reported_df && *row.reported_df == pooled_df;
  const TTestResult& cmp = r.compared_pooled ? r.pooled : r.welch;

  // t is monotone in each mean and in each SD, so the extremes sit on corners
  r.t_low = r.t_high = cmp.t;
  const double h = kDisplayHalfStep;
  for (int corner = 0; corner < 16; ++corner) {
    auto off = [&](int bit) { return (corner >> bit & 1) ? h : -h; };
    const GroupSummary ca{a.n, (row.group_a.mean + off(0)) * k, std::max(0.0, row.group_a.sd + off(1)) * k};
    const GroupSummary cb{b.n, (row.group_b.mean + off(2)) * k, std::max(0.0, row.group_b.sd + off(3)) * k};
    if (ca.sd == 0.0 && cb.sd == 0.0) continue;
    const double t = (r.compared_pooled ? student_t_summary(ca, cb) : welch_t_summary(ca, cb)).t;
    r.t_low = std::min(r.t_low, t);
    r.t_high = std::max(r.t_high, t);
  }
  if (!row.reported_t) {
    r.verdict = row.ambiguous ? "ambiguous source" : "no reported value";
  } else {
    const bool t_ok = std::fabs(cmp.t - *row.reported_t) <= kTRoundingTolerance;
    const bool df_ok = !row.reported_df || std::fabs(cmp.df - *row.reported_df) <= kDfRoundingTolerance;
    if (t_ok && df_ok) r.verdict = "within rounding";
    else r.verdict = row.ambiguous ? "ambiguous source" : "deviates";
  }
  return r;
}

inline ChiReplication replicate_chi(const CountsBlock& block) {
  ChiReplication r{block, chi_square_independence(block.observed), 0.0, true, ""};
  for (std::size_t i = 0; i < block.reported_expected.size() && i < r.result.cells.size(); ++i)
    for (std::size_t j = 0; j < block.reported_expected[i].size() && j < r.result.cells[i].size(); ++j)
      r.max_expected_delta = std::max(
          r.max_expected_delta, std::fabs(r.result.cells[i][j].expected - block.reported_expected[i][j]));
  for (std::size_t i = 0; i < block.reported_flags.size() && i < r.result.cells.size(); ++i)
    for (std::size_t j = 0; j < block.reported_flags[i].size() && j < r.result.cells[i].size(); ++j)
      r.flags_match = r.flags_match &&
                      (!block.reported_flags[i][j].empty()) == (r.result.cells[i][j].flag != CellFlag::none);
  if (!block.reported_chi2)
    r.verdict = "no reported value";
  else
    r.verdict = std::fabs(r.result.chi2 - *block.reported_chi2) <= kChiRoundingTolerance ? "within rounding"
                                                                                         : "deviates";
  return r;
}

inline std::string render_t_replication_tsv(std::span<const TReplication> rows) {
  std::string out =
      "split\tmetric\tt_welch\tdf_welch\tp_welch\tstars\tt_pooled\tdf_pooled\treported_t\treported_df\t"
      "compared\tdelta_t\tdelta_df\tt_low\tt_high\tverdict\n";
  for (const auto& r : rows) {
    const TTestResult& cmp = r.compared_pooled ? r.pooled : r.welch;
    out += r.row.split + "\t" + r.row.metric + "\t" + detail::fixed(r.welch.t, 4) + "\t" +
           detail::fixed(r.welch.df, 1) + "\t" + detail::num(r.welch.p) + "\t" + stars_text(r.welch.stars) +
           "\t" + detail::fixed(r.pooled.t, 4) + "\t" + detail::fixed(r.pooled.df, 0) + "\t" +
           (r.row.reported_t ? detail::fixed(*r.row.reported_t, 2) : "") + "\t" +
           (r.row.reported_df ? detail::fixed(*r.row.reported_df, 0) : "") + "\t" +
           (r.compared_pooled ? "pooled" : "welch") + "\t" +
           (r.row.reported_t ? detail::fixed(cmp.t - *r.row.reported_t, 4) : "") + "\t" +
           (r.row.reported_df ? detail::fixed(cmp.df - *r.row.reported_df, 1) : "") + "\t" +
           detail::fixed(r.t_low, 4) + "\t" + detail::fixed(r.t_high, 4) + "\t" + r.verdict + "\n";
  }
  return out;
}

inline std::string render_chi_replication_tsv(std::span<const ChiReplication> rows) {
  std::string out =
      "dimension\tframe\tchi2\tdf\tp\tstars\treported_chi2\tdelta_chi2\tmax_expected_delta\tflags_match\t"
      "verdict\n";
  for (const auto& r : rows) {
    out += r.block.dimension + "\t" + r.block.frame + "\t" + detail::fixed(r.result.chi2, 4) + "\t" +
           std::to_string(r.result.df) + "\t" + detail::num(r.result.p) + "\t" +
           stars_text(stars(r.result.p)) + "\t" +
           (r.block.reported_chi2 ? detail::num(*r.block.reported_chi2) : "") + "\t" +
           (r.block.reported_chi2 ? detail::fixed(r.result.chi2 - *r.block.reported_chi2, 4) : "") + "\t" +
           (r.block.reported_expected.empty() ? "" : detail::fixed(r.max_expected_delta, 3)) + "\t" +
           (r.block.reported_flags.empty() ? "" : (r.flags_match ? "yes" : "no")) + "\t" + r.verdict + "\n";
  }
  return out;
}

inline std::string render_replication_text(std::span<const TReplication> ts,
                                           std::span<const ChiReplication> chis) {
  using detail::fixed;
  using detail::pad;
  std::ostringstream out;
  out << "T-tests: reported vs recomputed\n";
  out << "  " << pad("split", 15, true) << pad("metric", 10, true) << pad("reported", 18)
      << pad("recomputed", 20) << pad("delta t", 10) << pad("rounding range", 18) << "  verdict\n";
  for (const auto& r : ts) {
    const TTestResult& cmp = r.compared_pooled ? r.pooled : r.welch;
    std::string rep = r.row.reported_t ? fixed(*r.row.reported_t, 2) : "-";
    if (r.row.reported_df) rep += " (" + fixed(*r.row.reported_df, 0) + ")";
    std::string mine = std::string(stars_text(cmp.stars)) + fixed(cmp.t, 2) + " (" + fixed(cmp.df, 0) + ")";
    if (r.compared_pooled) mine += "p";
    out << "  " << pad(r.row.split, 15, true) << pad(r.row.metric, 10, true) << pad(rep, 18) << pad(mine, 20)
        << pad(r.row.reported_t ? fixed(cmp.t - *r.row.reported_t, 2) : "-", 10)
        << pad(fixed(r.t_low, 2) + ".." + fixed(r.t_high, 2), 18) << "  " << r.verdict << "\n";
  }
  out << "  (p after df: pooled-variance t compared because the reported df is n_a + n_b - 2)\n";
  out << "\nChi-square: reported vs recomputed\n";
  for (const auto& r : chis) {
    out << "  " << pad(r.block.dimension + " x " + r.block.frame, 30, true) << pad(
               r.block.reported_chi2 ? detail::num(*r.block.reported_chi2) : "-", 10)
        << pad(std::string(stars_text(stars(r.result.p))) + fixed(r.result.chi2, 2), 12) << "  " << r.verdict;
    if (!r.block.reported_expected.empty()) out << "; expected max delta " << fixed(r.max_expected_delta, 2);
    if (!r.block.reported_flags.empty()) out << "; flags " << (r.flags_match ? "match" : "differ");
    out << "\n";
  }
  return out.str();
}

}  // namespace vframe
