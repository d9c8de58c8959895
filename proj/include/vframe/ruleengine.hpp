#pragma once

// Video-level frame rules over per-second detector score streams.
//
// Every rule is "predicate holds on at least k images at consecutive
// one-second timestamps". A missing second breaks a run. Thresholds worded
// "exceeded"/"more than" compare strictly; "or more" compares inclusively.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vframe/datamodel.hpp"
#include "vframe/detail/util.hpp"

namespace vframe {

template <class Pred>
struct RunQuery {
  Pred predicate;  // bool(const FrameScore&)
  int min_run = 1;
};

template <class Pred>
RunQuery(Pred, int) -> RunQuery<Pred>;

// Single pass: true iff some run of frames at consecutive t_index values,
// all satisfying the predicate, reaches min_run.
template <class Pred>
bool has_run(std::span<const FrameScore> frames, const RunQuery<Pred>& query) {
  if (query.min_run < 1) throw ValidationError("min_run", "must be >= 1");
  int run = 0;
  std::int64_t prev_t = 0;
  for (const FrameScore& f : frames) {
    if (!query.predicate(f)) {
      run = 0;
      continue;
    }
    run = (run > 0 && f.t_index == prev_t + 1) ? run + 1 : 1;
    prev_t = f.t_index;
    if (run >= query.min_run) return true;
  }
  return false;
}

inline double largest_head_area(const FrameScore& f) {
  double best = 0.0;
  for (const auto& face : f.faces) best = std::max(best, face.head_area_fraction);
  return best;
}

inline int black_face_count(const FrameScore& f) {
  return static_cast<int>(std::count_if(f.faces.begin(), f.faces.end(),
                                        [](const FaceObservation& o) { return o.is_black; }));
}

// ============================================================================
// RULES
// ============================================================================

inline bool classify_riot(std::span<const FrameScore> frames, const RuleConfig& cfg) {
  const double thr = cfg.riot_violence_threshold;
  return has_run(frames, RunQuery{[thr](const FrameScore& f) { return f.violence > thr; },
                                  cfg.riot_min_run});
}

inline bool classify_spectacle(std::span<const FrameScore> frames, const RuleConfig& cfg) {
  const std::int64_t thr = cfg.spectacle_crowd_threshold;
  return has_run(frames, RunQuery{[thr](const FrameScore& f) { return f.crowd_count >= thr; },
                                  cfg.spectacle_min_run});
}

// Person count is the face count; the gate applies to both area branches.
inline bool classify_debate(std::span<const FrameScore> frames, const RuleConfig& cfg) {
  std::size_t max_people = 0;
  for (const auto& f : frames) max_people = std::max(max_people, f.faces.size());
  if (static_cast<std::int64_t>(max_people) >= cfg.debate_max_people) return false;
  const double low = cfg.debate_area_low, high = cfg.debate_area_high;
  return has_run(frames, RunQuery{[low](const FrameScore& f) { return largest_head_area(f) > low; },
                                  cfg.debate_run_low}) ||
         has_run(frames, RunQuery{[high](const FrameScore& f) { return largest_head_area(f) > high; },
                                  cfg.debate_run_high});
}

inline bool classify_confrontation(std::span<const FrameScore> frames, bool debate,
                                   const RuleConfig& cfg) {
  if (cfg.confront_requires_protest) {
    for (std::size_t i = 0; i < frames.size(); ++i)
      if (!frames[i].protest_conf)
        throw ConfigError("confront_requires_protest is set but frame " + std::to_string(i) +
                          " (t_index " + std::to_string(frames[i].t_index) +
                          ") has no protest_conf");
  }
  if (cfg.confront_excludes_debate && debate) return false;
  const double thr = cfg.confront_police_threshold;
  if (!has_run(frames, RunQuery{[thr](const FrameScore& f) { return f.police_conf > thr; },
                                cfg.confront_min_run}))
    return false;
  if (!cfg.confront_requires_protest) return true;
  return has_run(frames, RunQuery{[](const FrameScore& f) { return *f.protest_conf > 0.5; },
                                  cfg.confront_min_run});
}

struct BlackIdentity {
  bool presence = false;
  bool group = false;
};

inline BlackIdentity classify_black_identity(std::span<const FrameScore> frames,
                                             const RuleConfig& cfg) {
  BlackIdentity out;
  for (const auto& f : frames) {
    const int n = black_face_count(f);
    out.presence = out.presence || n >= 1;
    out.group = out.group || n >= cfg.black_group_min;
  }
  return out;
}

// Debate first, since the confrontation rule consumes its verdict.
inline FrameLabelSet classify_video(std::span<const FrameScore> frames, const RuleConfig& cfg) {
  FrameLabelSet out;
  out.debate = classify_debate(frames, cfg);
  out.confrontation = classify_confrontation(frames, out.debate, cfg);
  out.riot = classify_riot(frames, cfg);
  out.spectacle = classify_spectacle(frames, cfg);
  const BlackIdentity id = classify_black_identity(frames, cfg);
  out.black_presence = id.presence;
  out.black_group_presence = id.group;
  return out;
}

// ============================================================================
// BRUTE-FORCE ORACLE
// ============================================================================

namespace oracle {

// Checks every window [i, j]: all frames satisfy the predicate, timestamps
// step by exactly one, and the window is at least min_run long. O(n^2).
template <class Pred>
bool any_window(std::span<const FrameScore> frames, Pred pred, int min_run) {
  const std::size_t n = frames.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      bool ok = true;
      for (std::size_t k = i; k <= j && ok; ++k) {
        ok = pred(frames[k]);
        if (ok && k > i) ok = frames[k].t_index - frames[k - 1].t_index == 1;
      }
      if (ok && static_cast<int>(j - i + 1) >= min_run) return true;
    }
  }
  return false;
}

}  // namespace oracle

// Same contract as classify_video, evaluated by exhaustive window scan.
inline FrameLabelSet oracle_classify(std::span<const FrameScore> frames, const RuleConfig& cfg) {
  FrameLabelSet out;

  std::size_t people = 0;
  for (const auto& f : frames) people = std::max(people, f.faces.size());
  auto head_above = [](double limit) {
    return [limit](const FrameScore& f) {
      return std::any_of(f.faces.begin(), f.faces.end(),
                         [limit](const FaceObservation& o) { return o.head_area_fraction > limit; });
    };
  };
  out.debate = static_cast<std::int64_t>(people) < cfg.debate_max_people &&
               (oracle::any_window(frames, head_above(cfg.debate_area_low), cfg.debate_run_low) ||
                oracle::any_window(frames, head_above(cfg.debate_area_high), cfg.debate_run_high));

  const bool missing_protest = std::any_of(frames.begin(), frames.end(),
                                           [](const FrameScore& f) { return !f.protest_conf; });
  if (cfg.confront_requires_protest && missing_protest)
    throw ConfigError("confront_requires_protest is set but the stream lacks protest_conf");
  bool police = oracle::any_window(
      frames, [&](const FrameScore& f) { return f.police_conf > cfg.confront_police_threshold; },
      cfg.confront_min_run);
  bool protest = !cfg.confront_requires_protest ||
                 oracle::any_window(
                     frames, [](const FrameScore& f) { return f.protest_conf.value_or(0.0) > 0.5; },
                     cfg.confront_min_run);
  out.confrontation = police && protest && !(cfg.confront_excludes_debate && out.debate);

  out.riot = oracle::any_window(
      frames, [&](const FrameScore& f) { return f.violence > cfg.riot_violence_threshold; },
      cfg.riot_min_run);
  out.spectacle = oracle::any_window(
      frames, [&](const FrameScore& f) { return f.crowd_count >= cfg.spectacle_crowd_threshold; },
      cfg.spectacle_min_run);

  for (const auto& f : frames) {
    int black = 0;
    for (const auto& o : f.faces) black += o.is_black ? 1 : 0;
    if (black > 0) out.black_presence = true;
    if (black >= cfg.black_group_min) out.black_group_presence = true;
  }
  return out;
}

// ============================================================================
// BATCH
// ============================================================================

// Results are in input order whatever the thread count.
inline std::vector<FrameLabelSet> classify_batch(std::span<const ScoreStream> streams,
                                                 const RuleConfig& cfg,
                                                 unsigned threads = detail::default_threads()) {
  std::vector<FrameLabelSet> out(streams.size());
  detail::parallel_for(streams.size(), threads,
                       [&](std::size_t i) { out[i] = classify_video(streams[i], cfg); });
  return out;
}

// ============================================================================
// CONFIG FILE
// ============================================================================

// Flat "key = value" lines; '#' starts a comment. Every key is optional
// (defaults apply) and unknown keys are rejected.
inline RuleConfig parse_rule_config(const std::string& text,
                                    const std::string& source = "<config>") {
  RuleConfig c;
  std::size_t line_no = 0;
  for (const std::string& raw : detail::split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    auto where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw InputError(where + "expected key = value");
    std::string key(detail::trim(line.substr(0, eq)));
    std::string value(detail::trim(line.substr(eq + 1)));

    auto real = [&](double& out) {
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
      if (ec != std::errc{} || p != value.data() + value.size())
        throw InputError(where + key + ": expected a number, got '" + value + "'");
    };
    auto integer = [&](auto& out) {
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
      if (ec != std::errc{} || p != value.data() + value.size())
        throw InputError(where + key + ": expected an integer, got '" + value + "'");
    };
    auto boolean = [&](bool& out) {
      if (value == "true") out = true;
      else if (value == "false") out = false;
      else throw InputError(where + key + ": expected true or false, got '" + value + "'");
    };

    if (key == "riot_violence_threshold") real(c.riot_violence_threshold);
    else if (key == "riot_min_run") integer(c.riot_min_run);
    else if (key == "confront_police_threshold") real(c.confront_police_threshold);
    else if (key == "confront_min_run") integer(c.confront_min_run);
    else if (key == "confront_excludes_debate") boolean(c.confront_excludes_debate);
    else if (key == "confront_requires_protest") boolean(c.confront_requires_protest);
    else if (key == "spectacle_crowd_threshold") integer(c.spectacle_crowd_threshold);
    else if (key == "spectacle_min_run") integer(c.spectacle_min_run);
    else if (key == "debate_max_people") integer(c.debate_max_people);
    else if (key == "debate_area_low") real(c.debate_area_low);
    else if (key == "debate_run_low") integer(c.debate_run_low);
    else if (key == "debate_area_high") real(c.debate_area_high);
    else if (key == "debate_run_high") integer(c.debate_run_high);
    else if (key == "black_group_min") integer(c.black_group_min);
    else throw InputError(where + "unknown key '" + key + "'");
  }
  validate_rule_config(c);
  return c;
}

inline RuleConfig load_rule_config(const std::filesystem::path& path) {
  return parse_rule_config(detail::read_file(path), path.string());
}

namespace detail {
inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = 0.0;
  // shortest representation that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == v) break;
  }
  return buf;
}
}  // namespace detail

inline std::string encode_rule_config(const RuleConfig& c) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto r = detail::format_real;
  auto i = [](std::int64_t v) { return std::to_string(v); };
  std::string out;
  auto line = [&](const char* k, const std::string& v) { out += std::string(k) + " = " + v + "\n"; };
  line("riot_violence_threshold", r(c.riot_violence_threshold));
  line("riot_min_run", i(c.riot_min_run));
  line("confront_police_threshold", r(c.confront_police_threshold));
  line("confront_min_run", i(c.confront_min_run));
  line("confront_excludes_debate", b(c.confront_excludes_debate));
  line("confront_requires_protest", b(c.confront_requires_protest));
  line("spectacle_crowd_threshold", i(c.spectacle_crowd_threshold));
  line("spectacle_min_run", i(c.spectacle_min_run));
  line("debate_max_people", i(c.debate_max_people));
  line("debate_area_low", r(c.debate_area_low));
  line("debate_run_low", i(c.debate_run_low));
  line("debate_area_high", r(c.debate_area_high));
  line("debate_run_high", i(c.debate_run_high));
  line("black_group_min", i(c.black_group_min));
  return out;
}

}  // namespace vframe
