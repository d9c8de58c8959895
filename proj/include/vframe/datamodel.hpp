#pragma once

// Shared domain types for the protest visual-frame toolkit.
//
// Every value is immutable after validation. Validation failures throw a
// ValidationError that names the offending field and, for streams, the
// position of the offending frame.

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vframe {

// ============================================================================
// ERRORS
// ============================================================================

// Bad input data (files, records, arguments). Maps to CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public InputError {
 public:
  ValidationError(std::string field, const std::string& what,
                  std::optional<std::size_t> index = std::nullopt)
      : InputError(format(field, what, index)),
        field_(std::move(field)),
        reason_(what),
        index_(index) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  static std::string format(const std::string& field, const std::string& what,
                            std::optional<std::size_t> index) {
    std::string msg;
    if (index) msg += "frame " + std::to_string(*index) + ": ";
    msg += field + ": " + what;
    return msg;
  }

  std::string field_;
  std::string reason_;
  std::optional<std::size_t> index_;
};

// A rule configuration that cannot be applied to the given data.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// Broken internal invariant. Maps to CLI exit code 2.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ============================================================================
// CORPUS RECORDS
// ============================================================================

using Date = std::chrono::year_month_day;

struct VideoMeta {
  std::string video_id;
  std::string author_id;
  bool verified = false;  // official source
  std::int64_t follower_count = 0;
  std::int64_t duration_s = 1;
  std::int64_t play_count = 0;
  std::int64_t like_count = 0;
  std::int64_t comment_count = 0;
  std::int64_t share_count = 0;
  std::set<std::string> hashtags;  // lowercase, no leading '#'
  Date posted_at{std::chrono::year{2020}, std::chrono::month{1},
                 std::chrono::day{1}};

  bool operator==(const VideoMeta&) const = default;
};

struct FaceObservation {
  double head_area_fraction = 0.0;  // face box area / image area
  bool is_black = false;

  bool operator==(const FaceObservation&) const = default;
};

// Detector output for one sampled image (one per second of video).
struct FrameScore {
  std::int64_t t_index = 0;
  double violence = 0.0;
  double police_conf = 0.0;
  std::optional<double> protest_conf;
  std::int64_t crowd_count = 0;
  std::vector<FaceObservation> faces;

  bool operator==(const FrameScore&) const = default;
};

using ScoreStream = std::vector<FrameScore>;

struct FrameLabelSet {
  bool riot = false;
  bool confrontation = false;
  bool spectacle = false;
  bool debate = false;
  bool black_presence = false;
  bool black_group_presence = false;

  bool operator==(const FrameLabelSet&) const = default;
};

// The five coded visual elements. black_identity reads black_presence.
enum class Element { riot, confrontation, spectacle, debate, black_identity };

inline constexpr Element kAllElements[] = {
    Element::riot, Element::confrontation, Element::spectacle, Element::debate,
    Element::black_identity};

inline constexpr const char* element_name(Element e) {
  switch (e) {
    case Element::riot: return "riot";
    case Element::confrontation: return "confrontation";
    case Element::spectacle: return "spectacle";
    case Element::debate: return "debate";
    case Element::black_identity: return "black_identity";
  }
  return "?";
}

inline std::optional<Element> element_from_name(std::string_view name) {
  for (Element e : kAllElements)
    if (name == element_name(e)) return e;
  return std::nullopt;
}

inline bool element_value(const FrameLabelSet& labels, Element e) {
  switch (e) {
    case Element::riot: return labels.riot;
    case Element::confrontation: return labels.confrontation;
    case Element::spectacle: return labels.spectacle;
    case Element::debate: return labels.debate;
    case Element::black_identity: return labels.black_presence;
  }
  return false;
}

// ============================================================================
// RULE CONFIGURATION
// ============================================================================

// Thresholds and minimum run lengths of the four frame rules plus the
// identity rule. Defaults are the fine-tuned published values.
struct RuleConfig {
  double riot_violence_threshold = 0.5;  // violence > threshold
  int riot_min_run = 3;
  double confront_police_threshold = 0.85;  // police_conf > threshold
  int confront_min_run = 4;
  bool confront_excludes_debate = true;
  bool confront_requires_protest = false;
  std::int64_t spectacle_crowd_threshold = 150;  // crowd_count >= threshold
  int spectacle_min_run = 3;
  int debate_max_people = 5;       // max face count < this
  double debate_area_low = 0.03;   // largest head area > this ...
  int debate_run_low = 6;          // ... for this many seconds
  double debate_area_high = 0.20;
  int debate_run_high = 3;
  int black_group_min = 3;  // "more than two"

  bool operator==(const RuleConfig&) const = default;
};

inline void validate_rule_config(const RuleConfig& c) {
  auto unit = [](const char* f, double v) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError(f, "must lie in [0,1], got " + std::to_string(v));
  };
  auto at_least_one = [](const char* f, std::int64_t v) {
    if (v < 1)
      throw ValidationError(f, "must be >= 1, got " + std::to_string(v));
  };
  unit("riot_violence_threshold", c.riot_violence_threshold);
  unit("confront_police_threshold", c.confront_police_threshold);
  unit("debate_area_low", c.debate_area_low);
  unit("debate_area_high", c.debate_area_high);
  at_least_one("riot_min_run", c.riot_min_run);
  at_least_one("confront_min_run", c.confront_min_run);
  at_least_one("spectacle_crowd_threshold", c.spectacle_crowd_threshold);
  at_least_one("spectacle_min_run", c.spectacle_min_run);
  at_least_one("debate_max_people", c.debate_max_people);
  at_least_one("debate_run_low", c.debate_run_low);
  at_least_one("debate_run_high", c.debate_run_high);
  at_least_one("black_group_min", c.black_group_min);
}

// ============================================================================
// STATISTICS RESULTS
// ============================================================================

struct GroupSummary {
  std::int64_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1 denominator)
};

enum class Stars { none, one, two, three };

inline constexpr const char* stars_text(Stars s) {
  switch (s) {
    case Stars::none: return "";
    case Stars::one: return "*";
    case Stars::two: return "**";
    case Stars::three: return "***";
  }
  return "";
}

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  Stars stars = Stars::none;
};

enum class CellFlag { none, below, above };

struct ChiCell {
  std::int64_t observed = 0;
  double expected = 0.0;
  double adj_residual = 0.0;
  CellFlag flag = CellFlag::none;
};

struct ChiSquareResult {
  double chi2 = 0.0;
  int df = 0;
  double p = 1.0;
  std::vector<std::vector<ChiCell>> cells;
};

struct KappaResult {
  double kappa = 0.0;
  double observed_agreement = 0.0;
  double expected_agreement = 0.0;
};

// ============================================================================
// VALIDATION
// ============================================================================

inline const VideoMeta& validate_video_meta(const VideoMeta& m) {
  if (m.video_id.empty()) throw ValidationError("video_id", "empty id");
  if (m.duration_s < 1) throw ValidationError("duration_s", "duration_s < 1");
  auto count = [](const char* f, std::int64_t v) {
    if (v < 0) throw ValidationError(f, "negative count");
  };
  count("follower_count", m.follower_count);
  count("play_count", m.play_count);
  count("like_count", m.like_count);
  count("comment_count", m.comment_count);
  count("share_count", m.share_count);
  if (!m.posted_at.ok()) throw ValidationError("posted_at", "invalid date");
  return m;
}

inline std::span<const FrameScore> validate_score_stream(
    std::span<const FrameScore> frames) {
  auto conf = [](const char* f, double v, std::size_t i) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError(f, "confidence out of range", i);
  };
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameScore& s = frames[i];
    if (s.t_index < 0) throw ValidationError("t_index", "negative t_index", i);
    if (i > 0 && s.t_index <= frames[i - 1].t_index)
      throw ValidationError("t_index", "t_index not strictly increasing", i);
    conf("violence", s.violence, i);
    conf("police_conf", s.police_conf, i);
    if (s.protest_conf) conf("protest_conf", *s.protest_conf, i);
    if (s.crowd_count < 0)
      throw ValidationError("crowd_count", "negative count", i);
    for (const FaceObservation& f : s.faces)
      if (!(f.head_area_fraction >= 0.0 && f.head_area_fraction <= 1.0))
        throw ValidationError("head_area_fraction", "fraction out of range", i);
  }
  return frames;
}

}  // namespace vframe
