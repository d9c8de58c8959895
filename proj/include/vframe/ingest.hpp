#pragma once

// Corpus file formats (line-delimited JSON), deduplication, date/hashtag
// filtering with top-N-per-hashtag truncation, and per-second frame sampling
// through an external ffmpeg/ffprobe pair.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "vframe/datamodel.hpp"
#include "vframe/detail/process.hpp"
#include "vframe/detail/util.hpp"

namespace vframe {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ============================================================================
// DATES
// ============================================================================

inline std::optional<Date> parse_date(std::string_view s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto num = [&](std::size_t off, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(s.data() + off, s.data() + off + len, out);
    return ec == std::errc{} && p == s.data() + off + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

// ============================================================================
// RECORD CODECS
// ============================================================================

namespace detail {

// Field access with errors that name the field.
class Fields {
 public:
  explicit Fields(const json& obj) : obj_(obj) {
    if (!obj.is_object()) throw ValidationError("record", "expected a JSON object");
  }

  void require_exact(std::initializer_list<const char*> names) const {
    std::set<std::string> allowed(names.begin(), names.end());
    for (const auto& [key, _] : obj_.items())
      if (!allowed.count(key)) throw ValidationError(key, "unknown field");
    for (const char* n : names)
      if (!obj_.contains(n)) throw ValidationError(n, "missing field");
  }

  const json& at(const char* f) const { return obj_.at(f); }

  std::string string(const char* f) const {
    const json& v = at(f);
    if (!v.is_string()) throw ValidationError(f, "expected a string");
    return v.get<std::string>();
  }
  bool boolean(const char* f) const {
    const json& v = at(f);
    if (!v.is_boolean()) throw ValidationError(f, "expected a boolean");
    return v.get<bool>();
  }
  std::int64_t integer(const char* f) const { return as_integer(at(f), f); }
  double real(const char* f) const { return as_real(at(f), f); }

  static std::int64_t as_integer(const json& v, const char* f) {
    if (!v.is_number_integer()) throw ValidationError(f, "expected an integer");
    return v.get<std::int64_t>();
  }
  static double as_real(const json& v, const char* f) {
    if (!v.is_number()) throw ValidationError(f, "expected a number");
    return v.get<double>();
  }

 private:
  const json& obj_;
};

inline std::string normalize_hashtag(std::string_view tag) {
  tag = trim(tag);
  if (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
  return to_lower(tag);
}

// Splits into non-empty lines, keeping 1-based line numbers.
template <class Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string_view line = trim(std::string_view(text).substr(start, end - start));
    if (!line.empty()) fn(line_no, line);
    start = end + 1;
  }
}

inline json parse_json_line(std::string_view line, std::size_t line_no,
                            const std::string& source) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw InputError(source + ":" + std::to_string(line_no) + ": parse error: " + e.what());
  }
}

}  // namespace detail

inline json video_meta_to_json(const VideoMeta& m) {
  json tags = json::array();
  for (const auto& t : m.hashtags) tags.push_back(t);
  return json{{"video_id", m.video_id},
              {"author_id", m.author_id},
              {"verified", m.verified},
              {"follower_count", m.follower_count},
              {"duration_s", m.duration_s},
              {"play_count", m.play_count},
              {"like_count", m.like_count},
              {"comment_count", m.comment_count},
              {"share_count", m.share_count},
              {"hashtags", tags},
              {"posted_at", format_date(m.posted_at)}};
}

// Decodes and validates one metadata record.
inline VideoMeta video_meta_from_json(const json& obj) {
  detail::Fields f(obj);
  f.require_exact({"video_id", "author_id", "verified", "follower_count",
                   "duration_s", "play_count", "like_count", "comment_count",
                   "share_count", "hashtags", "posted_at"});
  VideoMeta m;
  m.video_id = f.string("video_id");
  m.author_id = f.string("author_id");
  m.verified = f.boolean("verified");
  m.follower_count = f.integer("follower_count");
  m.duration_s = f.integer("duration_s");
  m.play_count = f.integer("play_count");
  m.like_count = f.integer("like_count");
  m.comment_count = f.integer("comment_count");
  m.share_count = f.integer("share_count");
  const json& tags = f.at("hashtags");
  if (!tags.is_array()) throw ValidationError("hashtags", "expected an array");
  for (const json& t : tags) {
    if (!t.is_string()) throw ValidationError("hashtags", "expected strings");
    std::string tag = detail::normalize_hashtag(t.get<std::string>());
    if (tag.empty()) throw ValidationError("hashtags", "empty hashtag");
    m.hashtags.insert(std::move(tag));
  }
  auto date = parse_date(f.string("posted_at"));
  if (!date) throw ValidationError("posted_at", "expected an ISO-8601 date (YYYY-MM-DD)");
  m.posted_at = *date;
  validate_video_meta(m);
  return m;
}

inline json frame_score_to_json(const std::string& video_id, const FrameScore& s) {
  json faces = json::array();
  for (const auto& face : s.faces)
    faces.push_back({{"head_area_fraction", face.head_area_fraction},
                     {"is_black", face.is_black}});
  return json{{"video_id", video_id},
              {"t_index", s.t_index},
              {"violence", s.violence},
              {"police_conf", s.police_conf},
              {"protest_conf", s.protest_conf ? json(*s.protest_conf) : json(nullptr)},
              {"crowd_count", s.crowd_count},
              {"faces", faces}};
}

// Decodes and range-checks one score line. Ordering across lines is checked
// once the video's stream is assembled.
inline std::pair<std::string, FrameScore> frame_score_from_json(const json& obj) {
  detail::Fields f(obj);
  f.require_exact({"video_id", "t_index", "violence", "police_conf",
                   "protest_conf", "crowd_count", "faces"});
  std::string id = f.string("video_id");
  if (id.empty()) throw ValidationError("video_id", "empty id");
  FrameScore s;
  s.t_index = f.integer("t_index");
  s.violence = f.real("violence");
  s.police_conf = f.real("police_conf");
  if (!f.at("protest_conf").is_null()) s.protest_conf = f.real("protest_conf");
  s.crowd_count = f.integer("crowd_count");
  const json& faces = f.at("faces");
  if (!faces.is_array()) throw ValidationError("faces", "expected an array");
  for (const json& face : faces) {
    detail::Fields ff(face);
    ff.require_exact({"head_area_fraction", "is_black"});
    s.faces.push_back({ff.real("head_area_fraction"), ff.boolean("is_black")});
  }
  ScoreStream single{s};
  try {
    validate_score_stream(single);
  } catch (const ValidationError& e) {
    throw ValidationError(e.field(), e.reason());
  }
  return {std::move(id), std::move(s)};
}

// ============================================================================
// CORPUS LOADING
// ============================================================================

// Parses line-delimited metadata. Parse errors stop at the offending line;
// validation errors are collected over the whole file and reported together.
inline std::vector<VideoMeta> parse_corpus(const std::string& text,
                                           const std::string& source = "<corpus>") {
  std::vector<VideoMeta> out;
  std::map<std::string, std::size_t> error_counts;
  std::vector<std::string> first_errors;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    json obj = detail::parse_json_line(line, line_no, source);
    try {
      out.push_back(video_meta_from_json(obj));
    } catch (const ValidationError& e) {
      ++error_counts[e.field()];
      if (first_errors.size() < 5)
        first_errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  if (!error_counts.empty()) {
    std::ostringstream msg;
    std::size_t total = 0;
    for (const auto& [_, n] : error_counts) total += n;
    msg << source << ": " << total << " invalid record(s) [";
    bool first = true;
    for (const auto& [field, n] : error_counts) {
      msg << (first ? "" : ", ") << field << ": " << n;
      first = false;
    }
    msg << "]";
    for (const auto& e : first_errors) msg << "\n  " << e;
    throw InputError(msg.str());
  }
  return out;
}

inline std::vector<VideoMeta> load_corpus(const fs::path& meta_path) {
  return parse_corpus(detail::read_file(meta_path), meta_path.string());
}

inline std::string encode_corpus(std::span<const VideoMeta> records) {
  std::string out;
  for (const auto& r : records) out += video_meta_to_json(r).dump() + "\n";
  return out;
}

// Keeps the first occurrence of each video_id.
inline std::vector<VideoMeta> dedupe(std::span<const VideoMeta> records) {
  std::unordered_set<std::string> seen;
  std::vector<VideoMeta> out;
  for (const auto& r : records)
    if (seen.insert(r.video_id).second) out.push_back(r);
  return out;
}

// ============================================================================
// FILTERING
// ============================================================================

struct CorpusFilter {
  Date date_from{std::chrono::year{2020}, std::chrono::month{5}, std::chrono::day{25}};
  Date date_to{std::chrono::year{2020}, std::chrono::month{10}, std::chrono::day{15}};
  std::set<std::string> hashtags_any;  // empty: no hashtag filter
  std::optional<std::int64_t> top_n_per_hashtag;
};

// Date window (inclusive), hashtag match, then top-N by play_count within
// each listed hashtag. A video that makes the cut under several hashtags is
// kept once; output keeps input order. With no hashtag list, top-N applies to
// the whole date-filtered corpus.
inline std::vector<VideoMeta> apply_filter(std::span<const VideoMeta> records,
                                           const CorpusFilter& filter) {
  if (filter.date_to < filter.date_from)
    throw ValidationError("date_from", "date_from after date_to");
  if (filter.top_n_per_hashtag && *filter.top_n_per_hashtag < 1)
    throw ValidationError("top_n_per_hashtag", "must be >= 1");

  std::set<std::string> wanted;
  for (const auto& t : filter.hashtags_any) wanted.insert(detail::normalize_hashtag(t));

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const VideoMeta& r = records[i];
    if (r.posted_at < filter.date_from || filter.date_to < r.posted_at) continue;
    if (!wanted.empty() &&
        std::none_of(r.hashtags.begin(), r.hashtags.end(),
                     [&](const std::string& t) { return wanted.count(t) > 0; }))
      continue;
    candidates.push_back(i);
  }

  std::vector<bool> keep(records.size(), false);
  if (!filter.top_n_per_hashtag) {
    for (std::size_t i : candidates) keep[i] = true;
  } else {
    auto ranked_before = [&](std::size_t a, std::size_t b) {
      if (records[a].play_count != records[b].play_count)
        return records[a].play_count > records[b].play_count;
      return records[a].video_id < records[b].video_id;
    };
    auto take_top = [&](std::vector<std::size_t> group) {
      auto n = static_cast<std::size_t>(
          std::min<std::int64_t>(*filter.top_n_per_hashtag,
                                 static_cast<std::int64_t>(group.size())));
      std::partial_sort(group.begin(), group.begin() + n, group.end(), ranked_before);
      for (std::size_t k = 0; k < n; ++k) keep[group[k]] = true;
    };
    if (wanted.empty()) {
      take_top(candidates);
    } else {
      for (const auto& tag : wanted) {
        std::vector<std::size_t> group;
        for (std::size_t i : candidates)
          if (records[i].hashtags.count(tag)) group.push_back(i);
        take_top(std::move(group));
      }
    }
  }

  std::vector<VideoMeta> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (keep[i]) out.push_back(records[i]);
  return out;
}

// ============================================================================
// SCORE STREAMS
// ============================================================================

using StreamMap = std::map<std::string, ScoreStream>;

inline StreamMap parse_score_stream(const std::string& text,
                                    const std::string& source = "<scores>") {
  StreamMap out;
  std::map<std::string, std::vector<std::size_t>> lines_of;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    json obj = detail::parse_json_line(line, line_no, source);
    try {
      auto [id, score] = frame_score_from_json(obj);
      lines_of[id].push_back(line_no);
      out[id].push_back(std::move(score));
    } catch (const ValidationError& e) {
      throw InputError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  for (const auto& [id, frames] : out) {
    try {
      validate_score_stream(frames);
    } catch (const ValidationError& e) {
      std::size_t line_no = lines_of[id][e.index().value_or(0)];
      throw InputError(source + ":" + std::to_string(line_no) + ": video " + id +
                       ": " + e.what());
    }
  }
  return out;
}

inline StreamMap read_score_stream(const fs::path& scores_path) {
  return parse_score_stream(detail::read_file(scores_path), scores_path.string());
}

// Videos in id order, frames in t_index order.
inline std::string encode_score_stream(const StreamMap& streams) {
  std::string out;
  for (const auto& [id, frames] : streams)
    for (const auto& f : frames) out += frame_score_to_json(id, f).dump() + "\n";
  return out;
}

// ============================================================================
// LABEL FILES
// ============================================================================

using LabelMap = std::map<std::string, FrameLabelSet>;

inline json label_set_to_json(const std::string& video_id, const FrameLabelSet& l) {
  return json{{"video_id", video_id},
              {"riot", l.riot},
              {"confrontation", l.confrontation},
              {"spectacle", l.spectacle},
              {"debate", l.debate},
              {"black_presence", l.black_presence},
              {"black_group_presence", l.black_group_presence}};
}

inline std::pair<std::string, FrameLabelSet> label_set_from_json(const json& obj) {
  detail::Fields f(obj);
  f.require_exact({"video_id", "riot", "confrontation", "spectacle", "debate", "black_presence",
                   "black_group_presence"});
  std::pair<std::string, FrameLabelSet> out;
  out.first = f.string("video_id");
  if (out.first.empty()) throw ValidationError("video_id", "empty id");
  out.second.riot = f.boolean("riot");
  out.second.confrontation = f.boolean("confrontation");
  out.second.spectacle = f.boolean("spectacle");
  out.second.debate = f.boolean("debate");
  out.second.black_presence = f.boolean("black_presence");
  out.second.black_group_presence = f.boolean("black_group_presence");
  return out;
}

inline LabelMap parse_labels(const std::string& text, const std::string& source = "<labels>") {
  LabelMap out;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    json obj = detail::parse_json_line(line, line_no, source);
    std::pair<std::string, FrameLabelSet> rec;
    try {
      rec = label_set_from_json(obj);
    } catch (const ValidationError& e) {
      throw InputError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!out.emplace(rec.first, rec.second).second)
      throw InputError(source + ":" + std::to_string(line_no) + ": duplicate video_id " + rec.first);
  });
  return out;
}

inline LabelMap load_labels(const fs::path& path) {
  return parse_labels(detail::read_file(path), path.string());
}

// ============================================================================
// FRAME SAMPLING
// ============================================================================

struct FrameSamplerOptions {
  std::string ffmpeg = "ffmpeg";
  std::string ffprobe = "ffprobe";
};

struct FrameSampling {
  std::string video_id;
  double duration_s = 0.0;
  std::vector<fs::path> images;  // <out_dir>/<video_id>/<t_index:05>.jpg
  std::vector<std::string> warnings;
};

inline fs::path frame_image_path(const fs::path& out_dir, const std::string& video_id,
                                 std::int64_t t_index) {
  char name[32];
  std::snprintf(name, sizeof name, "%05lld.jpg", static_cast<long long>(t_index));
  return out_dir / video_id / name;
}

namespace detail {

inline ProcessResult run_tool(const std::vector<std::string>& argv) {
  ProcessResult r = run_process(argv);
  if (!r.launched)
    throw InputError("frame extraction tool missing: " + argv[0] + ": " + r.output);
  return r;
}

}  // namespace detail

inline double probe_duration(const fs::path& video_path,
                             const FrameSamplerOptions& opts = {}) {
  auto r = detail::run_tool({opts.ffprobe, "-v", "error", "-show_entries",
                             "format=duration", "-of",
                             "default=noprint_wrappers=1:nokey=1", video_path.string()});
  if (r.exit_code != 0)
    throw InputError(opts.ffprobe + " failed on " + video_path.string() + " (exit " +
                     std::to_string(r.exit_code) + "): " + std::string(detail::trim(r.output)));
  std::istringstream in(r.output);
  double seconds = 0.0;
  if (!(in >> seconds) || !std::isfinite(seconds) || seconds < 0)
    throw InputError("unreadable duration for " + video_path.string() + ": " +
                     std::string(detail::trim(r.output)));
  return seconds;
}

// One JPEG per whole second, never resized. The video id is the file stem.
inline FrameSampling sample_frames(const fs::path& video_path, const fs::path& out_dir,
                                   const FrameSamplerOptions& opts = {}) {
  FrameSampling result;
  result.video_id = video_path.stem().string();
  result.duration_s = probe_duration(video_path, opts);
  const auto count = static_cast<std::int64_t>(std::floor(result.duration_s));
  if (count == 0) {
    result.warnings.push_back(video_path.string() + ": duration " +
                              std::to_string(result.duration_s) +
                              " s is shorter than one second; no frames sampled");
    return result;
  }
  const fs::path dir = out_dir / result.video_id;
  fs::create_directories(dir);
  auto r = detail::run_tool({opts.ffmpeg, "-v", "error", "-nostdin", "-y", "-i",
                             video_path.string(), "-vf", "fps=1", "-frames:v",
                             std::to_string(count), "-start_number", "0", "-q:v", "2",
                             (dir / "%05d.jpg").string()});
  if (r.exit_code != 0)
    throw InputError(opts.ffmpeg + " failed on " + video_path.string() + " (exit " +
                     std::to_string(r.exit_code) + "): " + std::string(detail::trim(r.output)));
  for (std::int64_t t = 0; t < count; ++t) {
    fs::path p = frame_image_path(out_dir, result.video_id, t);
    if (!fs::exists(p))
      throw InputError(opts.ffmpeg + " did not produce " + p.string() + ": " +
                       std::string(detail::trim(r.output)));
    result.images.push_back(std::move(p));
  }
  return result;
}

}  // namespace vframe
