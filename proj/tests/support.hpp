#pragma once

// Random generators and fixtures shared by the test binaries.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "vframe/vframe.hpp"

namespace vtest {

using vframe::FaceObservation;
using vframe::FrameScore;
using vframe::RuleConfig;
using vframe::ScoreStream;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool coin(std::mt19937_64& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

// Streams of up to max_len seconds with occasional missing seconds. Scores
// cluster around the default thresholds so runs start and break often.
inline ScoreStream random_stream(std::mt19937_64& rng, int max_len = 40, bool with_protest = false) {
  ScoreStream s;
  const int len = uniform_int(rng, 0, max_len);
  std::int64_t t = uniform_int(rng, 0, 2);
  const double hot = uniform(rng, 0.2, 0.9);  // per-stream intensity
  for (int i = 0; i < len; ++i) {
    FrameScore f;
    f.t_index = t;
    f.violence = coin(rng, hot) ? uniform(rng, 0.4, 1.0) : uniform(rng, 0.0, 0.6);
    f.police_conf = coin(rng, hot) ? uniform(rng, 0.7, 1.0) : uniform(rng, 0.0, 0.9);
    if (with_protest || coin(rng, 0.5)) f.protest_conf = uniform(rng, 0.0, 1.0);
    f.crowd_count = coin(rng, hot) ? uniform_int(rng, 100, 300) : uniform_int(rng, 0, 160);
    const int faces = coin(rng, 0.7) ? uniform_int(rng, 0, 4) : uniform_int(rng, 0, 8);
    for (int k = 0; k < faces; ++k)
      f.faces.push_back({coin(rng, hot) ? uniform(rng, 0.0, 0.35) : uniform(rng, 0.0, 0.05),
                         coin(rng, 0.3)});
    s.push_back(std::move(f));
    t += coin(rng, 0.08) ? uniform_int(rng, 2, 3) : 1;
  }
  return s;
}

inline RuleConfig random_config(std::mt19937_64& rng) {
  RuleConfig c;
  c.riot_violence_threshold = uniform(rng, 0.3, 0.9);
  c.riot_min_run = uniform_int(rng, 1, 8);
  c.confront_police_threshold = uniform(rng, 0.6, 0.95);
  c.confront_min_run = uniform_int(rng, 1, 8);
  c.confront_excludes_debate = coin(rng, 0.7);
  c.confront_requires_protest = false;
  c.spectacle_crowd_threshold = uniform_int(rng, 50, 300);
  c.spectacle_min_run = uniform_int(rng, 1, 8);
  c.debate_max_people = uniform_int(rng, 1, 8);
  c.debate_area_low = uniform(rng, 0.0, 0.1);
  c.debate_run_low = uniform_int(rng, 1, 10);
  c.debate_area_high = uniform(rng, 0.1, 0.4);
  c.debate_run_high = uniform_int(rng, 1, 6);
  c.black_group_min = uniform_int(rng, 1, 5);
  return c;
}

// A run of n frames at consecutive seconds starting at t0.
inline ScoreStream flat_stream(int n, std::int64_t t0 = 0) {
  ScoreStream s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)].t_index = t0 + i;
  return s;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("vframe_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace vtest
