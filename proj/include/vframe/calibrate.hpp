#pragma once

// Fitting rule thresholds to hand-coded labels: stratified annotation
// sampling, train/test split, per-element grid search, accuracy reports and
// Cohen's kappa for intercoder reliability.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "vframe/datamodel.hpp"
#include "vframe/detail/util.hpp"
#include "vframe/ingest.hpp"
#include "vframe/ruleengine.hpp"

namespace vframe {

struct LabeledVideo {
  std::string video_id;
  FrameLabelSet gold;  // black_identity is stored as black_presence

  bool operator==(const LabeledVideo&) const = default;
};

// ============================================================================
// LABELED-VIDEO FILE
// ============================================================================

inline LabeledVideo labeled_video_from_json(const json& obj) {
  detail::Fields f(obj);
  f.require_exact({"video_id", "riot", "confrontation", "spectacle", "debate", "black_identity"});
  LabeledVideo v;
  v.video_id = f.string("video_id");
  if (v.video_id.empty()) throw ValidationError("video_id", "empty id");
  v.gold.riot = f.boolean("riot");
  v.gold.confrontation = f.boolean("confrontation");
  v.gold.spectacle = f.boolean("spectacle");
  v.gold.debate = f.boolean("debate");
  v.gold.black_presence = f.boolean("black_identity");
  return v;
}

inline json labeled_video_to_json(const LabeledVideo& v) {
  return json{{"video_id", v.video_id},
              {"riot", v.gold.riot},
              {"confrontation", v.gold.confrontation},
              {"spectacle", v.gold.spectacle},
              {"debate", v.gold.debate},
              {"black_identity", v.gold.black_presence}};
}

inline std::vector<LabeledVideo> parse_labeled(const std::string& text,
                                               const std::string& source = "<labeled>") {
  std::vector<LabeledVideo> out;
  std::unordered_set<std::string> seen;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    json obj = detail::parse_json_line(line, line_no, source);
    try {
      out.push_back(labeled_video_from_json(obj));
    } catch (const ValidationError& e) {
      throw InputError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(out.back().video_id).second)
      throw InputError(source + ":" + std::to_string(line_no) + ": duplicate video_id " +
                       out.back().video_id);
  });
  return out;
}

inline std::vector<LabeledVideo> load_labeled(const std::filesystem::path& path) {
  return parse_labeled(detail::read_file(path), path.string());
}

inline std::string encode_labeled(std::span<const LabeledVideo> labeled) {
  std::string out;
  for (const auto& v : labeled) out += labeled_video_to_json(v).dump() + "\n";
  return out;
}

// ============================================================================
// ACCURACY
// ============================================================================

struct AccuracyReport {
  std::array<double, 5> per_element{};  // indexed by Element
  double overall = 0.0;                 // unweighted mean of the five

  double operator[](Element e) const { return per_element[static_cast<std::size_t>(e)]; }
};

inline double overall_accuracy(const std::array<double, 5>& per_element) {
  double sum = 0.0;
  for (double a : per_element) sum += a;
  return sum / 5.0;
}

inline AccuracyReport make_report(const std::array<double, 5>& per_element) {
  return {per_element, overall_accuracy(per_element)};
}

// plain: fraction correct. balanced: mean of the positive-class and
// negative-class hit rates (a class absent from gold is left out).
enum class AccuracyMode { plain, balanced };

struct Confusion {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;

  void add(bool predicted, bool gold) {
    if (gold) (predicted ? tp : fn) += 1;
    else (predicted ? fp : tn) += 1;
  }
  double accuracy(AccuracyMode mode) const {
    const std::int64_t n = tp + tn + fp + fn;
    if (n == 0) return 0.0;
    if (mode == AccuracyMode::plain) return static_cast<double>(tp + tn) / static_cast<double>(n);
    const std::int64_t pos = tp + fn, neg = tn + fp;
    if (pos == 0) return static_cast<double>(tn) / static_cast<double>(neg);
    if (neg == 0) return static_cast<double>(tp) / static_cast<double>(pos);
    return 0.5 * (static_cast<double>(tp) / static_cast<double>(pos) +
                  static_cast<double>(tn) / static_cast<double>(neg));
  }
};

namespace detail {

inline const ScoreStream& stream_for(const StreamMap& streams, const std::string& id) {
  auto it = streams.find(id);
  if (it == streams.end()) throw InputError("no score stream for labeled video " + id);
  return it->second;
}

}  // namespace detail

inline AccuracyReport evaluate(const RuleConfig& cfg, std::span<const LabeledVideo> labeled,
                               const StreamMap& streams,
                               AccuracyMode mode = AccuracyMode::plain) {
  std::array<Confusion, 5> conf{};
  for (const auto& v : labeled) {
    const FrameLabelSet predicted = classify_video(detail::stream_for(streams, v.video_id), cfg);
    for (Element e : kAllElements)
      conf[static_cast<std::size_t>(e)].add(element_value(predicted, e), element_value(v.gold, e));
  }
  std::array<double, 5> acc{};
  for (std::size_t i = 0; i < 5; ++i) acc[i] = conf[i].accuracy(mode);
  return make_report(acc);
}

// ============================================================================
// SAMPLING AND SPLITTING
// ============================================================================

// Picks k ids such that every element is positive in more than
// min_prevalence * k of them. Scarcest elements are filled first from a
// seeded shuffle; the remainder is filled from the same shuffle.
inline std::vector<std::string> stratified_sample(std::span<const std::string> ids,
                                                  std::span<const FrameLabelSet> provisional,
                                                  std::size_t k, double min_prevalence,
                                                  std::uint64_t seed) {
  if (ids.size() != provisional.size())
    throw ValidationError("provisional_labels", "length differs from corpus");
  if (k > ids.size())
    throw ValidationError("k", "sample size " + std::to_string(k) + " exceeds corpus size " +
                                   std::to_string(ids.size()));
  if (!(min_prevalence >= 0.0 && min_prevalence < 1.0))
    throw ValidationError("min_prevalence", "must lie in [0,1)");

  const auto needed = static_cast<std::size_t>(std::floor(min_prevalence * static_cast<double>(k))) + 1;
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  detail::seeded_shuffle(order, seed);

  std::array<std::size_t, 5> positives{};
  for (const auto& l : provisional)
    for (Element e : kAllElements) positives[static_cast<std::size_t>(e)] += element_value(l, e);
  if (k > 0 && min_prevalence > 0.0) {
    for (Element e : kAllElements) {
      const std::size_t have = positives[static_cast<std::size_t>(e)];
      if (have < needed)
        throw InputError(std::string("stratified_sample infeasible: element ") + element_name(e) +
                         " needs more than " + std::to_string(needed - 1) + " positives in a sample of " +
                         std::to_string(k) + ", attainable maximum is " +
                         std::to_string(std::min(have, k)));
    }
  }

  std::vector<Element> by_scarcity(std::begin(kAllElements), std::end(kAllElements));
  std::stable_sort(by_scarcity.begin(), by_scarcity.end(), [&](Element a, Element b) {
    return positives[static_cast<std::size_t>(a)] < positives[static_cast<std::size_t>(b)];
  });

  std::vector<bool> chosen(ids.size(), false);
  std::vector<std::size_t> picked;
  auto count_in_sample = [&](Element e) {
    std::size_t n = 0;
    for (std::size_t i : picked) n += element_value(provisional[i], e);
    return n;
  };
  if (k > 0 && min_prevalence > 0.0) {
    for (Element e : by_scarcity) {
      std::size_t have = count_in_sample(e);
      for (std::size_t i : order) {
        if (have >= needed) break;
        if (chosen[i] || !element_value(provisional[i], e)) continue;
        chosen[i] = true;
        picked.push_back(i);
        ++have;
      }
      if (picked.size() > k)
        throw InputError(std::string("stratified_sample infeasible: meeting the quota for ") +
                         element_name(e) + " needs " + std::to_string(picked.size()) +
                         " videos, more than k = " + std::to_string(k));
    }
  }
  for (std::size_t i : order) {
    if (picked.size() >= k) break;
    if (!chosen[i]) {
      chosen[i] = true;
      picked.push_back(i);
    }
  }
  std::vector<std::string> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) out.push_back(ids[i]);
  return out;
}

struct Split {
  std::vector<LabeledVideo> train;
  std::vector<LabeledVideo> test;
};

inline Split split(std::span<const LabeledVideo> labeled, std::size_t n_train, std::uint64_t seed) {
  if (n_train >= labeled.size())
    throw ValidationError("n_train", "n_train " + std::to_string(n_train) +
                                         " must be smaller than the labeled set (" +
                                         std::to_string(labeled.size()) + ")");
  std::vector<std::size_t> order(labeled.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  detail::seeded_shuffle(order, seed);
  Split s;
  for (std::size_t k = 0; k < order.size(); ++k)
    (k < n_train ? s.train : s.test).push_back(labeled[order[k]]);
  return s;
}

// ============================================================================
// GRID SEARCH
// ============================================================================

// Tunable parameters, grouped by the element whose rule reads them.
enum class Param {
  riot_violence_threshold,
  riot_min_run,
  confront_police_threshold,
  confront_min_run,
  spectacle_crowd_threshold,
  spectacle_min_run,
  debate_max_people,
  debate_area_low,
  debate_run_low,
  debate_area_high,
  debate_run_high,
};

inline constexpr Param kAllParams[] = {
    Param::riot_violence_threshold, Param::riot_min_run,
    Param::confront_police_threshold, Param::confront_min_run,
    Param::spectacle_crowd_threshold, Param::spectacle_min_run,
    Param::debate_max_people, Param::debate_area_low, Param::debate_run_low,
    Param::debate_area_high, Param::debate_run_high};

inline constexpr const char* param_name(Param p) {
  switch (p) {
    case Param::riot_violence_threshold: return "riot_violence_threshold";
    case Param::riot_min_run: return "riot_min_run";
    case Param::confront_police_threshold: return "confront_police_threshold";
    case Param::confront_min_run: return "confront_min_run";
    case Param::spectacle_crowd_threshold: return "spectacle_crowd_threshold";
    case Param::spectacle_min_run: return "spectacle_min_run";
    case Param::debate_max_people: return "debate_max_people";
    case Param::debate_area_low: return "debate_area_low";
    case Param::debate_run_low: return "debate_run_low";
    case Param::debate_area_high: return "debate_area_high";
    case Param::debate_run_high: return "debate_run_high";
  }
  return "?";
}

inline Element param_element(Param p) {
  switch (p) {
    case Param::riot_violence_threshold:
    case Param::riot_min_run: return Element::riot;
    case Param::confront_police_threshold:
    case Param::confront_min_run: return Element::confrontation;
    case Param::spectacle_crowd_threshold:
    case Param::spectacle_min_run: return Element::spectacle;
    default: return Element::debate;
  }
}

inline bool param_is_integer(Param p) {
  switch (p) {
    case Param::riot_violence_threshold:
    case Param::confront_police_threshold:
    case Param::debate_area_low:
    case Param::debate_area_high: return false;
    default: return true;
  }
}

inline double get_param(const RuleConfig& c, Param p) {
  switch (p) {
    case Param::riot_violence_threshold: return c.riot_violence_threshold;
    case Param::riot_min_run: return c.riot_min_run;
    case Param::confront_police_threshold: return c.confront_police_threshold;
    case Param::confront_min_run: return c.confront_min_run;
    case Param::spectacle_crowd_threshold: return static_cast<double>(c.spectacle_crowd_threshold);
    case Param::spectacle_min_run: return c.spectacle_min_run;
    case Param::debate_max_people: return c.debate_max_people;
    case Param::debate_area_low: return c.debate_area_low;
    case Param::debate_run_low: return c.debate_run_low;
    case Param::debate_area_high: return c.debate_area_high;
    case Param::debate_run_high: return c.debate_run_high;
  }
  return 0.0;
}

inline void set_param(RuleConfig& c, Param p, double v) {
  const auto i = static_cast<int>(std::lround(v));
  switch (p) {
    case Param::riot_violence_threshold: c.riot_violence_threshold = v; break;
    case Param::riot_min_run: c.riot_min_run = i; break;
    case Param::confront_police_threshold: c.confront_police_threshold = v; break;
    case Param::confront_min_run: c.confront_min_run = i; break;
    case Param::spectacle_crowd_threshold: c.spectacle_crowd_threshold = std::llround(v); break;
    case Param::spectacle_min_run: c.spectacle_min_run = i; break;
    case Param::debate_max_people: c.debate_max_people = i; break;
    case Param::debate_area_low: c.debate_area_low = v; break;
    case Param::debate_run_low: c.debate_run_low = i; break;
    case Param::debate_area_high: c.debate_area_high = v; break;
    case Param::debate_run_high: c.debate_run_high = i; break;
  }
}

struct GridSpec {
  std::map<Param, std::vector<double>> values;  // missing parameter: base value
  std::set<Element> target_elements{Element::riot, Element::confrontation, Element::spectacle,
                                    Element::debate};
};

// Confidence steps of 0.05, run lengths 1..8, crowd {50,100,150,200,300},
// head areas between 0.01 and 0.30.
inline GridSpec default_grid() {
  GridSpec g;
  std::vector<double> conf, runs;
  for (int i = 1; i <= 19; ++i) conf.push_back(i / 20.0);
  for (int r = 1; r <= 8; ++r) runs.push_back(r);
  g.values[Param::riot_violence_threshold] = conf;
  g.values[Param::riot_min_run] = runs;
  g.values[Param::confront_police_threshold] = conf;
  g.values[Param::confront_min_run] = runs;
  g.values[Param::spectacle_crowd_threshold] = {50, 100, 150, 200, 300};
  g.values[Param::spectacle_min_run] = runs;
  g.values[Param::debate_max_people] = {3, 4, 5, 6, 7};
  g.values[Param::debate_area_low] = {0.01, 0.02, 0.03, 0.04, 0.05};
  g.values[Param::debate_run_low] = runs;
  g.values[Param::debate_area_high] = {0.10, 0.15, 0.20, 0.25, 0.30};
  g.values[Param::debate_run_high] = runs;
  return g;
}

// Flat "key = v1, v2, ..." lines plus "target_elements = riot, debate".
inline GridSpec parse_grid_spec(const std::string& text, const std::string& source = "<grid>") {
  GridSpec g;
  std::size_t line_no = 0;
  for (const std::string& raw : detail::split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw InputError(where + "expected key = values");
    const std::string key(detail::trim(line.substr(0, eq)));
    const auto items = detail::split(line.substr(eq + 1), ',');

    if (key == "target_elements") {
      g.target_elements.clear();
      for (const auto& item : items) {
        auto e = element_from_name(item);
        if (!e || *e == Element::black_identity)
          throw InputError(where + "unknown or untunable element '" + item + "'");
        g.target_elements.insert(*e);
      }
      continue;
    }
    auto param = std::find_if(std::begin(kAllParams), std::end(kAllParams),
                              [&](Param p) { return key == param_name(p); });
    if (param == std::end(kAllParams)) throw InputError(where + "unknown key '" + key + "'");
    std::vector<double> vals;
    for (const auto& item : items) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (item.empty() || ec != std::errc{} || p != item.data() + item.size())
        throw InputError(where + key + ": expected a number, got '" + item + "'");
      if (param_is_integer(*param) && v != std::floor(v))
        throw InputError(where + key + ": expected an integer, got '" + item + "'");
      RuleConfig probe;
      set_param(probe, *param, v);
      try {
        validate_rule_config(probe);
      } catch (const ValidationError& e) {
        throw InputError(where + e.what());
      }
      vals.push_back(v);
    }
    g.values[*param] = std::move(vals);
  }
  return g;
}

inline GridSpec load_grid_spec(const std::filesystem::path& path) {
  return parse_grid_spec(detail::read_file(path), path.string());
}

struct GridResult {
  RuleConfig best;
  AccuracyReport report;  // evaluate(best) on the training set
  std::vector<std::string> warnings;
  std::size_t points_evaluated = 0;
};

namespace detail {

inline std::vector<Param> params_of(Element e) {
  std::vector<Param> out;
  for (Param p : kAllParams)
    if (param_element(p) == e) out.push_back(p);
  return out;
}

// Ranking among equally accurate grid points: more parameters at their
// published default first, then smaller values in parameter order.
inline bool prefer(const std::vector<double>& a, const std::vector<double>& b,
                   const std::vector<Param>& params) {
  const RuleConfig defaults;
  auto at_default = [&](const std::vector<double>& v) {
    int n = 0;
    for (std::size_t i = 0; i < params.size(); ++i) n += v[i] == get_param(defaults, params[i]);
    return n;
  };
  const int da = at_default(a), db = at_default(b);
  if (da != db) return da > db;
  return a < b;
}

}  // namespace detail

// Tunes each target element independently over the product of its own
// parameter lists. Debate goes first so the confrontation rule is tuned
// against a frozen debate verdict. Grid points run in parallel and are
// reduced in grid order.
inline GridResult grid_search(std::span<const LabeledVideo> train, const StreamMap& streams,
                              const GridSpec& grid, const RuleConfig& base,
                              unsigned threads = detail::default_threads()) {
  if (train.empty()) throw ValidationError("train", "empty training set");
  if (grid.target_elements.empty()) throw ValidationError("grid", "empty grid: no target elements");
  if (grid.values.empty()) throw ValidationError("grid", "empty grid: no parameter values");
  for (const auto& [p, vals] : grid.values)
    if (vals.empty()) throw ValidationError(param_name(p), "empty grid: no candidate values");
  validate_rule_config(base);

  std::vector<const ScoreStream*> frames;
  frames.reserve(train.size());
  for (const auto& v : train) frames.push_back(&detail::stream_for(streams, v.video_id));

  GridResult result;
  result.best = base;
  for (Element e : kAllElements) {
    bool varied = false;
    for (const auto& v : train) varied = varied || element_value(v.gold, e) != element_value(train[0].gold, e);
    if (!varied)
      result.warnings.push_back(std::string("gold labels for ") + element_name(e) +
                                " have no variation in the training set");
  }

  auto count_correct = [&](const RuleConfig& cfg, Element target) {
    std::int64_t hits = 0;
    for (std::size_t v = 0; v < train.size(); ++v)
      hits += element_value(classify_video(*frames[v], cfg), target) ==
              element_value(train[v].gold, target);
    return hits;
  };

  struct Tuned {
    RuleConfig cfg;
    std::int64_t correct = 0;
  };
  auto tune = [&](Element target, const RuleConfig& start) {
    const std::vector<Param> params = detail::params_of(target);
    std::vector<std::vector<double>> axes;
    std::size_t points = 1;
    for (Param p : params) {
      auto it = grid.values.find(p);
      axes.push_back(it != grid.values.end() ? it->second
                                             : std::vector<double>{get_param(start, p)});
      points *= axes.back().size();
    }
    std::vector<std::vector<double>> coords(points);
    for (std::size_t idx = 0; idx < points; ++idx) {
      std::size_t rem = idx;
      coords[idx].resize(params.size());
      for (std::size_t k = params.size(); k-- > 0;) {
        coords[idx][k] = axes[k][rem % axes[k].size()];
        rem /= axes[k].size();
      }
    }
    auto config_at = [&](std::size_t idx) {
      RuleConfig cfg = start;
      for (std::size_t k = 0; k < params.size(); ++k) set_param(cfg, params[k], coords[idx][k]);
      return cfg;
    };
    std::vector<std::int64_t> correct(points, 0);
    detail::parallel_for(points, threads,
                         [&](std::size_t idx) { correct[idx] = count_correct(config_at(idx), target); });
    result.points_evaluated += points;

    std::size_t best = 0;
    for (std::size_t idx = 1; idx < points; ++idx) {
      if (correct[idx] > correct[best] ||
          (correct[idx] == correct[best] && detail::prefer(coords[idx], coords[best], params)))
        best = idx;
    }
    return Tuned{config_at(best), correct[best]};
  };

  const bool tune_debate = grid.target_elements.count(Element::debate) > 0;
  const bool tune_confront = grid.target_elements.count(Element::confrontation) > 0;
  if (tune_debate) {
    Tuned debate = tune(Element::debate, result.best);
    if (tune_confront) {
      Tuned confront = tune(Element::confrontation, debate.cfg);
      if (base.confront_excludes_debate) {
        // A better debate verdict can cost confrontation more than it gains;
        // keep the base debate rule when the pair scores higher with it.
        Tuned fallback = tune(Element::confrontation, result.best);
        const std::int64_t base_debate = count_correct(result.best, Element::debate);
        if (base_debate + fallback.correct > debate.correct + confront.correct)
          confront = fallback;
      }
      result.best = confront.cfg;
    } else {
      result.best = debate.cfg;
    }
  } else if (tune_confront) {
    result.best = tune(Element::confrontation, result.best).cfg;
  }
  if (grid.target_elements.count(Element::riot)) result.best = tune(Element::riot, result.best).cfg;
  if (grid.target_elements.count(Element::spectacle))
    result.best = tune(Element::spectacle, result.best).cfg;
  result.report = evaluate(result.best, train, streams);
  return result;
}

// ============================================================================
// INTERCODER RELIABILITY
// ============================================================================

inline KappaResult cohen_kappa(std::span<const bool> a, std::span<const bool> b) {
  if (a.size() != b.size()) throw ValidationError("coder_b", "length differs from coder_a");
  if (a.empty()) throw ValidationError("coder_a", "need at least one item");
  const auto n = static_cast<double>(a.size());
  double agree = 0.0, a_true = 0.0, b_true = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i];
    a_true += a[i];
    b_true += b[i];
  }
  KappaResult r;
  r.observed_agreement = agree / n;
  const double pa = a_true / n, pb = b_true / n;
  r.expected_agreement = pa * pb + (1.0 - pa) * (1.0 - pb);
  if (r.expected_agreement >= 1.0) {
    if (r.observed_agreement < 1.0)
      throw ValidationError("coder_b", "kappa undefined: chance agreement is 1 but labels differ");
    r.kappa = 1.0;
    return r;
  }
  r.kappa = (r.observed_agreement - r.expected_agreement) / (1.0 - r.expected_agreement);
  return r;
}

}  // namespace vframe
