// vframe: classify score streams, calibrate rule thresholds, and render
// frame statistics reports.
//
// Exit codes: 0 success, 1 input error, 2 internal invariant violation.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vframe/vframe.hpp"

namespace fs = std::filesystem;
using namespace vframe;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = ".";
  unsigned threads = detail::default_threads();
};

RuleConfig base_config(const Globals& g) {
  return g.config.empty() ? RuleConfig{} : load_rule_config(g.config);
}

// ============================================================================
// classify
// ============================================================================

struct ClassifyArgs {
  std::string meta;
  std::string scores;
};

int run_classify(const Globals& g, const ClassifyArgs& a) {
  const RuleConfig cfg = base_config(g);
  const auto corpus = load_corpus(a.meta);
  const StreamMap streams = read_score_stream(a.scores);

  // a video without score lines has no sampled frames
  std::vector<ScoreStream> ordered;
  ordered.reserve(corpus.size());
  for (const auto& v : corpus) {
    auto it = streams.find(v.video_id);
    ordered.push_back(it == streams.end() ? ScoreStream{} : it->second);
  }
  const auto labels = classify_batch(ordered, cfg, g.threads);

  std::string out;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    out += label_set_to_json(corpus[i].video_id, labels[i]).dump() + "\n";
  const fs::path path = fs::path(g.out) / "labels.jsonl";
  detail::write_file_atomic(path, out);
  std::cout << "classified " << corpus.size() << " videos -> " << path.string() << "\n";
  return 0;
}

// ============================================================================
// calibrate
// ============================================================================

struct CalibrateArgs {
  std::string labeled;
  std::string scores;
  std::string grid;
  std::string validation;
  std::size_t n_train = 0;
};

std::string accuracy_row(const std::string& set, const char* mode, const AccuracyReport& r) {
  std::string row = set + "\t" + mode;
  for (double v : r.per_element) row += "\t" + format_percent(v);
  return row + "\t" + format_percent(r.overall) + "\n";
}

int run_calibrate(const Globals& g, const CalibrateArgs& a) {
  const RuleConfig base = base_config(g);
  auto labeled = load_labeled(a.labeled);
  if (labeled.empty()) throw InputError(a.labeled + ": no labeled videos");
  const StreamMap streams = read_score_stream(a.scores);
  const GridSpec grid = a.grid.empty() ? default_grid() : load_grid_spec(a.grid);

  std::vector<LabeledVideo> train, test;
  std::string test_name;
  if (!a.validation.empty()) {
    train = std::move(labeled);
    test = load_labeled(a.validation);
    test_name = "validation";
  } else if (a.n_train > 0) {
    Split s = split(labeled, a.n_train, g.seed);
    train = std::move(s.train);
    test = std::move(s.test);
    test_name = "test";
  } else {
    train = std::move(labeled);
  }

  const GridResult result = grid_search(train, streams, grid, base, g.threads);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

  std::string tsv = "set\tmode";
  for (Element e : kAllElements) tsv += std::string("\t") + element_name(e);
  tsv += "\toverall\n";
  for (auto [mode, name] : {std::pair{AccuracyMode::plain, "plain"},
                            std::pair{AccuracyMode::balanced, "balanced"}}) {
    tsv += accuracy_row("train", name, evaluate(result.best, train, streams, mode));
    if (!test.empty()) tsv += accuracy_row(test_name, name, evaluate(result.best, test, streams, mode));
  }

  const fs::path out(g.out);
  detail::write_file_atomic(out / "rule_config.txt", encode_rule_config(result.best));
  detail::write_file_atomic(out / "accuracy.tsv", tsv);
  std::cout << "evaluated " << result.points_evaluated << " grid points; train overall accuracy "
            << format_percent(result.report.overall) << "%\n";
  return 0;
}

// ============================================================================
// stats
// ============================================================================

struct StatsArgs {
  std::string labels;
  std::string meta;
};

int run_stats(const Globals& g, const StatsArgs& a) {
  const LabelMap labels = load_labels(a.labels);
  const auto corpus = load_corpus(a.meta);
  const ReportBundle bundle = build_report(labels, corpus);
  write_report(bundle, g.out);
  std::cout << render_text_report(bundle);
  return 0;
}

// ============================================================================
// replicate-tables
// ============================================================================

struct ReplicateArgs {
  std::string summary;
  std::string counts;
};

int run_replicate(const Globals& g, const ReplicateArgs& a) {
  std::vector<TReplication> ts;
  std::vector<ChiReplication> chis;
  if (!a.summary.empty())
    for (const auto& row : parse_summary_rows(detail::read_file(a.summary), a.summary))
      ts.push_back(replicate_t(row));
  if (!a.counts.empty()) {
    const auto blocks = parse_counts_blocks(detail::read_file(a.counts), a.counts);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      try {
        chis.push_back(replicate_chi(blocks[i]));
      } catch (const ValidationError& e) {
        throw InputError(a.counts + ": block " + std::to_string(i + 1) + ": " + e.what());
      }
    }
  }
  if (ts.empty() && chis.empty()) throw InputError("replicate-tables: nothing to do (give --summary and/or --counts)");

  const fs::path out(g.out);
  const std::string text = render_replication_text(ts, chis);
  detail::write_file_atomic(out / "replication_t.tsv", render_t_replication_tsv(ts));
  detail::write_file_atomic(out / "replication_chi.tsv", render_chi_replication_tsv(chis));
  detail::write_file_atomic(out / "replication.txt", text);
  std::cout << text;
  return 0;
}

// ============================================================================
// sample-frames
// ============================================================================

struct SampleArgs {
  std::vector<std::string> videos;
  FrameSamplerOptions tools;
};

int run_sample(const Globals& g, const SampleArgs& a) {
  for (const auto& video : a.videos) {
    const FrameSampling s = sample_frames(video, g.out, a.tools);
    for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << s.video_id << "\t" << s.images.size() << "\n";
  }
  return 0;
}

// ============================================================================
// kappa
// ============================================================================

struct KappaArgs {
  std::string coder_a;
  std::string coder_b;
};

int run_kappa(const Globals& g, const KappaArgs& a) {
  const auto first = load_labeled(a.coder_a);
  const auto second = load_labeled(a.coder_b);
  std::map<std::string, FrameLabelSet> by_id;
  for (const auto& v : second) by_id[v.video_id] = v.gold;
  if (first.size() != second.size())
    throw InputError("coder files cover different videos: " + std::to_string(first.size()) + " vs " +
                     std::to_string(second.size()));
  for (const auto& v : first)
    if (!by_id.count(v.video_id)) throw InputError(a.coder_b + ": no label for video " + v.video_id);

  std::string tsv = "element\tn\tobserved_agreement\texpected_agreement\tkappa\n";
  for (Element e : kAllElements) {
    // std::vector<bool> has no contiguous storage
    const std::size_t n = first.size();
    auto xa = std::make_unique<bool[]>(n), xb = std::make_unique<bool[]>(n);
    for (std::size_t i = 0; i < n; ++i) {
      xa[i] = element_value(first[i].gold, e);
      xb[i] = element_value(by_id.at(first[i].video_id), e);
    }
    const KappaResult k = cohen_kappa(std::span<const bool>(xa.get(), n), std::span<const bool>(xb.get(), n));
    char line[160];
    std::snprintf(line, sizeof line, "%s\t%zu\t%.4f\t%.4f\t%.4f\n", element_name(e), n,
                  k.observed_agreement, k.expected_agreement, k.kappa);
    tsv += line;
  }
  detail::write_file_atomic(fs::path(g.out) / "kappa.tsv", tsv);
  std::cout << tsv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Protest visual-frame classification and reporting"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Rule configuration file (key = value)");
  app.add_option("--seed", g.seed, "Seed for sampling and splitting");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  ClassifyArgs ca;
  auto* classify = app.add_subcommand("classify", "Label every video from its score stream");
  classify->add_option("--meta", ca.meta, "Video metadata JSONL")->required();
  classify->add_option("--scores", ca.scores, "Score stream JSONL")->required();

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Grid-search rule thresholds against gold labels");
  calibrate->add_option("--labeled", cal.labeled, "Gold-labeled videos JSONL")->required();
  calibrate->add_option("--scores", cal.scores, "Score stream JSONL")->required();
  calibrate->add_option("--grid", cal.grid, "Grid specification (key = v1, v2, ...)");
  auto* validation = calibrate->add_option("--validation", cal.validation, "Held-out labeled videos JSONL");
  calibrate->add_option("--n-train", cal.n_train, "Split the labeled set: first n after a seeded shuffle train")
      ->excludes(validation);

  StatsArgs sa;
  auto* stats_cmd = app.add_subcommand("stats", "Frequency, t-test, chi-square and histogram reports");
  stats_cmd->add_option("--labels", sa.labels, "Label JSONL from classify")->required();
  stats_cmd->add_option("--meta", sa.meta, "Video metadata JSONL")->required();

  ReplicateArgs ra;
  auto* replicate = app.add_subcommand("replicate-tables", "Recompute t and chi-square from published aggregates");
  replicate->add_option("--summary", ra.summary, "Group summaries JSONL");
  replicate->add_option("--counts", ra.counts, "Contingency counts JSONL");

  SampleArgs sm;
  auto* sample = app.add_subcommand("sample-frames", "Extract one image per second of video");
  sample->add_option("videos", sm.videos, "Video files")->required();
  sample->add_option("--ffmpeg", sm.tools.ffmpeg, "ffmpeg executable");
  sample->add_option("--ffprobe", sm.tools.ffprobe, "ffprobe executable");

  KappaArgs ka;
  auto* kappa = app.add_subcommand("kappa", "Intercoder reliability between two labeled files");
  kappa->add_option("coder_a", ka.coder_a, "First coder's labeled JSONL")->required();
  kappa->add_option("coder_b", ka.coder_b, "Second coder's labeled JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*classify) return run_classify(g, ca);
    if (*calibrate) return run_calibrate(g, cal);
    if (*stats_cmd) return run_stats(g, sa);
    if (*replicate) return run_replicate(g, ra);
    if (*sample) return run_sample(g, sm);
    if (*kappa) return run_kappa(g, ka);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InvariantViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
