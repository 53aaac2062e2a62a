#include "blinkflow/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "blinkflow/format.hpp"
#include "blinkflow/ingest.hpp"
#include "blinkflow/learn/evaluate.hpp"
#include "blinkflow/learn/mdlstm.hpp"
#include "blinkflow/metrics.hpp"
#include "blinkflow/spectro.hpp"
#include "blinkflow/synth.hpp"

namespace blinkflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SeedOption {
  std::optional<std::uint64_t> flag;

  // --seed wins, then BLINKFLOW_SEED, then 0.
  std::uint64_t resolve() const {
    if (flag) return *flag;
    if (const char* env = std::getenv("BLINKFLOW_SEED")) {
      const std::string s(trim(env));
      std::uint64_t v = 0;
      const auto* end = s.data() + s.size();
      const auto r = std::from_chars(s.data(), end, v);
      if (s.empty() || r.ec != std::errc{} || r.ptr != end) {
        fail(ErrorKind::Configuration, "BLINKFLOW_SEED is not an unsigned integer: '" + s + "'");
      }
      return v;
    }
    return 0;
  }
};

struct WindowFlags {
  double win_len_s = 61.0;
  double step_s = 1.0;
  std::optional<double> sigma_s;
  double f_lo_bpm = 2.0;
  double f_hi_bpm = 25.0;
  std::size_t n_freqs = kDefaultFreqCount;
  double detrend_s = 1.0;

  void add(CLI::App& app) {
    app.add_option("--win-len-s", win_len_s, "Window length in seconds")->capture_default_str();
    app.add_option("--step-s", step_s, "Window step in seconds")->capture_default_str();
    app.add_option("--sigma-s", sigma_s, "Gaussian taper sigma in seconds (default win/6)");
    app.add_option("--f-lo-bpm", f_lo_bpm, "Lower band edge, blinks/min")->capture_default_str();
    app.add_option("--f-hi-bpm", f_hi_bpm, "Upper band edge, blinks/min")->capture_default_str();
    app.add_option("--n-freqs", n_freqs, "Frequency bins")->capture_default_str();
    app.add_option("--detrend-s", detrend_s, "Moving-average width for detrending")->capture_default_str();
  }

  SpectrogramConfig config() const {
    SpectrogramConfig c;
    c.window.win_len_s = win_len_s;
    c.window.step_s = step_s;
    c.window.gaussian_sigma_s = sigma_s;
    c.window.f_lo = f_lo_bpm / 60.0;
    c.window.f_hi = f_hi_bpm / 60.0;
    c.n_freqs = n_freqs;
    c.detrend_width_s = detrend_s;
    c.window.validate();
    if (n_freqs < 2) fail(ErrorKind::Configuration, "--n-freqs must be at least 2");
    if (!(detrend_s > 0.0)) fail(ErrorKind::Configuration, "--detrend-s must be positive");
    return c;
  }

  json to_json() const {
    const auto c = config();
    return {{"win_len_s", win_len_s},          {"step_s", step_s},
            {"sigma_s", c.window.sigma()},     {"f_lo_bpm", f_lo_bpm},
            {"f_hi_bpm", f_hi_bpm},            {"n_freqs", n_freqs},
            {"detrend_s", detrend_s}};
  }
};

struct MetricFlags {
  std::size_t bins = kDefaultEntropyBins;
  DetectorConfig detector;

  void add(CLI::App& app) {
    app.add_option("--bins", bins, "Histogram bins for blink entropy")->capture_default_str();
    app.add_option("--threshold-scale", detector.threshold_scale, "Detector threshold in robust spreads")
        ->capture_default_str();
    app.add_option("--hysteresis", detector.hysteresis_frac, "Release level as a fraction of the threshold")
        ->capture_default_str();
    app.add_option("--min-gap-s", detector.min_gap_s, "Merge events closer than this")->capture_default_str();
  }

  MetricConfig config(double detrend_s) const {
    detector.validate();
    if (bins < 1) fail(ErrorKind::Configuration, "--bins must be at least 1");
    MetricConfig c;
    c.detector = detector;
    c.entropy_bins = bins;
    c.detrend_width_s = detrend_s;
    return c;
  }

  json to_json() const {
    return {{"bins", bins},
            {"threshold_scale", detector.threshold_scale},
            {"hysteresis", detector.hysteresis_frac},
            {"min_gap_s", detector.min_gap_s}};
  }
};

struct TrainFlags {
  std::size_t hidden = 16;
  double lr = learn::TrainConfig{}.learning_rate;
  std::size_t epochs = learn::TrainConfig{}.epochs;
  double clip = learn::TrainConfig{}.clip_norm;
  std::string pooling = "mean";

  void add(CLI::App& app) {
    app.add_option("--hidden", hidden, "2D LSTM hidden units")->capture_default_str();
    app.add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app.add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app.add_option("--clip", clip, "Gradient-norm clipping threshold")->capture_default_str();
    app.add_option("--pooling", pooling, "Hidden-state pooling: mean or last")->capture_default_str();
  }

  learn::TrainConfig config(std::uint64_t seed) const {
    learn::TrainConfig c;
    c.hidden = hidden;
    c.learning_rate = lr;
    c.epochs = epochs;
    c.clip_norm = clip;
    c.pooling = learn::parse_pooling(pooling);
    c.seed = seed;
    c.validate();
    return c;
  }
};

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) fail(ErrorKind::Io, "cannot write " + path.string());
  f << j.dump(2) << '\n';
  if (!f) fail(ErrorKind::Io, "write failure on " + path.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorKind::Io, "cannot write " + path.string());
  return f;
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<fs::path> series_files(const fs::path& input) {
  std::error_code ec;
  if (!fs::exists(input, ec)) fail(ErrorKind::Io, "no such file or directory: " + input.string());
  if (!fs::is_directory(input, ec)) return {input};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(input, ec)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension().string();
    if (ext == ".csv" || ext == ".jsonl") out.push_back(e.path());
  }
  if (ec) fail(ErrorKind::Io, "cannot list " + input.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

fs::path manifest_path(const fs::path& input) {
  std::error_code ec;
  if (fs::is_directory(input, ec)) return input / "manifest.json";
  return input;
}

struct LoadedCohort {
  std::vector<learn::BlockRecord> blocks;
  std::vector<std::string> class_order;
};

LoadedCohort load_cohort(const fs::path& input, const learn::PipelineConfig& pipeline) {
  const auto manifest = synth::read_manifest(manifest_path(input));
  LoadedCohort c;
  c.class_order = manifest.class_order;
  for (const auto& e : manifest.entries) {
    const auto file = read_series_file(e.file);
    const BlinkSeries series({file.samples().begin(), file.samples().end()}, e.subject, e.block);
    c.blocks.push_back(learn::prepare_block(series, pipeline, e.class_name, e.aux));
  }
  if (c.blocks.empty()) fail(ErrorKind::InvalidInput, "manifest lists no blocks");
  return c;
}

// ---- subcommands ----

struct ExtractCmd {
  std::string input;
  std::string output;
  double eps = kDefaultEarEps;

  int run(std::ostream& out) const {
    std::ifstream in(input);
    if (!in) fail(ErrorKind::Io, "cannot open " + input);
    const auto series = series_from_landmarks(in, eps);
    write_series_file(output, series);
    write_json_file(fs::path(output).replace_extension(".json"),
                    {{"command", "extract"}, {"input", input}, {"eps", eps}, {"samples", series.size()}});
    out << "extracted " << series.size() << " ratio samples to " << output << '\n';
    return kExitOk;
  }
};

struct SpectrogramCmd {
  std::string input;
  std::string output;
  bool pgm = false;
  bool raw = false;
  WindowFlags window;
  SeedOption seed;

  int run(std::ostream& out) const {
    const auto cfg = window.config();
    const auto series = read_series_file(input);
    const auto raw_sp = build_spectrogram(series, cfg);
    const auto sp = raw ? raw_sp : minmax_normalize(raw_sp);

    fs::path csv = output.empty() ? fs::path(input).replace_extension(".spectrogram.csv") : fs::path(output);
    {
      auto f = open_out(csv);
      write_spectrogram_csv(f, sp);
      if (!f) fail(ErrorKind::Io, "write failure on " + csv.string());
    }
    json meta = {{"command", "spectrogram"},
                 {"input", input},
                 {"config", window.to_json()},
                 {"seed", seed.resolve()},
                 {"normalized", sp.normalized},
                 {"time_steps", sp.time_steps()},
                 {"freq_bins", sp.freq_bins()},
                 {"degenerate", sp.degenerate},
                 {"irregular_windows", sp.irregular_windows}};
    if (pgm) {
      const auto pgm_path = fs::path(csv).replace_extension(".pgm");
      auto f = open_out(pgm_path);
      write_spectrogram_pgm(f, raw ? minmax_normalize(raw_sp) : sp);
      if (!f) fail(ErrorKind::Io, "write failure on " + pgm_path.string());
      meta["pgm"] = pgm_path.string();
    }
    write_json_file(fs::path(csv).replace_extension(".json"), meta);
    out << "spectrogram " << sp.time_steps() << " x " << sp.freq_bins() << " (time x frequency)"
        << " degenerate=" << (sp.degenerate ? "yes" : "no")
        << " irregular_windows=" << sp.irregular_windows << '\n'
        << "wrote " << csv.string() << '\n';
    return kExitOk;
  }
};

struct MetricsCmd {
  std::string input;
  std::string output;
  WindowFlags window;
  MetricFlags metrics;
  SeedOption seed;

  int run(std::ostream& out) const {
    const auto scfg = window.config();
    const auto mcfg = metrics.config(window.detrend_s);
    std::ostringstream csv;
    csv << "subject,block,br,bd,be\n";
    std::size_t rows = 0;
    for (const auto& path : series_files(input)) {
      if (path.filename() == "manifest.json") continue;
      const auto series = read_series_file(path);
      const auto sp = build_spectrogram(series, scfg);
      const auto m = metric_vector(series, sp, mcfg);
      csv << series.subject_id() << ',' << series.block_id() << ',' << format_number(m.br) << ','
          << format_number(m.bd) << ',' << format_number(m.be) << '\n';
      ++rows;
    }
    if (rows == 0) fail(ErrorKind::InvalidInput, "no series files under " + input);
    if (output.empty()) {
      out << csv.str();
    } else {
      auto f = open_out(output);
      f << csv.str();
      if (!f) fail(ErrorKind::Io, "write failure on " + output);
      write_json_file(fs::path(output).replace_extension(".json"),
                      {{"command", "metrics"},
                       {"input", input},
                       {"rows", rows},
                       {"seed", seed.resolve()},
                       {"window", window.to_json()},
                       {"metrics", metrics.to_json()}});
      out << "wrote " << rows << " metric rows to " << output << '\n';
    }
    return kExitOk;
  }
};

struct SynthCmd {
  std::string output;
  std::size_t subjects = 12;
  std::string classes = "periodic,irregular";
  std::size_t blocks_per_class = 1;
  double rate_perturbation = 0.10;
  std::optional<double> duration_s;
  std::optional<double> fs;
  std::optional<double> noise_sigma;
  SeedOption seed;

  int run(std::ostream& out) const {
    synth::CohortConfig cfg;
    cfg.n_subjects = subjects;
    cfg.blocks_per_class = blocks_per_class;
    cfg.rate_perturbation = rate_perturbation;
    cfg.seed = seed.resolve();
    std::stringstream ss(classes);
    for (std::string name; std::getline(ss, name, ',');) {
      name = std::string(trim(name));
      if (name.empty()) continue;
      auto c = synth::class_preset(name);
      if (duration_s) c.config.duration_s = *duration_s;
      if (fs) c.config.fs = *fs;
      if (noise_sigma) c.config.noise_sigma = *noise_sigma;
      cfg.classes.push_back(std::move(c));
    }
    cfg.validate();
    const auto members = synth::generate_members(cfg);
    synth::export_cohort(output, cfg, members);
    out << "wrote " << members.size() << " series (" << cfg.n_subjects << " subjects x "
        << cfg.classes.size() << " classes x " << cfg.blocks_per_class << " blocks) to " << output
        << " seed=" << cfg.seed << '\n';
    return kExitOk;
  }
};

struct TrainCmd {
  std::string input;
  std::string output = "model.json";
  std::string labeling = "event";
  WindowFlags window;
  MetricFlags metrics;
  TrainFlags train;
  SeedOption seed;

  int run(std::ostream& out) const {
    learn::PipelineConfig pipeline;
    pipeline.spectro = window.config();
    pipeline.metrics = metrics.config(window.detrend_s);
    const auto tc = train.config(seed.resolve());
    const auto cohort = load_cohort(input, pipeline);
    learn::DatasetOptions opts;
    opts.input = learn::InputKind::Spectrogram;
    opts.class_order = cohort.class_order;
    const auto ds = learn::make_dataset(cohort.blocks, learn::parse_labeling(labeling), opts);
    learn::TrainHistory history;
    const auto model = learn::train_mdlstm(ds, tc, &history);

    std::ostringstream ck;
    learn::write_checkpoint(ck, model);
    json j = json::parse(ck.str());
    j["training"] = {{"labeling", labeling},
                     {"classes", ds.class_names},
                     {"instances", ds.size()},
                     {"seed", tc.seed},
                     {"learning_rate", tc.learning_rate},
                     {"epochs", tc.epochs},
                     {"clip_norm", tc.clip_norm},
                     {"epoch_loss", history.epoch_loss},
                     {"window", window.to_json()},
                     {"metrics", metrics.to_json()}};
    write_json_file(output, j);
    out << "trained 2D LSTM (hidden " << tc.hidden << ") on " << ds.size() << " instances, "
        << tc.epochs << " epochs, final loss " << format_number(history.epoch_loss.back())
        << ", seed " << tc.seed << '\n'
        << "wrote " << output << '\n';
    return kExitOk;
  }
};

struct EvaluateCmd {
  std::string input;
  std::string output;
  std::string method = "mdlstm2d";
  std::string labeling = "event";
  std::string features = "br,bd,be";
  bool all = false;
  std::optional<std::size_t> k;
  WindowFlags window;
  MetricFlags metrics;
  TrainFlags train;
  SeedOption seed;

  learn::FeatureSet feature_set() const {
    learn::FeatureSet f{false, false, false};
    std::stringstream ss(features);
    for (std::string name; std::getline(ss, name, ',');) {
      name = std::string(trim(name));
      if (name == "br") f.br = true;
      else if (name == "bd") f.bd = true;
      else if (name == "be") f.be = true;
      else fail(ErrorKind::Configuration, "unknown feature '" + name + "'");
    }
    if (f.size() == 0) fail(ErrorKind::Configuration, "--features selects nothing");
    return f;
  }

  int run(std::ostream& out) const {
    learn::PipelineConfig pipeline;
    pipeline.spectro = window.config();
    pipeline.metrics = metrics.config(window.detrend_s);
    learn::EvalConfig ec;
    ec.seed = seed.resolve();
    ec.mdlstm = train.config(ec.seed);
    ec.features = feature_set();
    ec.baseline.knn_k = k;
    if (k && *k == 0) fail(ErrorKind::Configuration, "--k must be at least 1");

    std::vector<learn::Method> methods;
    std::vector<learn::Labeling> labelings;
    if (all) {
      methods.assign(std::begin(learn::kAllMethods), std::end(learn::kAllMethods));
      labelings = {learn::Labeling::Event, learn::Labeling::Subjective, learn::Labeling::Objective};
    } else {
      methods = {learn::parse_method(method)};
      labelings = {learn::parse_labeling(labeling)};
    }

    const auto cohort = load_cohort(input, pipeline);
    json reports = json::array();
    std::vector<std::vector<std::string>> cells(methods.size(), std::vector<std::string>(labelings.size()));
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      for (std::size_t li = 0; li < labelings.size(); ++li) {
        try {
          const auto r = learn::evaluate_blocks(cohort.blocks, methods[mi], labelings[li], ec,
                                                cohort.class_order);
          cells[mi][li] = fixed(r.mean_accuracy);
          reports.push_back(r.to_json());
          if (!all) print_folds(out, r);
        } catch (const Error& e) {
          const bool skippable =
              e.kind() == ErrorKind::DegenerateLabeling || e.kind() == ErrorKind::Labeling;
          if (!all || !skippable) throw;
          cells[mi][li] = "n/a";
          reports.push_back({{"method", learn::to_string(methods[mi])},
                             {"labeling", learn::to_string(labelings[li])},
                             {"error", e.what()}});
        }
      }
    }

    out << "method        ";
    for (auto l : labelings) out << ' ' << pad(std::string(learn::to_string(l)), 11);
    out << '\n';
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      out << pad(std::string(learn::to_string(methods[mi])), 14);
      for (const auto& c : cells[mi]) out << ' ' << pad(c, 11);
      out << '\n';
    }
    out << "seed " << ec.seed << '\n';

    if (!output.empty()) {
      json j = all ? json{{"grid", reports}} : reports.front();
      j["seed"] = ec.seed;
      j["config"] = ec.to_json();
      j["config"]["window"] = window.to_json();
      j["config"]["metrics"] = metrics.to_json();
      j["input"] = input;
      write_json_file(output, j);
      out << "wrote " << output << '\n';
    }
    return kExitOk;
  }

  static std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  }

  static void print_folds(std::ostream& out, const learn::EvalReport& r) {
    out << r.method << " / " << r.labeling << " leave-one-subject-out\n";
    for (const auto& f : r.folds) out << "  " << pad(f.subject, 10) << ' ' << fixed(f.accuracy) << '\n';
    out << "  mean       " << fixed(r.mean_accuracy) << '\n';
  }
};

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InsufficientData:
    case ErrorKind::NumericalDegeneracy: return kExitInsufficientData;
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::DegenerateLabeling: return kExitDegenerateLabeling;
    case ErrorKind::TrainingFailure:
    case ErrorKind::NumericOverflow: return kExitTrainingFailure;
    case ErrorKind::InvalidInput:
    case ErrorKind::Parse:
    case ErrorKind::Ordering:
    case ErrorKind::Configuration:
    case ErrorKind::Labeling: return kExitParse;
  }
  return kExitParse;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Blink timeseries spectrograms, metrics and workload classifiers", "blinkflow"};
  app.require_subcommand(1);

  ExtractCmd extract;
  auto* ex = app.add_subcommand("extract", "Eye-ratio series from six-landmark CSV");
  ex->add_option("input", extract.input, "Landmark CSV")->required();
  ex->add_option("--out", extract.output, "Series CSV to write")->required();
  ex->add_option("--eps", extract.eps, "Minimum eye height")->capture_default_str();

  SpectrogramCmd spectro;
  auto* sp = app.add_subcommand("spectrogram", "Blink spectrogram of one series");
  sp->add_option("input", spectro.input, "Series file (.csv or .jsonl)")->required();
  sp->add_option("--out", spectro.output, "Spectrogram CSV path");
  sp->add_flag("--pgm", spectro.pgm, "Also write a plain PGM image");
  sp->add_flag("--raw", spectro.raw, "Write unnormalized power");
  sp->add_option("--seed", spectro.seed.flag, "Recorded in the sidecar; the pipeline is deterministic");
  spectro.window.add(*sp);

  MetricsCmd metrics;
  auto* me = app.add_subcommand("metrics", "Blink rate, duration and entropy per block");
  me->add_option("input", metrics.input, "Series file or directory")->required();
  me->add_option("--out", metrics.output, "Metrics CSV path (stdout if omitted)");
  me->add_option("--seed", metrics.seed.flag, "Recorded in the sidecar; the pipeline is deterministic");
  metrics.window.add(*me);
  metrics.metrics.add(*me);

  SynthCmd synth;
  auto* sy = app.add_subcommand("synth", "Synthetic multi-subject cohort");
  sy->add_option("--out", synth.output, "Output directory")->required();
  sy->add_option("--subjects", synth.subjects, "Subjects")->capture_default_str();
  sy->add_option("--classes", synth.classes,
                 "Comma-separated presets: periodic, irregular, slow, fast, baseline, easy, hard")
      ->capture_default_str();
  sy->add_option("--blocks-per-class", synth.blocks_per_class, "Blocks per class")->capture_default_str();
  sy->add_option("--rate-perturbation", synth.rate_perturbation, "Per-subject rate spread")
      ->capture_default_str();
  sy->add_option("--duration-s", synth.duration_s, "Block duration override");
  sy->add_option("--fs", synth.fs, "Sampling rate override");
  sy->add_option("--noise-sigma", synth.noise_sigma, "Noise override");
  sy->add_option("--seed", synth.seed.flag, "Seed (falls back to BLINKFLOW_SEED)");

  TrainCmd train;
  auto* tr = app.add_subcommand("train", "Train the 2D LSTM on a cohort");
  tr->add_option("input", train.input, "manifest.json or its directory")->required();
  tr->add_option("--out", train.output, "Checkpoint path")->capture_default_str();
  tr->add_option("--labeling", train.labeling, "event, subjective or objective")->capture_default_str();
  tr->add_option("--seed", train.seed.flag, "Seed (falls back to BLINKFLOW_SEED)");
  train.window.add(*tr);
  train.metrics.add(*tr);
  train.train.add(*tr);

  EvaluateCmd eval;
  auto* ev = app.add_subcommand("evaluate", "Leave-one-subject-out evaluation");
  ev->add_option("input", eval.input, "manifest.json or its directory")->required();
  ev->add_option("--out", eval.output, "Report JSON path");
  ev->add_option("--method", eval.method, "mdlstm2d, knn, linear_svm, mlp or lstm1d")->capture_default_str();
  ev->add_option("--labeling", eval.labeling, "event, subjective or objective")->capture_default_str();
  ev->add_option("--features", eval.features, "Feature subset for knn and linear_svm")->capture_default_str();
  ev->add_flag("--all", eval.all, "Every method under every labeling");
  ev->add_option("--k", eval.k, "Fixed k for knn (grid searched otherwise)");
  ev->add_option("--seed", eval.seed.flag, "Seed (falls back to BLINKFLOW_SEED)");
  eval.window.add(*ev);
  eval.metrics.add(*ev);
  eval.train.add(*ev);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    if (*ex) return extract.run(out);
    if (*sp) return spectro.run(out);
    if (*me) return metrics.run(out);
    if (*sy) return synth.run(out);
    if (*tr) return train.run(out);
    if (*ev) return eval.run(out);
  } catch (const ParseError& e) {
    err << "error: " << e.what();
    if (e.line() > 0) err << " (line " << e.line() << ")";
    err << '\n';
    return kExitParse;
  } catch (const TrainingError& e) {
    err << "error: training failed at epoch " << e.epoch() << ": " << e.what() << '\n';
    return kExitTrainingFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitParse;
}

}  // namespace blinkflow::cli
