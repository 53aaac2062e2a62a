#include "blinkflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include "blinkflow/error.hpp"
#include "blinkflow/random.hpp"

namespace blinkflow::synth {

namespace {

enum Stream : std::uint64_t { kIntervals = 1, kNoise, kJitter, kDropout, kSubject, kAux, kMember };

double pulse(double t, double onset, const SynthConfig& cfg) {
  const double rise = cfg.blink_dur_s * cfg.onset_fraction;
  const double fall = cfg.blink_dur_s - rise;
  const double u = t - onset;
  if (u <= 0.0 || u >= cfg.blink_dur_s) return 0.0;
  if (u < rise) return 0.5 * (1.0 - std::cos(std::numbers::pi * u / rise));
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (u - rise) / fall));
}

std::string subject_name(std::size_t index, std::size_t count) {
  const int width = count >= 100 ? 3 : 2;
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%0*zu", width, index + 1);
  return buf;
}

nlohmann::json aux_json(const learn::AuxScalars& aux) {
  nlohmann::json j = nlohmann::json::object();
  if (aux.perceived_difficulty) j["perceived_difficulty"] = *aux.perceived_difficulty;
  if (aux.correct_rate) j["correct_rate"] = *aux.correct_rate;
  return j;
}

}  // namespace

void SynthConfig::validate() const {
  if (!(duration_s > 0.0) || !(fs > 0.0)) fail(ErrorKind::Configuration, "duration and fs must be positive");
  if (!(fs > 2.0 * 25.0 / 60.0)) fail(ErrorKind::Configuration, "fs must exceed twice the band edge");
  if (!(blink_rate_bpm > 0.0)) fail(ErrorKind::Configuration, "blink rate must be positive");
  if (!(rate_jitter >= 0.0 && rate_jitter <= 1.0)) fail(ErrorKind::Configuration, "rate_jitter must lie in [0, 1]");
  if (!(blink_dur_s > 0.0)) fail(ErrorKind::Configuration, "blink duration must be positive");
  if (!(onset_fraction > 0.0 && onset_fraction < 1.0)) {
    fail(ErrorKind::Configuration, "onset_fraction must lie in (0, 1)");
  }
  if (!(dropout_frac >= 0.0 && dropout_frac < 0.5)) fail(ErrorKind::Configuration, "dropout_frac must lie in [0, 0.5)");
  if (!(noise_sigma >= 0.0) || !(drift_period_s > 0.0)) fail(ErrorKind::Configuration, "invalid noise/drift");
  if (!(timestamp_jitter_s >= 0.0 && timestamp_jitter_s < 0.5 / fs)) {
    fail(ErrorKind::Configuration, "timestamp jitter must stay below half a sample period");
  }
}

nlohmann::json SynthConfig::to_json() const {
  return {{"duration_s", duration_s},         {"fs", fs},
          {"blink_rate_bpm", blink_rate_bpm}, {"rate_jitter", rate_jitter},
          {"blink_dur_s", blink_dur_s},       {"onset_fraction", onset_fraction},
          {"blink_amp", blink_amp},           {"baseline", baseline},
          {"noise_sigma", noise_sigma},       {"drift_amp", drift_amp},
          {"drift_period_s", drift_period_s}, {"dropout_frac", dropout_frac},
          {"timestamp_jitter_s", timestamp_jitter_s}, {"seed", seed}};
}

std::pair<BlinkSeries, GroundTruth> generate(const SynthConfig& cfg, std::string subject_id,
                                             std::string block_id) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.fs));
  if (n < 2) fail(ErrorKind::Configuration, "synthetic series would have fewer than 2 samples");
  const double last_t = static_cast<double>(n - 1) / cfg.fs;

  GroundTruth truth;
  truth.nominal_rate_bpm = cfg.blink_rate_bpm;
  {
    auto rng = make_rng(cfg.seed, kIntervals);
    const double mean = 60.0 / cfg.blink_rate_bpm;
    const double cv2 = cfg.rate_jitter * cfg.rate_jitter;
    std::gamma_distribution<double> gamma(cv2 > 0.0 ? 1.0 / cv2 : 1.0, mean * cv2);
    const auto interval = [&] {
      if (cv2 == 0.0) return mean;
      // Overlapping pulses would merge into one blink.
      return std::max(gamma(rng), 2.0 * cfg.blink_dur_s);
    };
    double center = 0.5 * interval();
    while (true) {
      const double onset = center - 0.5 * cfg.blink_dur_s;
      if (onset + cfg.blink_dur_s > last_t) break;
      truth.events.push_back({onset, onset + cfg.blink_dur_s});
      center += interval();
    }
  }

  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k) / cfg.fs;
  if (cfg.timestamp_jitter_s > 0.0) {
    auto rng = make_rng(cfg.seed, kJitter);
    std::uniform_real_distribution<double> jit(-cfg.timestamp_jitter_s, cfg.timestamp_jitter_s);
    for (auto& x : t) x = std::max(0.0, x + jit(rng));
  }

  std::vector<bool> keep(n, true);
  const auto drop = static_cast<std::size_t>(std::llround(cfg.dropout_frac * static_cast<double>(n)));
  if (drop > 0 && n > 2) {
    auto rng = make_rng(cfg.seed, kDropout);
    std::vector<std::size_t> interior(n - 2);
    std::iota(interior.begin(), interior.end(), 1);
    std::shuffle(interior.begin(), interior.end(), rng);
    for (std::size_t k = 0; k < std::min(drop, interior.size()); ++k) keep[interior[k]] = false;
  }

  auto noise_rng = make_rng(cfg.seed, kNoise);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Sample> samples;
  samples.reserve(n);
  std::size_t ev = 0;
  for (std::size_t k = 0; k < n; ++k) {
    // Draw noise for every slot so dropout does not shift the noise stream.
    const double eps = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * noise(noise_rng) : 0.0;
    if (!keep[k]) continue;
    const double tk = t[k];
    while (ev < truth.events.size() && truth.events[ev].offset_t <= tk) ++ev;
    double v = cfg.baseline + eps;
    if (cfg.drift_amp != 0.0) v += cfg.drift_amp * std::sin(2.0 * std::numbers::pi * tk / cfg.drift_period_s);
    if (ev < truth.events.size()) v += cfg.blink_amp * pulse(tk, truth.events[ev].onset_t, cfg);
    samples.push_back({tk, v});
  }
  return {BlinkSeries(std::move(samples), std::move(subject_id), std::move(block_id)), truth};
}

ClassTemplate class_preset(const std::string& name) {
  ClassTemplate c;
  c.name = name;
  c.config.noise_sigma = 0.02;
  c.config.drift_amp = 0.05;
  if (name == "periodic") {
    c.config.blink_rate_bpm = 10.0;
    c.config.rate_jitter = 0.05;
    c.perceived_difficulty_mean = 3.0;
    c.correct_rate_mean = 0.85;
  } else if (name == "irregular") {
    c.config.blink_rate_bpm = 10.0;
    c.config.rate_jitter = 0.6;
    c.perceived_difficulty_mean = 7.0;
    c.correct_rate_mean = 0.55;
  } else if (name == "slow") {
    c.config.blink_rate_bpm = 4.0;
    c.config.rate_jitter = 0.05;
  } else if (name == "fast") {
    c.config.blink_rate_bpm = 20.0;
    c.config.rate_jitter = 0.05;
  } else if (name == "baseline") {
    c.config.blink_rate_bpm = 15.0;
    c.config.rate_jitter = 0.6;
    c.perceived_difficulty_mean = 0.5;
    c.correct_rate_mean = 1.0;
  } else if (name == "easy") {
    c.config.blink_rate_bpm = 12.0;
    c.config.rate_jitter = 0.3;
    c.perceived_difficulty_mean = 2.0;
    c.correct_rate_mean = 0.9;
  } else if (name == "hard") {
    c.config.blink_rate_bpm = 10.0;
    c.config.rate_jitter = 0.1;
    c.perceived_difficulty_mean = 6.0;
    c.correct_rate_mean = 0.6;
  } else {
    fail(ErrorKind::Configuration, "unknown class preset '" + name + "'");
  }
  return c;
}

void CohortConfig::validate() const {
  if (n_subjects < 2) fail(ErrorKind::Configuration, "a cohort needs at least 2 subjects for LOSO");
  if (classes.size() < 2) fail(ErrorKind::Configuration, "a cohort needs at least 2 classes");
  if (blocks_per_class < 1) fail(ErrorKind::Configuration, "blocks_per_class must be at least 1");
  if (!(rate_perturbation >= 0.0 && rate_perturbation < 1.0)) {
    fail(ErrorKind::Configuration, "rate_perturbation must lie in [0, 1)");
  }
  for (const auto& c : classes) c.config.validate();
}

nlohmann::json CohortConfig::to_json() const {
  nlohmann::json cls = nlohmann::json::array();
  for (const auto& c : classes) {
    cls.push_back({{"name", c.name},
                   {"synth", c.config.to_json()},
                   {"perceived_difficulty_mean", c.perceived_difficulty_mean},
                   {"correct_rate_mean", c.correct_rate_mean}});
  }
  return {{"n_subjects", n_subjects},
          {"blocks_per_class", blocks_per_class},
          {"rate_perturbation", rate_perturbation},
          {"seed", seed},
          {"classes", cls}};
}

std::vector<CohortMember> generate_members(const CohortConfig& cfg) {
  cfg.validate();
  std::vector<CohortMember> members;
  for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
    const auto subject = subject_name(s, cfg.n_subjects);
    auto subject_rng = make_rng(derive_seed(cfg.seed, kSubject), s);
    for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
      const auto& tmpl = cfg.classes[c];
      std::uniform_real_distribution<double> perturb(1.0 - cfg.rate_perturbation,
                                                     1.0 + cfg.rate_perturbation);
      const double rate = tmpl.config.blink_rate_bpm * perturb(subject_rng);
      for (std::size_t b = 0; b < cfg.blocks_per_class; ++b) {
        const std::uint64_t key = (s * cfg.classes.size() + c) * cfg.blocks_per_class + b;
        SynthConfig sc = tmpl.config;
        sc.blink_rate_bpm = rate;
        sc.seed = derive_seed(derive_seed(cfg.seed, kMember), key);
        const std::string block =
            cfg.blocks_per_class == 1 ? tmpl.name : tmpl.name + "-" + std::to_string(b + 1);
        auto [series, truth] = generate(sc, subject, block);
        truth.class_id = c;

        auto aux_rng = make_rng(derive_seed(cfg.seed, kAux), key);
        std::normal_distribution<double> unit(0.0, 1.0);
        learn::AuxScalars aux;
        aux.perceived_difficulty = std::clamp(tmpl.perceived_difficulty_mean + unit(aux_rng), 0.0, 10.0);
        aux.correct_rate = std::clamp(tmpl.correct_rate_mean + 0.05 * unit(aux_rng), 0.0, 1.0);
        members.push_back({std::move(series), tmpl.name, aux, std::move(truth), sc.seed});
      }
    }
  }
  return members;
}

Cohort prepare_members(const std::vector<CohortMember>& members,
                       const std::vector<std::string>& class_order,
                       const learn::PipelineConfig& pipeline) {
  Cohort cohort;
  cohort.class_order = class_order;
  for (const auto& m : members) {
    cohort.blocks.push_back(learn::prepare_block(m.series, pipeline, m.class_name, m.aux));
    cohort.truths.push_back(m.truth);
  }
  return cohort;
}

Cohort make_cohort(const CohortConfig& cfg, const learn::PipelineConfig& pipeline) {
  std::vector<std::string> order;
  for (const auto& c : cfg.classes) order.push_back(c.name);
  return prepare_members(generate_members(cfg), order, pipeline);
}

void export_cohort(const std::filesystem::path& dir, const CohortConfig& cfg,
                   const std::vector<CohortMember>& members) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json blocks = nlohmann::json::array();
  std::vector<std::string> names;
  for (const auto& c : cfg.classes) names.push_back(c.name);
  for (const auto& m : members) {
    const std::string file = m.series.subject_id() + "__" + m.series.block_id() + ".csv";
    write_series_file(dir / file, m.series);
    blocks.push_back({{"file", file},
                      {"subject", m.series.subject_id()},
                      {"block", m.series.block_id()},
                      {"class", m.class_name},
                      {"class_id", m.truth.class_id},
                      {"aux", aux_json(m.aux)},
                      {"seed", m.seed},
                      {"ground_truth_blinks", m.truth.events.size()}});
  }
  const nlohmann::json manifest = {{"format_version", 1},
                                   {"seed", cfg.seed},
                                   {"config", cfg.to_json()},
                                   {"classes", names},
                                   {"blocks", blocks}};
  std::ofstream out(dir / "manifest.json");
  if (!out) fail(ErrorKind::Io, "cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "manifest write failure");
}

Manifest read_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorKind::Io, "cannot open " + manifest_path.string());
  Manifest m;
  m.raw = nlohmann::json::parse(in, nullptr, false);
  if (m.raw.is_discarded() || !m.raw.is_object()) throw ParseError(0, "manifest is not a JSON object");
  const auto base = manifest_path.parent_path();
  try {
    if (m.raw.contains("classes")) m.class_order = m.raw["classes"].get<std::vector<std::string>>();
    for (const auto& b : m.raw.at("blocks")) {
      ManifestEntry e;
      e.file = base / b.at("file").get<std::string>();
      e.subject = b.at("subject").get<std::string>();
      e.block = b.value("block", std::string{});
      e.class_name = b.value("class", e.block);
      if (b.contains("aux")) {
        const auto& aux = b["aux"];
        if (aux.contains("perceived_difficulty")) e.aux.perceived_difficulty = aux["perceived_difficulty"].get<double>();
        if (aux.contains("correct_rate")) e.aux.correct_rate = aux["correct_rate"].get<double>();
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

}  // namespace blinkflow::synth
