#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blinkflow/ingest.hpp"
#include "blinkflow/learn/dataset.hpp"
#include "blinkflow/metrics.hpp"

namespace blinkflow::synth {

struct SynthConfig {
  double duration_s = 260.0;
  double fs = 10.0;
  double blink_rate_bpm = 12.0;
  double rate_jitter = 0.0;     // coefficient of variation of inter-blink intervals
  double blink_dur_s = 0.3;
  double onset_fraction = 1.0 / 3.0;  // rise share of the pulse; 1:2 onset:offset
  double blink_amp = 1.0;
  double baseline = 1.0;
  double noise_sigma = 0.0;
  double drift_amp = 0.0;
  double drift_period_s = 60.0;
  double dropout_frac = 0.0;
  double timestamp_jitter_s = 0.0;  // uniform +- jitter on each timestamp
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct GroundTruth {
  std::vector<BlinkEvent> events;
  double nominal_rate_bpm = 0.0;
  std::size_t class_id = 0;
};

// Gamma inter-blink intervals (mean 60 / rate, CV = rate_jitter; exactly
// periodic at zero jitter) of asymmetric raised-cosine pulses on a unit
// baseline, plus drift, Gaussian noise, timestamp jitter and dropout.
std::pair<BlinkSeries, GroundTruth> generate(const SynthConfig& cfg, std::string subject_id = {},
                                             std::string block_id = {});

struct ClassTemplate {
  std::string name;
  SynthConfig config;
  double perceived_difficulty_mean = 5.0;  // 0-10
  double correct_rate_mean = 0.75;         // [0, 1]
};

// Named presets: periodic, irregular, slow, fast, baseline, easy, hard.
ClassTemplate class_preset(const std::string& name);

struct CohortConfig {
  std::size_t n_subjects = 12;
  std::vector<ClassTemplate> classes;
  std::size_t blocks_per_class = 1;
  double rate_perturbation = 0.10;  // per-subject uniform +- fraction of the rate
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct CohortMember {
  BlinkSeries series;
  std::string class_name;
  learn::AuxScalars aux;
  GroundTruth truth;
  std::uint64_t seed = 0;
};

// Raw series of every subject x class x block, in that nesting order.
std::vector<CohortMember> generate_members(const CohortConfig& cfg);

struct Cohort {
  std::vector<learn::BlockRecord> blocks;
  std::vector<GroundTruth> truths;
  std::vector<std::string> class_order;
};

// Runs the full pipeline on every member.
Cohort make_cohort(const CohortConfig& cfg, const learn::PipelineConfig& pipeline = {});

Cohort prepare_members(const std::vector<CohortMember>& members,
                       const std::vector<std::string>& class_order,
                       const learn::PipelineConfig& pipeline = {});

// Directory of `<subject>__<block>.csv` files plus manifest.json.
void export_cohort(const std::filesystem::path& dir, const CohortConfig& cfg,
                   const std::vector<CohortMember>& members);

struct ManifestEntry {
  std::filesystem::path file;
  std::string subject;
  std::string block;
  std::string class_name;
  learn::AuxScalars aux;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_order;
  nlohmann::json raw;
};

// Entry paths are resolved against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& manifest_path);

}  // namespace blinkflow::synth
