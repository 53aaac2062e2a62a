#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "blinkflow/ingest.hpp"
#include "blinkflow/matrix.hpp"
#include "blinkflow/metrics.hpp"
#include "blinkflow/spectro.hpp"

namespace blinkflow::learn {

enum class Labeling { Event, Subjective, Objective };
enum class InputKind { Spectrogram, Features, Timeseries };

std::string_view to_string(Labeling labeling);
Labeling parse_labeling(std::string_view name);

struct AuxScalars {
  std::optional<double> perceived_difficulty;  // 0-10
  std::optional<double> correct_rate;          // [0, 1]
};

struct PipelineConfig {
  SpectrogramConfig spectro;
  MetricConfig metrics;
  double resample_rate_hz = 1.0;
  std::size_t resample_length = 260;
};

// Everything the classifiers may consume for one measurement block.
struct BlockRecord {
  std::string subject_id;
  std::string block_id;
  std::string class_name;  // event label; defaults to the block id
  bool is_baseline = false;
  AuxScalars aux;
  Spectrogram spectrogram;  // min-max normalized
  MetricVector metrics;
  std::vector<double> sequence;  // detrended, resampled, min-max scaled
};

BlockRecord prepare_block(const BlinkSeries& raw, const PipelineConfig& cfg,
                          std::string class_name = {}, AuxScalars aux = {});

// Linear interpolation at t0 + k / rate_hz for k < length; positions past the
// end hold the last value.
std::vector<double> resample(const BlinkSeries& series, double rate_hz, std::size_t length);

// Selection of the hand-engineered metrics used as a feature vector.
struct FeatureSet {
  bool br = true;
  bool bd = true;
  bool be = true;

  std::size_t size() const { return std::size_t{br} + std::size_t{bd} + std::size_t{be}; }
  std::vector<double> extract(const MetricVector& m) const;
  std::string name() const;
};

struct FeatureVector {
  std::vector<double> values;
};

struct Sequence {
  std::vector<double> values;
};

using InstanceInput = std::variant<Matrix, FeatureVector, Sequence>;

struct LabeledInstance {
  InstanceInput input;
  std::size_t label = 0;
  std::string subject_id;
  std::string block_id;
  AuxScalars aux;
};

struct Dataset {
  std::vector<LabeledInstance> instances;
  std::size_t n_classes = 0;
  Labeling labeling = Labeling::Event;
  std::vector<std::string> class_names;

  std::size_t size() const { return instances.size(); }
  std::vector<std::string> subjects() const;  // sorted, unique
  Dataset subset(const std::vector<std::size_t>& indices) const;
  // Throws unless there are >= 2 subjects and every class is present.
  void validate() const;
};

struct DatasetOptions {
  InputKind input = InputKind::Spectrogram;
  FeatureSet features;
  // Event class order; empty means sorted unique class names.
  std::vector<std::string> class_order;
};

// Event labeling uses the class name of every block. Subjective/objective
// labeling keeps task blocks only and splits the cohort-wide aux scalar into
// low (0) / high (1) with 1D k-means.
Dataset make_dataset(const std::vector<BlockRecord>& blocks, Labeling labeling,
                     const DatasetOptions& options = {});

struct Fold {
  std::string subject;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// One fold per subject in sorted subject order.
std::vector<Fold> loso_folds(const Dataset& ds);

}  // namespace blinkflow::learn
