#pragma once

#include <cstddef>
#include <vector>

#include "blinkflow/ingest.hpp"
#include "blinkflow/spectro.hpp"

namespace blinkflow {

struct BlinkEvent {
  double onset_t = 0.0;
  double offset_t = 0.0;

  double duration() const { return offset_t - onset_t; }
  friend bool operator==(const BlinkEvent&, const BlinkEvent&) = default;
};

struct DetectorConfig {
  double threshold_scale = 4.0;  // multiples of the robust spread
  double hysteresis_frac = 0.5;  // release level as a fraction of the threshold
  double min_gap_s = 0.2;

  void validate() const;
};

// Median absolute deviation about the median. When more than half of the
// samples share one value the MAD is zero, and the mean absolute deviation
// about the median is used instead.
double robust_spread(std::span<const double> values);

// Hysteresis detector on a detrended series where blinks are positive peaks.
// An event spans from the last sample at or below the threshold before the
// crossing to the first sample below the release level.
std::vector<BlinkEvent> detect_blinks(const BlinkSeries& detrended, const DetectorConfig& cfg = {});

// Blinks per minute.
double blink_rate(std::span<const BlinkEvent> events, double observed_duration_s);

struct DurationStat {
  double mean = 0.0;
  double median = 0.0;
  bool empty = true;
};

// Mean (and median) event duration in seconds; zeros with `empty` set when
// there are no events.
DurationStat blink_duration(std::span<const BlinkEvent> events);

inline constexpr std::size_t kDefaultEntropyBins = 256;

// Shannon entropy in bits of the histogram of all cells, with n_bins uniform
// bins over [min, max] (top edge inclusive).
double blink_entropy(const Spectrogram& sp, std::size_t n_bins = kDefaultEntropyBins);
double histogram_entropy(std::span<const double> cells, std::size_t n_bins);

struct MetricVector {
  double br = 0.0;  // blinks per minute
  double bd = 0.0;  // mean blink duration, seconds
  double be = 0.0;  // bits
  double bd_median = 0.0;
  std::size_t blink_count = 0;
  bool no_blinks = true;
};

struct MetricConfig {
  DetectorConfig detector;
  std::size_t entropy_bins = kDefaultEntropyBins;
  double detrend_width_s = 1.0;
};

// `series` is the raw ratio series; it is detrended here with the same
// moving-average width the spectrogram uses.
MetricVector metric_vector(const BlinkSeries& series, const Spectrogram& sp,
                           const MetricConfig& cfg = {});

}  // namespace blinkflow
