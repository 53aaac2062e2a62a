#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "blinkflow/ingest.hpp"

namespace blinkflow {

// Sliding-window parameters. Frequencies are in Hz; the defaults are the
// blink band of 2 to 25 blinks per minute with a 61 s window and 1 s step.
struct WindowConfig {
  double win_len_s = 61.0;
  double step_s = 1.0;
  std::optional<double> gaussian_sigma_s;  // defaults to win_len_s / 6
  double f_lo = 2.0 / 60.0;
  double f_hi = 25.0 / 60.0;

  double sigma() const { return gaussian_sigma_s.value_or(win_len_s / 6.0); }
  // Throws a configuration error when the invariants do not hold.
  void validate() const;
};

struct WindowSegment {
  double t_start = 0.0;   // absolute seconds
  double t_center = 0.0;  // absolute seconds
  std::vector<double> t;  // relative to t_start, in [0, win_len_s)
  std::vector<double> v;
  std::vector<double> weights;  // Gaussian taper, in (0, 1]
  bool uniform = false;         // uniformly sampled within 1% jitter
  bool fir_filtered = false;    // false: only the weighted mean was removed

  std::size_t size() const { return t.size(); }
  // v * weights, the input to the periodogram.
  std::vector<double> tapered() const;
};

BlinkSeries moving_average(const BlinkSeries& series, double width_s);
BlinkSeries detrend(const BlinkSeries& series, double width_s = 1.0);

// floor((duration - win_len) / step) + 1, or 0 when the series is too short.
std::size_t window_count(double duration_s, const WindowConfig& cfg);

std::vector<WindowSegment> slice_windows(const BlinkSeries& series, const WindowConfig& cfg);

double gaussian_weight(double t_rel, const WindowConfig& cfg);

bool is_uniform(const std::vector<double>& t, double tolerance = 0.01);

// Zero-phase windowed-sinc (Hamming) band-pass kernel for sample rate fs.
// The transition width equals f_lo on both edges.
std::vector<double> bandpass_kernel(const WindowConfig& cfg, double fs);

// Uniform segments get the FIR band-pass; irregular ones only have their
// taper-weighted mean removed. Both leave sum(v * w) == 0 up to rounding.
WindowSegment bandpass(const WindowSegment& segment, const WindowConfig& cfg);

}  // namespace blinkflow
