#include "blinkflow/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "blinkflow/error.hpp"
#include "blinkflow/preprocess.hpp"

namespace blinkflow {

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void DetectorConfig::validate() const {
  if (!(threshold_scale > 0.0)) fail(ErrorKind::Configuration, "threshold_scale must be positive");
  if (!(hysteresis_frac > 0.0 && hysteresis_frac < 1.0)) {
    fail(ErrorKind::Configuration, "hysteresis_frac must lie in (0, 1)");
  }
  if (!(min_gap_s >= 0.0)) fail(ErrorKind::Configuration, "min_gap_s must be non-negative");
}

double robust_spread(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double med = median_of({values.begin(), values.end()});
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - med);
  const double mad = median_of(dev);
  if (mad > 0.0) return mad;
  double sum = 0.0;
  for (double d : dev) sum += d;
  return sum / static_cast<double>(dev.size());
}

std::vector<BlinkEvent> detect_blinks(const BlinkSeries& detrended, const DetectorConfig& cfg) {
  cfg.validate();
  const auto s = detrended.samples();
  const auto values = detrended.values();
  const double threshold = cfg.threshold_scale * robust_spread(values);
  std::vector<BlinkEvent> raw;
  if (!(threshold > 0.0)) return raw;
  const double release = cfg.hysteresis_frac * threshold;

  bool open = false;
  BlinkEvent current;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!open && s[i].v > threshold) {
      open = true;
      current.onset_t = s[i > 0 ? i - 1 : 0].t;
    } else if (open && s[i].v < release) {
      open = false;
      current.offset_t = s[i].t;
      raw.push_back(current);
    }
  }
  if (open) {
    current.offset_t = s.back().t;
    if (current.offset_t > current.onset_t) raw.push_back(current);
  }

  std::vector<BlinkEvent> merged;
  for (const auto& e : raw) {
    if (!merged.empty() && e.onset_t - merged.back().offset_t < cfg.min_gap_s) {
      merged.back().offset_t = std::max(merged.back().offset_t, e.offset_t);
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

double blink_rate(std::span<const BlinkEvent> events, double observed_duration_s) {
  if (!(observed_duration_s > 0.0)) fail(ErrorKind::InvalidInput, "observed duration must be positive");
  return 60.0 * static_cast<double>(events.size()) / observed_duration_s;
}

DurationStat blink_duration(std::span<const BlinkEvent> events) {
  DurationStat stat;
  if (events.empty()) return stat;
  std::vector<double> d(events.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    d[i] = events[i].duration();
    sum += d[i];
  }
  stat.mean = sum / static_cast<double>(d.size());
  stat.median = median_of(std::move(d));
  stat.empty = false;
  return stat;
}

double histogram_entropy(std::span<const double> cells, std::size_t n_bins) {
  if (n_bins < 2) fail(ErrorKind::Configuration, "entropy needs at least 2 bins");
  if (cells.empty()) return 0.0;
  const auto [lo_it, hi_it] = std::minmax_element(cells.begin(), cells.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return 0.0;
  const double range = hi - lo;
  const double bins = static_cast<double>(n_bins);
  std::vector<std::size_t> counts(n_bins, 0);
  for (double x : cells) {
    auto k = static_cast<std::size_t>((x - lo) / range * bins);
    ++counts[std::min(k, n_bins - 1)];
  }
  const double total = static_cast<double>(cells.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return std::max(h, 0.0);
}

double blink_entropy(const Spectrogram& sp, std::size_t n_bins) {
  return histogram_entropy(sp.power.data(), n_bins);
}

MetricVector metric_vector(const BlinkSeries& series, const Spectrogram& sp,
                           const MetricConfig& cfg) {
  const auto clean = detrend(series, cfg.detrend_width_s);
  const auto events = detect_blinks(clean, cfg.detector);
  const auto bd = blink_duration(events);
  MetricVector m;
  m.br = blink_rate(events, series.duration());
  m.bd = bd.mean;
  m.bd_median = bd.median;
  m.be = blink_entropy(sp, cfg.entropy_bins);
  m.blink_count = events.size();
  m.no_blinks = bd.empty;
  return m;
}

}  // namespace blinkflow
