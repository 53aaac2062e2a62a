#include "blinkflow/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "blinkflow/error.hpp"

namespace blinkflow {

namespace {

// Relative slack for boundary comparisons on accumulated decimal timestamps.
constexpr double kTimeSlack = 1e-9;

double median_spacing(const std::vector<double>& t) {
  std::vector<double> dt(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) dt[i - 1] = t[i] - t[i - 1];
  std::sort(dt.begin(), dt.end());
  const std::size_t n = dt.size();
  return n % 2 ? dt[n / 2] : 0.5 * (dt[n / 2 - 1] + dt[n / 2]);
}

// Mirror reflection about the end samples, repeated as often as needed so
// kernels longer than the segment still see a bounded signal.
double extended(const std::vector<double>& x, std::ptrdiff_t k) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (k < 0) return extended(x, -k);
  if (k >= n) return extended(x, 2 * (n - 1) - k);
  return x[static_cast<std::size_t>(k)];
}

void remove_weighted_mean(WindowSegment& seg) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    num += seg.weights[i] * seg.v[i];
    den += seg.weights[i];
  }
  const double mean = num / den;
  for (auto& v : seg.v) v -= mean;
}

}  // namespace

void WindowConfig::validate() const {
  if (!(win_len_s > 0.0)) fail(ErrorKind::Configuration, "window length must be positive");
  if (!(step_s > 0.0) || step_s > win_len_s) {
    fail(ErrorKind::Configuration, "step must satisfy 0 < step <= window length");
  }
  if (!(sigma() > 0.0)) fail(ErrorKind::Configuration, "Gaussian sigma must be positive");
  if (!(f_lo > 0.0) || !(f_lo < f_hi)) {
    fail(ErrorKind::Configuration, "band edges must satisfy 0 < f_lo < f_hi");
  }
}

std::vector<double> WindowSegment::tapered() const {
  std::vector<double> y(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) y[i] = v[i] * weights[i];
  return y;
}

BlinkSeries moving_average(const BlinkSeries& series, double width_s) {
  if (!(width_s > 0.0)) fail(ErrorKind::Configuration, "moving-average width must be positive");
  const auto s = series.samples();
  const double half = 0.5 * width_s;
  std::vector<double> out(s.size());
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double slack = kTimeSlack * std::max(1.0, std::abs(s[i].t));
    while (s[i].t - s[lo].t > half + slack) ++lo;
    if (hi < i) hi = i;
    while (hi + 1 < s.size() && s[hi + 1].t - s[i].t <= half + slack) ++hi;
    // Direct summation keeps constant inputs exact.
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += s[j].v;
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return series.with_values(out);
}

BlinkSeries detrend(const BlinkSeries& series, double width_s) {
  const auto smooth = moving_average(series, width_s);
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = series[i].v - smooth[i].v;
  return series.with_values(out);
}

std::size_t window_count(double duration_s, const WindowConfig& cfg) {
  const double slack = kTimeSlack * std::max(1.0, duration_s);
  if (duration_s + slack < cfg.win_len_s) return 0;
  const double k = std::floor((duration_s - cfg.win_len_s + slack) / cfg.step_s);
  return static_cast<std::size_t>(std::max(0.0, k)) + 1;
}

double gaussian_weight(double t_rel, const WindowConfig& cfg) {
  const double d = t_rel - 0.5 * cfg.win_len_s;
  const double sigma = cfg.sigma();
  return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

std::vector<WindowSegment> slice_windows(const BlinkSeries& series, const WindowConfig& cfg) {
  cfg.validate();
  const std::size_t count = window_count(series.duration(), cfg);
  if (count == 0) {
    fail(ErrorKind::InsufficientData, "series shorter than one " +
                                          std::to_string(cfg.win_len_s) + " s window");
  }
  const auto s = series.samples();
  const double t0 = series.start_time();
  const double slack = kTimeSlack * std::max(1.0, cfg.win_len_s);

  std::vector<WindowSegment> out(count);
  std::size_t first = 0;
  for (std::size_t k = 0; k < count; ++k) {
    auto& seg = out[k];
    seg.t_start = t0 + static_cast<double>(k) * cfg.step_s;
    seg.t_center = seg.t_start + 0.5 * cfg.win_len_s;
    while (first < s.size() && s[first].t - seg.t_start < -slack) ++first;
    for (std::size_t i = first; i < s.size(); ++i) {
      const double rel = s[i].t - seg.t_start;
      if (rel >= cfg.win_len_s - slack) break;
      seg.t.push_back(std::max(rel, 0.0));
      seg.v.push_back(s[i].v);
      seg.weights.push_back(gaussian_weight(seg.t.back(), cfg));
    }
    seg.uniform = seg.size() >= 2 && is_uniform(seg.t);
  }
  return out;
}

bool is_uniform(const std::vector<double>& t, double tolerance) {
  if (t.size() < 2) return false;
  const double dt = median_spacing(t);
  if (!(dt > 0.0)) return false;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > tolerance * dt) return false;
  }
  return true;
}

std::vector<double> bandpass_kernel(const WindowConfig& cfg, double fs) {
  cfg.validate();
  const double nyquist = 0.5 * fs;
  if (!(cfg.f_hi < nyquist)) fail(ErrorKind::Configuration, "f_hi must lie below Nyquist");
  const double transition = cfg.f_lo;
  // Hamming main-lobe transition is about 3.3 / N cycles per sample.
  auto taps = static_cast<std::size_t>(std::ceil(3.3 * fs / transition));
  taps |= 1U;
  const double lo = (cfg.f_lo - 0.5 * transition) / fs;
  const double hi = std::min(cfg.f_hi + 0.5 * transition, 0.5 * (cfg.f_hi + nyquist)) / fs;
  const auto half = static_cast<std::ptrdiff_t>(taps / 2);

  const auto lowpass = [](double fc, double m) {
    if (m == 0.0) return 2.0 * fc;
    const double x = 2.0 * std::numbers::pi * fc * m;
    return std::sin(x) / (std::numbers::pi * m);
  };
  std::vector<double> h(taps);
  for (std::ptrdiff_t n = -half; n <= half; ++n) {
    const double m = static_cast<double>(n);
    const double window =
        0.54 + 0.46 * std::cos(std::numbers::pi * m / static_cast<double>(half));
    h[static_cast<std::size_t>(n + half)] = (lowpass(hi, m) - lowpass(lo, m)) * window;
  }
  return h;
}

WindowSegment bandpass(const WindowSegment& segment, const WindowConfig& cfg) {
  WindowSegment out = segment;
  out.fir_filtered = false;
  if (segment.size() >= 2 && segment.uniform) {
    const double fs = 1.0 / median_spacing(segment.t);
    const auto h = bandpass_kernel(cfg, fs);
    const auto half = static_cast<std::ptrdiff_t>(h.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(segment.size());
    // Pre-extend once so the convolution loop is branch free.
    std::vector<double> ext(static_cast<std::size_t>(n + 2 * half));
    for (std::ptrdiff_t k = -half; k < n + half; ++k) {
      ext[static_cast<std::size_t>(k + half)] = extended(segment.v, k);
    }
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      double acc = 0.0;
      const double* x = ext.data() + i;
      for (std::size_t k = 0; k < h.size(); ++k) acc += h[k] * x[h.size() - 1 - k];
      out.v[static_cast<std::size_t>(i)] = acc;
    }
    out.fir_filtered = true;
  }
  remove_weighted_mean(out);
  return out;
}

}  // namespace blinkflow
