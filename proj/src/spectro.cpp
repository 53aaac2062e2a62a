#include "blinkflow/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "blinkflow/error.hpp"
#include "blinkflow/format.hpp"

namespace blinkflow {

std::size_t FrequencyGrid::nearest(double f) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < freqs.size(); ++i) {
    if (std::abs(freqs[i] - f) < std::abs(freqs[best] - f)) best = i;
  }
  return best;
}

FrequencyGrid frequency_grid(double f_lo, double f_hi, std::size_t n) {
  if (!(f_lo < f_hi) || !std::isfinite(f_lo) || !std::isfinite(f_hi)) {
    fail(ErrorKind::Configuration, "frequency grid needs f_lo < f_hi");
  }
  if (n < 2) fail(ErrorKind::Configuration, "frequency grid needs at least 2 points");
  FrequencyGrid grid;
  grid.freqs.resize(n);
  const double df = (f_hi - f_lo) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) grid.freqs[k] = f_lo + static_cast<double>(k) * df;
  grid.freqs.back() = f_hi;
  return grid;
}

std::vector<double> lomb_scargle(std::span<const double> t, std::span<const double> y,
                                 const FrequencyGrid& grid) {
  if (t.size() != y.size()) fail(ErrorKind::InvalidInput, "t and y lengths differ");
  if (t.size() < 4) fail(ErrorKind::InsufficientData, "periodogram needs at least 4 samples");
  const std::size_t n = t.size();
  const double floor = 1e-12 * static_cast<double>(n);
  std::vector<double> cw(n);
  std::vector<double> sw(n);
  std::vector<double> power(grid.size());

  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double omega = 2.0 * std::numbers::pi * grid[k];
    double s2 = 0.0;
    double c2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cw[i] = std::cos(omega * t[i]);
      sw[i] = std::sin(omega * t[i]);
      s2 += 2.0 * sw[i] * cw[i];
      c2 += cw[i] * cw[i] - sw[i] * sw[i];
    }
    const double phase = 0.5 * std::atan2(s2, c2);  // omega * tau
    const double cp = std::cos(phase);
    const double sp = std::sin(phase);
    double yc = 0.0;
    double ys = 0.0;
    double cc = 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = cw[i] * cp + sw[i] * sp;  // cos w(t - tau)
      const double s = sw[i] * cp - cw[i] * sp;  // sin w(t - tau)
      yc += y[i] * c;
      ys += y[i] * s;
      cc += c * c;
      ss += s * s;
    }
    if (!(cc > floor) || !(ss > floor)) {
      fail(ErrorKind::NumericalDegeneracy,
           "periodogram denominator vanishes at " + format_number(grid[k]) + " Hz");
    }
    power[k] = 0.5 * (yc * yc / cc + ys * ys / ss);
  }
  return power;
}

std::vector<double> lomb_scargle(const WindowSegment& segment, const FrequencyGrid& grid) {
  const auto y = segment.tapered();
  return lomb_scargle(segment.t, y, grid);
}

Spectrogram build_spectrogram(const BlinkSeries& series, const SpectrogramConfig& cfg) {
  cfg.window.validate();
  Spectrogram sp;
  sp.grid = frequency_grid(cfg.window.f_lo, cfg.window.f_hi, cfg.n_freqs);
  const auto clean = detrend(series, cfg.detrend_width_s);
  const auto windows = slice_windows(clean, cfg.window);
  sp.power = Matrix(windows.size(), sp.grid.size());
  sp.times.reserve(windows.size());
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto filtered = bandpass(windows[w], cfg.window);
    if (!filtered.fir_filtered) ++sp.irregular_windows;
    const auto row = lomb_scargle(filtered, sp.grid);
    std::copy(row.begin(), row.end(), sp.power.row(w).begin());
    sp.times.push_back(windows[w].t_center);
  }
  return sp;
}

Spectrogram minmax_normalize(const Spectrogram& sp) {
  if (sp.normalized) fail(ErrorKind::InvalidInput, "spectrogram is already normalized");
  Spectrogram out = sp;
  out.normalized = true;
  auto& cells = out.power.data();
  if (cells.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(cells.begin(), cells.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(cells.begin(), cells.end(), 0.0);
    out.degenerate = true;
    return out;
  }
  const double range = hi - lo;
  for (auto& x : cells) x = std::clamp((x - lo) / range, 0.0, 1.0);
  return out;
}

void write_spectrogram_csv(std::ostream& out, const Spectrogram& sp) {
  out << "t\\f";
  for (double f : sp.grid.freqs) out << ',' << format_number(f);
  out << '\n';
  for (std::size_t i = 0; i < sp.time_steps(); ++i) {
    out << format_number(sp.times[i]);
    for (double p : sp.power.row(i)) out << ',' << format_number(p);
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "spectrogram write failure");
}

Spectrogram read_spectrogram_csv(std::istream& in) {
  const auto parse_row = [](std::string_view line, std::size_t lineno, bool header) {
    std::vector<double> vals;
    std::size_t start = 0;
    bool first = true;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i != line.size() && line[i] != ',') continue;
      const auto field = line.substr(start, i - start);
      start = i + 1;
      if (first && header) {
        if (trim(field) != "t\\f") throw ParseError(lineno, "expected 't\\f' header cell");
      } else {
        const auto v = parse_number(field);
        if (!v) throw ParseError(lineno, "malformed number");
        vals.push_back(*v);
      }
      first = false;
    }
    return vals;
  };

  Spectrogram sp;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    const auto row = trim(line);
    if (row.empty()) continue;
    if (lineno == 1) {
      sp.grid.freqs = parse_row(row, lineno, true);
      if (sp.grid.size() < 1) throw ParseError(lineno, "no frequency columns");
      continue;
    }
    auto vals = parse_row(row, lineno, false);
    if (vals.size() != sp.grid.size() + 1) throw ParseError(lineno, "column count mismatch");
    sp.times.push_back(vals.front());
    vals.erase(vals.begin());
    rows.push_back(std::move(vals));
  }
  if (sp.grid.freqs.empty()) throw ParseError(0, "empty spectrogram file");
  sp.power = Matrix(rows.size(), sp.grid.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), sp.power.row(i).begin());
  }
  return sp;
}

void write_spectrogram_pgm(std::ostream& out, const Spectrogram& sp) {
  const Spectrogram img = sp.normalized ? sp : minmax_normalize(sp);
  out << "P2\n" << img.freq_bins() << ' ' << img.time_steps() << "\n255\n";
  for (std::size_t i = 0; i < img.time_steps(); ++i) {
    const auto row = img.power.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ' ';
      out << std::lround(255.0 * std::clamp(row[j], 0.0, 1.0));
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "PGM write failure");
}

}  // namespace blinkflow
