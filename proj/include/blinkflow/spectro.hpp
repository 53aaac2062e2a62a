#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "blinkflow/ingest.hpp"
#include "blinkflow/matrix.hpp"
#include "blinkflow/preprocess.hpp"

namespace blinkflow {

struct FrequencyGrid {
  std::vector<double> freqs;  // Hz, strictly increasing, uniform spacing

  std::size_t size() const { return freqs.size(); }
  double operator[](std::size_t i) const { return freqs[i]; }
  double spacing() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
  // Index of the grid point closest to f.
  std::size_t nearest(double f) const;

  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;
};

inline constexpr std::size_t kDefaultFreqCount = 93;

// n points from f_lo to f_hi inclusive. Point k is computed as
// f_lo + k * (f_hi - f_lo) / (n - 1) with the last point pinned to f_hi.
FrequencyGrid frequency_grid(double f_lo, double f_hi, std::size_t n);

// Classic Scargle power with the per-frequency phase offset tau:
//   P(f) = 1/2 [ (sum y cos w(t-tau))^2 / sum cos^2 w(t-tau)
//              + (sum y sin w(t-tau))^2 / sum sin^2 w(t-tau) ]
// with tan(2 w tau) = sum sin 2wt / sum cos 2wt. The caller removes the mean.
std::vector<double> lomb_scargle(std::span<const double> t, std::span<const double> y,
                                 const FrequencyGrid& grid);

// Periodogram of the taper-weighted samples of a band-passed segment.
std::vector<double> lomb_scargle(const WindowSegment& segment, const FrequencyGrid& grid);

struct SpectrogramConfig {
  WindowConfig window;
  std::size_t n_freqs = kDefaultFreqCount;
  double detrend_width_s = 1.0;
};

struct Spectrogram {
  std::vector<double> times;  // window centers, seconds
  FrequencyGrid grid;
  Matrix power;  // times.size() x grid.size()
  bool normalized = false;
  bool degenerate = false;          // min-max on a constant matrix
  std::size_t irregular_windows = 0;  // windows that skipped the FIR stage

  std::size_t time_steps() const { return power.rows(); }
  std::size_t freq_bins() const { return power.cols(); }
};

// detrend -> slice_windows -> bandpass -> taper -> lomb_scargle, one row per window.
Spectrogram build_spectrogram(const BlinkSeries& series, const SpectrogramConfig& cfg = {});

// Joint min-max over every cell. A constant matrix maps to zeros and sets
// the degenerate flag.
Spectrogram minmax_normalize(const Spectrogram& sp);

// Header `t\f,<f1>,...`, then `<t_center>,<p1>,...` per window.
void write_spectrogram_csv(std::ostream& out, const Spectrogram& sp);
Spectrogram read_spectrogram_csv(std::istream& in);

// Plain P2 graymap, width = frequency bins, height = time steps. Raw
// spectrograms are normalized first.
void write_spectrogram_pgm(std::ostream& out, const Spectrogram& sp);

}  // namespace blinkflow
