#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace blinkflow {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Six-landmark eye model: p1/p4 are the horizontal corners, p2/p3 the upper
// lid and p5/p6 the lower lid. p2 pairs with p6 and p3 with p5.
struct EyeLandmarks {
  std::array<Point2, 6> p{};

  const Point2& operator[](int index_1based) const { return p[index_1based - 1]; }
  Point2& operator[](int index_1based) { return p[index_1based - 1]; }
};

inline constexpr double kDefaultEarEps = 1e-6;

// Width over height, so a closing eye produces an upward peak. The height is
// the mean of the two vertical landmark distances, clamped below by eps.
double eye_aspect_ratio(const EyeLandmarks& lm, double eps = kDefaultEarEps);

struct Sample {
  double t = 0.0;  // seconds since stream start
  double v = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Ordered ratio timeseries of one measurement block. Construction enforces
// at least two samples, finite values and strictly increasing timestamps.
class BlinkSeries {
 public:
  BlinkSeries(std::vector<Sample> samples, std::string subject_id = {},
              std::string block_id = {});

  std::span<const Sample> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  const std::string& subject_id() const { return subject_id_; }
  const std::string& block_id() const { return block_id_; }

  // Median spacing between consecutive samples.
  double nominal_spacing() const;
  // Observed span plus one nominal sample period, so N samples at rate fs
  // cover N / fs seconds.
  double duration() const;
  double start_time() const { return samples_.front().t; }

  std::vector<double> times() const;
  std::vector<double> values() const;

  // Same timestamps and ids, new values.
  BlinkSeries with_values(std::span<const double> values) const;

  friend bool operator==(const BlinkSeries&, const BlinkSeries&) = default;

 private:
  std::vector<Sample> samples_;
  std::string subject_id_;
  std::string block_id_;
};

enum class SeriesFormat { Csv, Jsonl };

BlinkSeries read_series(std::istream& in, SeriesFormat format, std::string subject_id = {},
                        std::string block_id = {});
void write_series(std::ostream& out, const BlinkSeries& series, SeriesFormat format);

// Format from the extension (.csv / .jsonl); ids from `<subject>__<block>.<ext>`.
BlinkSeries read_series_file(const std::filesystem::path& path);
void write_series_file(const std::filesystem::path& path, const BlinkSeries& series);

SeriesFormat format_from_path(const std::filesystem::path& path);

// Landmark table: header `t,p1x,p1y,...,p6x,p6y`, one frame per line.
BlinkSeries series_from_landmarks(std::istream& in, double eps = kDefaultEarEps,
                                  std::string subject_id = {}, std::string block_id = {});

}  // namespace blinkflow
