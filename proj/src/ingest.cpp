#include "blinkflow/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "blinkflow/error.hpp"
#include "blinkflow/format.hpp"

namespace blinkflow {

namespace {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

// Shared row validation for every reader: finite values, t >= 0, strictly
// increasing timestamps. Ordering violations are reported separately from
// malformed rows.
void append_checked(std::vector<Sample>& samples, Sample s, std::size_t line) {
  if (!std::isfinite(s.t) || !std::isfinite(s.v)) throw ParseError(line, "non-finite value");
  if (s.t < 0.0) throw ParseError(line, "negative timestamp");
  if (!samples.empty() && !(s.t > samples.back().t)) {
    fail(ErrorKind::Ordering, "line " + std::to_string(line) + ": timestamp " +
                                  format_number(s.t) + " does not increase");
  }
  samples.push_back(s);
}

BlinkSeries finish(std::vector<Sample> samples, std::string subject, std::string block) {
  if (samples.size() < 2) throw ParseError(0, "series needs at least 2 samples");
  return BlinkSeries(std::move(samples), std::move(subject), std::move(block));
}

}  // namespace

double eye_aspect_ratio(const EyeLandmarks& lm, double eps) {
  for (const auto& p : lm.p) {
    if (!finite(p)) fail(ErrorKind::InvalidInput, "landmark coordinates must be finite");
  }
  if (!(eps > 0.0)) fail(ErrorKind::InvalidInput, "eps must be positive");
  const double w = distance(lm[1], lm[4]);
  if (!(w > 0.0)) fail(ErrorKind::InvalidInput, "eye corners coincide");
  const double h = 0.5 * (distance(lm[2], lm[6]) + distance(lm[3], lm[5]));
  return w / std::max(h, eps);
}

BlinkSeries::BlinkSeries(std::vector<Sample> samples, std::string subject_id,
                         std::string block_id)
    : samples_(std::move(samples)),
      subject_id_(std::move(subject_id)),
      block_id_(std::move(block_id)) {
  if (samples_.size() < 2) fail(ErrorKind::InvalidInput, "series needs at least 2 samples");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.t) || !std::isfinite(s.v) || s.t < 0.0) {
      fail(ErrorKind::InvalidInput, "sample " + std::to_string(i) + " is not finite/non-negative");
    }
    if (i > 0 && !(s.t > samples_[i - 1].t)) {
      fail(ErrorKind::Ordering, "timestamps must be strictly increasing at sample " +
                                    std::to_string(i));
    }
  }
}

double BlinkSeries::nominal_spacing() const {
  std::vector<double> dt(samples_.size() - 1);
  for (std::size_t i = 1; i < samples_.size(); ++i) dt[i - 1] = samples_[i].t - samples_[i - 1].t;
  const auto mid = dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2);
  std::nth_element(dt.begin(), mid, dt.end());
  if (dt.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(dt.begin(), mid);
  return 0.5 * (lower + upper);
}

double BlinkSeries::duration() const {
  return samples_.back().t - samples_.front().t + nominal_spacing();
}

std::vector<double> BlinkSeries::times() const {
  std::vector<double> out(samples_.size());
  std::transform(samples_.begin(), samples_.end(), out.begin(), [](const Sample& s) { return s.t; });
  return out;
}

std::vector<double> BlinkSeries::values() const {
  std::vector<double> out(samples_.size());
  std::transform(samples_.begin(), samples_.end(), out.begin(), [](const Sample& s) { return s.v; });
  return out;
}

BlinkSeries BlinkSeries::with_values(std::span<const double> values) const {
  if (values.size() != samples_.size()) fail(ErrorKind::InvalidInput, "value count mismatch");
  std::vector<Sample> out(samples_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].v = values[i];
  return BlinkSeries(std::move(out), subject_id_, block_id_);
}

BlinkSeries read_series(std::istream& in, SeriesFormat format, std::string subject_id,
                        std::string block_id) {
  std::vector<Sample> samples;
  std::string line;
  std::size_t lineno = 0;

  if (format == SeriesFormat::Csv) {
    bool header_seen = false;
    while (std::getline(in, line)) {
      ++lineno;
      const auto row = trim(line);
      if (!header_seen) {
        if (row != "t,ear") throw ParseError(lineno, "expected header 't,ear'");
        header_seen = true;
        continue;
      }
      if (row.empty()) continue;
      const auto fields = split(row, ',');
      if (fields.size() != 2) throw ParseError(lineno, "expected 2 fields");
      const auto t = parse_number(fields[0]);
      const auto v = parse_number(fields[1]);
      if (!t || !v) throw ParseError(lineno, "malformed number");
      append_checked(samples, {*t, *v}, lineno);
    }
  } else {
    while (std::getline(in, line)) {
      ++lineno;
      const auto row = trim(line);
      if (row.empty()) continue;
      const auto obj = nlohmann::json::parse(row, nullptr, false);
      if (obj.is_discarded() || !obj.is_object()) throw ParseError(lineno, "malformed JSON object");
      const auto t = obj.find("t");
      const auto v = obj.find("ear");
      if (t == obj.end() || v == obj.end() || !t->is_number() || !v->is_number()) {
        throw ParseError(lineno, "expected numeric keys 't' and 'ear'");
      }
      append_checked(samples, {t->get<double>(), v->get<double>()}, lineno);
    }
  }
  if (in.bad()) fail(ErrorKind::Io, "read failure");
  return finish(std::move(samples), std::move(subject_id), std::move(block_id));
}

void write_series(std::ostream& out, const BlinkSeries& series, SeriesFormat format) {
  if (format == SeriesFormat::Csv) {
    out << "t,ear\n";
    for (const auto& s : series.samples()) out << format_number(s.t) << ',' << format_number(s.v) << '\n';
  } else {
    for (const auto& s : series.samples()) {
      out << "{\"t\":" << format_number(s.t) << ",\"ear\":" << format_number(s.v) << "}\n";
    }
  }
  if (!out) fail(ErrorKind::Io, "write failure");
}

SeriesFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return SeriesFormat::Csv;
  if (ext == ".jsonl") return SeriesFormat::Jsonl;
  fail(ErrorKind::Configuration, "unknown series extension '" + ext + "'");
}

BlinkSeries read_series_file(const std::filesystem::path& path) {
  const auto format = format_from_path(path);
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  const auto stem = path.stem().string();
  std::string subject = stem;
  std::string block;
  if (const auto pos = stem.find("__"); pos != std::string::npos) {
    subject = stem.substr(0, pos);
    block = stem.substr(pos + 2);
  }
  return read_series(in, format, subject, block);
}

void write_series_file(const std::filesystem::path& path, const BlinkSeries& series) {
  const auto format = format_from_path(path);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_series(out, series, format);
}

BlinkSeries series_from_landmarks(std::istream& in, double eps, std::string subject_id,
                                  std::string block_id) {
  std::vector<Sample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto row = trim(line);
    if (lineno == 1) {
      if (row.substr(0, 2) != "t,") throw ParseError(lineno, "expected landmark header");
      continue;
    }
    if (row.empty()) continue;
    const auto fields = split(row, ',');
    if (fields.size() != 13) throw ParseError(lineno, "expected t plus 12 coordinates");
    std::array<double, 13> vals{};
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const auto x = parse_number(fields[k]);
      if (!x) throw ParseError(lineno, "malformed number");
      vals[k] = *x;
    }
    EyeLandmarks lm;
    for (int k = 0; k < 6; ++k) lm.p[k] = {vals[1 + 2 * k], vals[2 + 2 * k]};
    double ratio = 0.0;
    try {
      ratio = eye_aspect_ratio(lm, eps);
    } catch (const Error& e) {
      throw ParseError(lineno, e.what());
    }
    append_checked(samples, {vals[0], ratio}, lineno);
  }
  return finish(std::move(samples), std::move(subject_id), std::move(block_id));
}

}  // namespace blinkflow
