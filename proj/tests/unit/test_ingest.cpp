#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "blinkflow/error.hpp"
#include "blinkflow/format.hpp"
#include "blinkflow/ingest.hpp"

using namespace blinkflow;

namespace {

EyeLandmarks open_eye() {
  EyeLandmarks lm;
  lm[1] = {0, 0};
  lm[4] = {4, 0};
  lm[2] = {1, 1};
  lm[6] = {1, -1};
  lm[3] = {3, 1};
  lm[5] = {3, -1};
  return lm;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidInput;
}

BlinkSeries random_series(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> gap(0.001, 0.5);
  std::normal_distribution<double> val(1.0, 3.0);
  std::vector<Sample> s;
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t += gap(rng);
    // Values already at print precision, so the round trip must be exact.
    s.push_back({*parse_number(format_number(t)), *parse_number(format_number(val(rng)))});
  }
  return BlinkSeries(s, "S1", "easy");
}

}  // namespace

TEST_CASE("ratio of a textbook open eye") {
  CHECK(eye_aspect_ratio(open_eye()) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("ratio ignores uniform scaling") {
  auto lm = open_eye();
  for (auto& p : lm.p) p = {p.x * 10, p.y * 10};
  CHECK(eye_aspect_ratio(lm) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("closed eye hits the eps clamp") {
  auto lm = open_eye();
  lm[2] = lm[6] = {1, 0};
  lm[3] = lm[5] = {3, 0};
  const double r = eye_aspect_ratio(lm, 1e-6);
  CHECK(std::isfinite(r));
  CHECK(r == doctest::Approx(4.0e6).epsilon(1e-12));
}

TEST_CASE("ratio is invariant under similarity transforms") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50, 50);
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> sc(0.05, 20);
  for (int trial = 0; trial < 200; ++trial) {
    EyeLandmarks lm;
    for (auto& p : lm.p) p = {u(rng), u(rng)};
    const double base = eye_aspect_ratio(lm);
    const double a = ang(rng), s = sc(rng), dx = u(rng), dy = u(rng);
    EyeLandmarks moved;
    for (int k = 0; k < 6; ++k) {
      const auto& p = lm.p[k];
      moved.p[k] = {s * (std::cos(a) * p.x - std::sin(a) * p.y) + dx,
                    s * (std::sin(a) * p.x + std::cos(a) * p.y) + dy};
    }
    CHECK(std::abs(eye_aspect_ratio(moved) - base) <= 1e-12 * base);
  }
}

TEST_CASE("closing the lids raises the ratio monotonically") {
  double prev = 0.0;
  for (double h = 1.0; h > 0.0; h -= 0.05) {
    auto lm = open_eye();
    lm[2] = {1, h};
    lm[6] = {1, -h};
    lm[3] = {3, h};
    lm[5] = {3, -h};
    const double r = eye_aspect_ratio(lm);
    CHECK(r > prev);
    prev = r;
  }
}

TEST_CASE("non-finite landmarks are invalid input") {
  auto lm = open_eye();
  lm[3].x = std::nan("");
  CHECK(kind_of([&] { eye_aspect_ratio(lm); }) == ErrorKind::InvalidInput);
}

TEST_CASE("csv reading") {
  SUBCASE("two rows") {
    std::istringstream in("t,ear\n0.0,1.2\n0.1,1.3");
    const auto s = read_series(in, SeriesFormat::Csv);
    REQUIRE(s.size() == 2);
    CHECK(s[1].t == 0.1);
    CHECK(s[1].v == 1.3);
  }
  SUBCASE("decreasing timestamps") {
    std::istringstream in("t,ear\n0.2,1.0\n0.1,1.0\n");
    CHECK(kind_of([&] { read_series(in, SeriesFormat::Csv); }) == ErrorKind::Ordering);
  }
  SUBCASE("empty input") {
    std::istringstream in("");
    CHECK_THROWS_AS(read_series(in, SeriesFormat::Csv), ParseError);
  }
  SUBCASE("malformed row names its line") {
    std::istringstream in("t,ear\n0.0,1.0\n0.1,abc\n");
    try {
      read_series(in, SeriesFormat::Csv);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("scientific notation") {
    std::istringstream in("t,ear\n0,1e0\n1e-1,2.5E+0\n");
    const auto s = read_series(in, SeriesFormat::Csv);
    CHECK(s[1].v == 2.5);
  }
}

TEST_CASE("jsonl reading") {
  std::istringstream in("{\"t\":0.0,\"ear\":1.2}\n{\"t\":0.1,\"ear\":1.3}\n");
  const auto s = read_series(in, SeriesFormat::Jsonl);
  CHECK(s.size() == 2);
  std::istringstream bad("{\"t\":0.0}\n");
  CHECK_THROWS_AS(read_series(bad, SeriesFormat::Jsonl), ParseError);
}

TEST_CASE("two samples write a header plus two rows") {
  BlinkSeries s({{0.0, 1.2}, {0.1, 1.3}});
  std::ostringstream out;
  write_series(out, s, SeriesFormat::Csv);
  CHECK(out.str() == "t,ear\n0,1.2\n0.1,1.3\n");
}

TEST_CASE("round trips of 1000 random samples") {
  const auto s = random_series(1000, 5);
  for (auto fmt : {SeriesFormat::Csv, SeriesFormat::Jsonl}) {
    std::stringstream io;
    write_series(io, s, fmt);
    const auto back = read_series(io, fmt, "S1", "easy");
    CHECK(back == s);
  }
}

TEST_CASE("file names carry subject and block ids") {
  const auto dir = std::filesystem::temp_directory_path() / "blinkflow_ingest_test";
  std::filesystem::create_directories(dir);
  const auto s = random_series(20, 9);
  write_series_file(dir / "S07__hard.jsonl", s);
  const auto back = read_series_file(dir / "S07__hard.jsonl");
  CHECK(back.subject_id() == "S07");
  CHECK(back.block_id() == "hard");
  CHECK(back.values() == s.values());
  CHECK(kind_of([&] { read_series_file(dir / "missing.csv"); }) == ErrorKind::Io);
  CHECK(kind_of([&] { format_from_path("x.txt"); }) == ErrorKind::Configuration);
  std::filesystem::remove_all(dir);
}

TEST_CASE("duration counts one sample period past the last timestamp") {
  std::vector<Sample> v;
  for (int i = 0; i < 2600; ++i) v.push_back({i / 10.0, 0.0});
  CHECK(BlinkSeries(v).duration() == doctest::Approx(260.0).epsilon(1e-12));
}

TEST_CASE("series invariants") {
  CHECK(kind_of([] { BlinkSeries({{0.0, 1.0}}); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([] { BlinkSeries({{0.0, 1.0}, {0.0, 1.0}}); }) == ErrorKind::Ordering);
}

TEST_CASE("landmark table to ratio series") {
  std::istringstream in(
      "t,p1x,p1y,p2x,p2y,p3x,p3y,p4x,p4y,p5x,p5y,p6x,p6y\n"
      "0,0,0,1,1,3,1,4,0,3,-1,1,-1\n"
      "0.1,0,0,1,0.5,3,0.5,4,0,3,-0.5,1,-0.5\n");
  const auto s = series_from_landmarks(in);
  REQUIRE(s.size() == 2);
  CHECK(s[0].v == doctest::Approx(2.0));
  CHECK(s[1].v == doctest::Approx(4.0));
}
