#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <set>

#include "blinkflow/error.hpp"
#include "blinkflow/learn/dataset.hpp"
#include "blinkflow/learn/kmeans.hpp"
#include "oracles.hpp"

using namespace blinkflow;
using namespace blinkflow::learn;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidInput;
}

BlockRecord record(const std::string& subject, const std::string& cls, AuxScalars aux = {}) {
  BlockRecord b;
  b.subject_id = subject;
  b.block_id = cls;
  b.class_name = cls;
  b.is_baseline = cls == "baseline";
  b.aux = aux;
  b.spectrogram.grid = frequency_grid(0.1, 0.2, 3);
  b.spectrogram.power = Matrix(2, 3, 0.5);
  b.spectrogram.times = {0.0, 1.0};
  b.spectrogram.normalized = true;
  b.metrics.br = 10;
  b.metrics.bd = 0.3;
  b.metrics.be = 4;
  b.sequence = {0.0, 0.5, 1.0};
  return b;
}

std::vector<BlockRecord> protocol(std::size_t subjects) {
  std::vector<BlockRecord> out;
  for (std::size_t s = 0; s < subjects; ++s) {
    const std::string id = "S" + std::to_string(100 + s);
    out.push_back(record(id, "baseline"));
    out.push_back(record(id, "easy", {2.0 + 0.1 * static_cast<double>(s), 0.9}));
    out.push_back(record(id, "hard", {8.0 - 0.1 * static_cast<double>(s), 0.3}));
  }
  return out;
}

}  // namespace

TEST_CASE("two-cluster split examples") {
  const std::vector<double> v{1, 2, 9, 10};
  const auto s = kmeans_split(v);
  CHECK(s.labels == std::vector<int>{0, 0, 1, 1});
  CHECK(s.low_centroid == 1.5);
  CHECK(s.high_centroid == 9.5);
  CHECK(s.within_ss == doctest::Approx(1.0));

  const std::vector<double> pair{10, 0};
  CHECK(kmeans_split(pair).labels == std::vector<int>{1, 0});

  const std::vector<double> same{5, 5, 5};
  CHECK(kind_of([&] { kmeans_split(same); }) == ErrorKind::DegenerateLabeling);
}

TEST_CASE("split matches exhaustive search") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> size(2, 12);
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> coarse(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(size(rng)));
    // Every fifth input is coarse-valued so ties and duplicates get exercised.
    for (auto& x : v) x = trial % 5 == 0 ? coarse(rng) : u(rng);
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) v[0] += 1;
    const auto best = oracle::exhaustive_split(v);
    const auto got = kmeans_split(v);
    CHECK(got.within_ss == doctest::Approx(best.within_ss).epsilon(1e-9));
    CHECK(oracle::wcss(v, got.labels) == doctest::Approx(best.within_ss).epsilon(1e-9));
    CHECK(std::find(best.labelings.begin(), best.labelings.end(), got.labels) != best.labelings.end());
  }
}

TEST_CASE("lloyd reaches a fixed point no better than the exact split") {
  std::mt19937_64 rng(78);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(10);
    for (auto& x : v) x = u(rng);
    CHECK(kmeans_lloyd(v).within_ss >= kmeans_split(v).within_ss - 1e-12);
  }
}

TEST_CASE("event labeling of the three-block protocol") {
  const auto ds = make_dataset(protocol(18), Labeling::Event);
  CHECK(ds.size() == 54);
  CHECK(ds.n_classes == 3);
  std::vector<int> count(3, 0);
  for (const auto& inst : ds.instances) ++count[inst.label];
  CHECK(count == std::vector<int>{18, 18, 18});
  CHECK(ds.class_names == std::vector<std::string>{"baseline", "easy", "hard"});
  CHECK(std::holds_alternative<Matrix>(ds.instances[0].input));
}

TEST_CASE("subjective labeling keeps task blocks only") {
  const auto ds = make_dataset(protocol(18), Labeling::Subjective);
  CHECK(ds.size() == 36);
  CHECK(ds.n_classes == 2);
  for (const auto& inst : ds.instances) {
    CHECK(inst.block_id != "baseline");
    CHECK(inst.label == (inst.block_id == "hard" ? 1U : 0U));
  }
}

TEST_CASE("objective labeling splits correct rates") {
  std::vector<BlockRecord> blocks{record("A", "t1", {std::nullopt, 0.9}), record("A", "t2", {std::nullopt, 0.85}),
                                  record("B", "t1", {std::nullopt, 0.3}), record("B", "t2", {std::nullopt, 0.2})};
  const auto ds = make_dataset(blocks, Labeling::Objective);
  std::vector<std::size_t> labels;
  for (const auto& inst : ds.instances) labels.push_back(inst.label);
  CHECK(labels == std::vector<std::size_t>{1, 1, 0, 0});
}

TEST_CASE("labeling errors") {
  auto blocks = protocol(3);
  blocks[1].aux.perceived_difficulty.reset();
  CHECK(kind_of([&] { make_dataset(blocks, Labeling::Subjective); }) == ErrorKind::Labeling);
  auto one = protocol(1);
  CHECK(kind_of([&] { make_dataset(one, Labeling::Event); }) == ErrorKind::Configuration);
  auto flat = protocol(3);
  for (auto& b : flat) b.aux.correct_rate = 0.5;
  CHECK(kind_of([&] { make_dataset(flat, Labeling::Objective); }) == ErrorKind::DegenerateLabeling);
}

TEST_CASE("feature and timeseries projections") {
  DatasetOptions opt;
  opt.input = InputKind::Features;
  opt.features = {.br = true, .bd = true, .be = false};
  const auto ds = make_dataset(protocol(2), Labeling::Event, opt);
  const auto& f = std::get<FeatureVector>(ds.instances[0].input);
  CHECK(f.values == std::vector<double>{10, 0.3});
  CHECK(opt.features.name() == "br,bd");
  opt.input = InputKind::Timeseries;
  const auto ts = make_dataset(protocol(2), Labeling::Event, opt);
  CHECK(std::get<Sequence>(ts.instances[0].input).values.size() == 3);
}

TEST_CASE("loso folds") {
  const auto ds = make_dataset(protocol(18), Labeling::Event);
  const auto folds = loso_folds(ds);
  CHECK(folds.size() == 18);
  CHECK(std::is_sorted(folds.begin(), folds.end(),
                       [](const Fold& a, const Fold& b) { return a.subject < b.subject; }));

  const auto small = make_dataset(protocol(2), Labeling::Event);
  const auto two = loso_folds(small);
  CHECK(two.size() == 2);
  CHECK(two[0].test.size() + two[1].test.size() == 6);
}

TEST_CASE("loso folds partition random cohorts without leakage") {
  std::mt19937_64 rng(90);
  std::uniform_int_distribution<int> n_sub(2, 15), n_blocks(1, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<BlockRecord> blocks;
    const int subjects = n_sub(rng);
    for (int s = 0; s < subjects; ++s) {
      const int nb = n_blocks(rng);
      for (int b = 0; b < nb; ++b) blocks.push_back(record("P" + std::to_string(s), b % 2 ? "x" : "y"));
    }
    std::shuffle(blocks.begin(), blocks.end(), rng);
    // Every class must appear at least once.
    blocks.push_back(record("P0", "x"));
    blocks.push_back(record("P1", "y"));
    const auto ds = make_dataset(blocks, Labeling::Event);
    const auto folds = loso_folds(ds);
    CHECK(folds.size() == ds.subjects().size());
    std::vector<int> seen(ds.size(), 0);
    for (const auto& f : folds) {
      std::set<std::string> train_subjects;
      for (auto i : f.train) train_subjects.insert(ds.instances[i].subject_id);
      for (auto i : f.test) {
        ++seen[i];
        CHECK(ds.instances[i].subject_id == f.subject);
      }
      CHECK(train_subjects.count(f.subject) == 0);
      CHECK(f.train.size() + f.test.size() == ds.size());
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("resampling") {
  BlinkSeries s({{0.0, 0.0}, {1.0, 2.0}, {2.0, 4.0}});
  CHECK(resample(s, 2.0, 6) == std::vector<double>{0, 1, 2, 3, 4, 4});
  CHECK_THROWS_AS(resample(s, 0.0, 3), Error);
}

TEST_CASE("name parsing") {
  CHECK(parse_labeling("objective") == Labeling::Objective);
  CHECK_THROWS_AS(parse_labeling("random"), Error);
}
