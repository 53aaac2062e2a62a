#include <doctest.h>

#include <algorithm>

#include "blinkflow/learn/evaluate.hpp"

using namespace blinkflow;
using namespace blinkflow::learn;

namespace {

Dataset features(std::size_t subjects, std::size_t classes) {
  Dataset ds;
  ds.n_classes = classes;
  for (std::size_t s = 0; s < subjects; ++s) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double v = static_cast<double>(c) * 10.0 + 0.1 * static_cast<double>(s);
      ds.instances.push_back({FeatureVector{{v, -v, 0.5 * v}}, c, "S" + std::to_string(10 + s), "c" + std::to_string(c), {}});
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("perfect predictor scores one") {
  const auto ds = features(4, 3);
  const auto r = evaluate_with(
      ds,
      [](const Dataset&, const Dataset& test, std::uint64_t) {
        std::vector<std::size_t> out;
        for (const auto& inst : test.instances) out.push_back(inst.label);
        return out;
      },
      "oracle", 0);
  CHECK(r.mean_accuracy == 1.0);
  CHECK(r.folds.size() == 4);
  CHECK(r.folds[0].confusion == std::vector<std::vector<std::size_t>>{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
}

TEST_CASE("majority predictor on balanced classes scores a third") {
  const auto ds = features(6, 3);
  const auto r = evaluate_with(
      ds,
      [](const Dataset& train, const Dataset& test, std::uint64_t) {
        std::vector<std::size_t> votes(train.n_classes, 0);
        for (const auto& inst : train.instances) ++votes[inst.label];
        const auto top = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
        return std::vector<std::size_t>(test.size(), top);
      },
      "majority", 0);
  CHECK(r.mean_accuracy == doctest::Approx(1.0 / 3));
}

TEST_CASE("fold seeds are base plus fold index") {
  const auto ds = features(5, 2);
  std::vector<std::uint64_t> seen;
  evaluate_with(
      ds,
      [&](const Dataset&, const Dataset& test, std::uint64_t seed) {
        seen.push_back(seed);
        return std::vector<std::size_t>(test.size(), 0);
      },
      "probe", 100);
  CHECK(seen == std::vector<std::uint64_t>{100, 101, 102, 103, 104});
}

TEST_CASE("mean accuracy is the mean of fold accuracies") {
  const auto ds = features(5, 2);
  const auto r = evaluate_with(
      ds,
      [](const Dataset& train, const Dataset& test, std::uint64_t) {
        return std::vector<std::size_t>(test.size(), train.size() % 3 == 0 ? 0 : 1);
      },
      "odd", 0);
  double s = 0;
  for (double a : r.fold_accuracies()) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    s += a;
  }
  CHECK(r.mean_accuracy == doctest::Approx(s / 5));
}

TEST_CASE("baseline evaluation is deterministic and fully reported") {
  const auto ds = features(6, 2);
  EvalConfig cfg;
  cfg.seed = 9;
  for (auto method : {Method::Knn, Method::LinearSvm}) {
    const auto a = evaluate(ds, method, cfg).to_json().dump();
    const auto b = evaluate(ds, method, cfg).to_json().dump();
    CHECK(a == b);
  }
  const auto j = evaluate(ds, Method::Knn, cfg).to_json();
  for (const char* key : {"method", "labeling", "per_fold", "mean_accuracy", "config", "seed"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["seed"] == 9);
  CHECK(j["per_fold"].size() == 6);
  CHECK(j["per_fold"][0].contains("confusion"));
  CHECK(j["config"]["mdlstm"]["hidden"] == 16);
  CHECK(j["mean_accuracy"] == 1.0);
}
