// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "blinkflow/learn/baselines.hpp"
#include "blinkflow/learn/dataset.hpp"
#include "blinkflow/learn/evaluate.hpp"
#include "blinkflow/learn/kmeans.hpp"
#include "blinkflow/learn/mdlstm.hpp"
#include "blinkflow/learn/nn.hpp"
#include "blinkflow/metrics.hpp"
#include "blinkflow/random.hpp"
#include "blinkflow/spectro.hpp"
#include "blinkflow/synth.hpp"
#include "oracles.hpp"

using namespace blinkflow;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t argmax_row(const Matrix& m, std::size_t r) {
  const auto row = m.row(r);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// ---- 1 ----
Outcome spectrogram_geometry() {
  synth::SynthConfig cfg;
  cfg.blink_rate_bpm = 12;
  const auto series = synth::generate(cfg).first;
  const auto t0 = Clock::now();
  const auto sp = build_spectrogram(series);
  const double dt = seconds_since(t0);
  const bool ok = sp.time_steps() == 200 && sp.freq_bins() == 93 && dt < 5.0;
  return {ok, std::to_string(sp.time_steps()) + " x " + std::to_string(sp.freq_bins()) + " in " +
                  num(dt, 3) + " s (need 200 x 93, < 5 s)"};
}

// ---- 2 ----
Outcome periodogram_oracle() {
  const auto t0 = Clock::now();
  const auto grid = frequency_grid(2.0 / 60, 25.0 / 60, kDefaultFreqCount);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> start(0.0, 200.0);
    std::normal_distribution<double> n01;
    const double t_start = std::round(start(rng) * 10.0) / 10.0;
    std::vector<double> t(610), y(610);
    double mean = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = t_start + static_cast<double>(i) / 10.0;
      y[i] = n01(rng);
      mean += y[i];
    }
    mean /= static_cast<double>(y.size());
    for (auto& v : y) v -= mean;
    const auto p = lomb_scargle(t, y, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double ref = oracle::sinusoid_fit_power(t, y, grid[k]);
      worst = std::max(worst, std::abs(p[k] - ref) / ref);
    }
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-9 && dt < 30.0,
          "max relative error " + num(worst, 3) + " over 50 seeds x 93 bins in " + num(dt, 3) +
              " s (need <= 1e-9, < 30 s)"};
}

// ---- 3 ----
Outcome spectral_peak() {
  const auto t0 = Clock::now();
  struct Case {
    const char* name;
    double jitter;
    double dropout;
  };
  const Case cases[] = {{"clean", 0.0, 0.0}, {"jitter 10ms", 0.01, 0.0}, {"dropout 10%", 0.0, 0.1},
                        {"jitter+dropout", 0.01, 0.1}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    synth::SynthConfig cfg;
    cfg.blink_rate_bpm = 12;
    cfg.timestamp_jitter_s = c.jitter;
    cfg.dropout_frac = c.dropout;
    cfg.seed = 3;
    const auto sp = build_spectrogram(synth::generate(cfg).first);
    const std::size_t target = sp.grid.nearest(12.0 / 60.0);
    std::size_t hits = 0;
    std::map<std::size_t, std::size_t> peaks;
    for (std::size_t r = 0; r < sp.time_steps(); ++r) {
      const auto a = argmax_row(sp.power, r);
      hits += a == target;
      ++peaks[a];
    }
    const auto mode = std::max_element(peaks.begin(), peaks.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    const double frac = static_cast<double>(hits) / static_cast<double>(sp.time_steps());
    ok = ok && frac >= 0.95;
    detail += std::string(c.name) + " " + num(100 * frac, 3) + "% (mode " +
              num(sp.grid[mode->first] * 60.0, 4) + " bpm); ";
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 30.0;
  return {ok, detail + "need >= 95% at 12 bpm, " + num(dt, 3) + " s"};
}

// ---- 4 ----
Spectrogram cells_to_spectrogram(std::size_t rows, std::size_t cols, std::vector<double> cells) {
  Spectrogram sp;
  sp.grid = frequency_grid(2.0 / 60, 25.0 / 60, cols);
  sp.power = Matrix(rows, cols);
  sp.power.data() = std::move(cells);
  sp.times.assign(rows, 0.0);
  return sp;
}

Outcome entropy_properties() {
  std::vector<std::string> failures;
  const double bound = std::log2(256.0);
  double max_seen = 0.0;

  if (blink_entropy(cells_to_spectrogram(200, 93, std::vector<double>(200 * 93, 0.37))) != 0.0) {
    failures.push_back("constant");
  }

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1), scale(1e-3, 1e3), shift(-1e3, 1e3);
  std::uniform_int_distribution<std::size_t> dim(2, 120);
  std::size_t affine_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = dim(rng), c = dim(rng);
    std::vector<double> cells(r * c);
    for (auto& x : cells) x = trial % 2 ? u(rng) : std::pow(u(rng), 4.0);
    auto moved = cells;
    const double a = scale(rng), b = shift(rng);
    for (auto& x : moved) x = a * x + b;
    const double be = blink_entropy(cells_to_spectrogram(r, c, cells));
    const double be2 = blink_entropy(cells_to_spectrogram(r, c, moved));
    affine_bad += be != be2;
    max_seen = std::max({max_seen, be, be2});
  }
  if (affine_bad) failures.push_back("affine x" + std::to_string(affine_bad));

  std::vector<double> half(200 * 93, 0.0);
  std::fill(half.begin(), half.begin() + static_cast<std::ptrdiff_t>(half.size() / 2), 1.0);
  const double be_half = blink_entropy(cells_to_spectrogram(200, 93, half));
  if (be_half != 1.0) failures.push_back("half/half = " + num(be_half, 17));

  std::vector<double> uni(200 * 93);
  for (auto& x : uni) x = u(rng);
  const double be_uni = blink_entropy(cells_to_spectrogram(200, 93, uni));
  const double ref = oracle::histogram_entropy(uni, 256);
  max_seen = std::max(max_seen, be_uni);
  if (std::abs(be_uni - ref) > 1e-12) failures.push_back("recount diff " + num(be_uni - ref, 3));
  if (max_seen > bound) failures.push_back("bound");

  std::string detail = "uniform 200x93 BE " + num(be_uni, 10) + " vs recount " + num(ref, 10) +
                       "; half/half " + num(be_half, 17) + "; max BE " + num(max_seen, 6) + " <= 8";
  for (const auto& f : failures) detail += "; FAILED " + f;
  return {failures.empty(), detail};
}

// ---- 5 ----
std::vector<double> random_params(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  std::vector<double> p(n);
  for (auto& x : p) x = u(rng);
  return p;
}

// max |a - n| / max(|a|, |n|, 1e-6). Central differences with step 1e-5
// carry about 1e-11 of rounding noise, so below 1e-6 the denominator is held
// fixed and those coordinates must agree to 1e-10 absolutely.
double max_rel(const std::vector<double>& a, const std::vector<double>& n) {
  return oracle::max_relative_error(a, n, 1e-6);
}

Outcome gradient_check() {
  using namespace blinkflow::learn;
  const auto t0 = Clock::now();
  double worst_md = 0.0, worst_mlp = 0.0, worst_lstm = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    MdLstmModel md(3, 3, seed % 2 ? Pooling::Last : Pooling::Mean);
    md.params() = random_params(md.param_count(), seed);
    Matrix x(6, 5);
    std::mt19937_64 rng(seed + 500);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& v : x.data()) v = u(rng);
    const std::size_t target = seed % 3;
    std::vector<double> g(md.param_count(), 0.0);
    mdlstm_loss_grad(md, x, target, g);
    const auto fd = oracle::central_difference(md.params(), [&](const std::vector<double>& p) {
      MdLstmModel m = md;
      m.params() = p;
      return cross_entropy(mdlstm_forward(m, x), target);
    });
    worst_md = std::max(worst_md, max_rel(g, fd));

    auto mlp = MlpModel::initialized(30, 3, 3, seed);
    mlp.params = random_params(mlp.params.size(), seed + 100);
    std::vector<double> xs = random_params(30, seed + 200);
    std::vector<double> gm(mlp.params.size(), 0.0);
    mlp_loss_grad(mlp, xs, target, gm);
    const auto fdm = oracle::central_difference(mlp.params, [&](const std::vector<double>& p) {
      MlpModel m = mlp;
      m.params = p;
      return cross_entropy(mlp_forward(m, xs), target);
    });
    worst_mlp = std::max(worst_mlp, max_rel(gm, fdm));

    auto lstm = Lstm1dModel::initialized(3, 3, seed % 2 ? Pooling::Last : Pooling::Mean, seed);
    lstm.params = random_params(lstm.params.size(), seed + 300);
    std::vector<double> gl(lstm.params.size(), 0.0);
    lstm1d_loss_grad(lstm, xs, target, gl);
    const auto fdl = oracle::central_difference(lstm.params, [&](const std::vector<double>& p) {
      Lstm1dModel m = lstm;
      m.params = p;
      return cross_entropy(lstm1d_forward(m, xs), target);
    });
    worst_lstm = std::max(worst_lstm, max_rel(gl, fdl));
  }
  const double dt = seconds_since(t0);
  const bool ok = worst_md < 1e-4 && worst_mlp < 1e-4 && worst_lstm < 1e-4 && dt < 120.0;
  return {ok, "max relative error 2D LSTM " + num(worst_md, 3) + ", MLP " + num(worst_mlp, 3) +
                  ", 1D LSTM " + num(worst_lstm, 3) + " over 20 seeds in " + num(dt, 3) +
                  " s (need < 1e-4 with a 1e-6 denominator floor, < 120 s)"};
}

// ---- 6 ----
Outcome detector_closure() {
  bool ok = true;
  std::string detail;
  for (double rate : {4.0, 10.0, 20.0}) {
    synth::SynthConfig cfg;
    cfg.blink_rate_bpm = rate;
    const auto [series, truth] = synth::generate(cfg);
    const auto events = detect_blinks(detrend(series));
    const double br = blink_rate(events, series.duration());
    const double bd = blink_duration(events).mean;
    const bool good = events.size() == truth.events.size() && std::abs(br - rate) <= 0.5 &&
                      std::abs(bd - cfg.blink_dur_s) <= 1.0 / cfg.fs;
    ok = ok && good;
    detail += num(rate, 3) + " bpm: " + std::to_string(events.size()) + "/" +
              std::to_string(truth.events.size()) + " events, BR " + num(br, 5) + ", BD " +
              num(bd, 4) + " s; ";
  }
  return {ok, detail + "need exact count, BR +-0.5, BD 0.3 +- 0.1 s"};
}

// ---- 7 ----
Outcome kmeans_optimality() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  std::uniform_real_distribution<double> u(-100, 100);
  std::uniform_int_distribution<int> small(0, 3);
  std::size_t agree = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(size(rng));
    for (auto& x : v) x = trial % 4 == 0 ? small(rng) : u(rng);
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) v.back() += 1.0;
    const auto best = oracle::exhaustive_split(v);
    const auto got = learn::kmeans_split(v);
    const bool same_ss = std::abs(oracle::wcss(v, got.labels) - best.within_ss) <=
                         1e-9 * std::max(1.0, best.within_ss);
    const bool optimal_labels =
        std::find(best.labelings.begin(), best.labelings.end(), got.labels) != best.labelings.end();
    agree += same_ss && optimal_labels;
  }
  return {agree == 200, std::to_string(agree) + "/200 inputs match the exhaustive optimum"};
}

// ---- 8 ----
Outcome loso_integrity() {
  using namespace blinkflow::learn;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> subjects(2, 20), blocks(1, 4), cls(0, 2);
  std::size_t violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Dataset ds;
    ds.n_classes = 3;
    const int ns = subjects(rng);
    for (int s = 0; s < ns; ++s) {
      const int nb = blocks(rng);
      for (int b = 0; b < nb; ++b) {
        ds.instances.push_back({FeatureVector{{0.0}}, static_cast<std::size_t>(cls(rng)),
                                "P" + std::to_string(rng() % 1000), "b", {}});
      }
    }
    std::shuffle(ds.instances.begin(), ds.instances.end(), rng);
    std::vector<int> seen(ds.size(), 0);
    std::set<std::string> fold_subjects;
    for (const auto& f : loso_folds(ds)) {
      fold_subjects.insert(f.subject);
      std::set<std::string> train;
      for (auto i : f.train) train.insert(ds.instances[i].subject_id);
      for (auto i : f.test) {
        ++seen[i];
        violations += ds.instances[i].subject_id != f.subject;
      }
      violations += train.count(f.subject);
      violations += f.train.size() + f.test.size() != ds.size();
    }
    for (int c : seen) violations += c != 1;
    violations += fold_subjects.size() != ds.subjects().size();
  }

  auto cfg = synth::CohortConfig{};
  cfg.n_subjects = 4;
  cfg.classes = {synth::class_preset("periodic"), synth::class_preset("irregular")};
  for (auto& c : cfg.classes) c.config.duration_s = 80;
  cfg.seed = 11;
  const auto cohort = synth::make_cohort(cfg);
  EvalConfig ec;
  ec.seed = 5;
  ec.mdlstm.hidden = 4;
  ec.mdlstm.epochs = 3;
  ec.mdlstm.learning_rate = 1e-2;
  ec.baseline.nn.epochs = 3;
  std::size_t differing = 0;
  for (auto method : {Method::MdLstm2d, Method::Knn, Method::LinearSvm, Method::Mlp, Method::Lstm1d}) {
    const auto a = evaluate_blocks(cohort.blocks, method, Labeling::Event, ec, cohort.class_order);
    const auto b = evaluate_blocks(cohort.blocks, method, Labeling::Event, ec, cohort.class_order);
    differing += a.to_json().dump() != b.to_json().dump();
  }
  return {violations == 0 && differing == 0,
          std::to_string(violations) + " partition/leakage violations over 200 random cohorts; " +
              std::to_string(differing) + "/5 methods with differing report bytes across two runs"};
}

// ---- 9 and 10 ----
constexpr std::uint64_t kCohortSeed = 7;

learn::EvalConfig acceptance_eval() {
  learn::EvalConfig ec;
  ec.seed = kCohortSeed;
  ec.mdlstm.hidden = 8;
  ec.mdlstm.epochs = 40;
  ec.mdlstm.learning_rate = 1e-2;
  return ec;
}

const synth::Cohort& separability_cohort() {
  static const synth::Cohort cohort = [] {
    synth::CohortConfig cfg;
    cfg.n_subjects = 12;
    cfg.classes = {synth::class_preset("periodic"), synth::class_preset("irregular")};
    cfg.seed = kCohortSeed;
    return synth::make_cohort(cfg);
  }();
  return cohort;
}

std::string folds_text(const learn::EvalReport& r) {
  std::string s;
  for (double a : r.fold_accuracies()) s += num(a, 2) + " ";
  return s;
}

Outcome separability() {
  using namespace blinkflow::learn;
  const auto t0 = Clock::now();
  const auto& cohort = separability_cohort();
  auto ec = acceptance_eval();
  const auto md = evaluate_blocks(cohort.blocks, Method::MdLstm2d, Labeling::Event, ec, cohort.class_order);
  ec.features = {.br = true, .bd = true, .be = false};
  const auto knn = evaluate_blocks(cohort.blocks, Method::Knn, Labeling::Event, ec, cohort.class_order);
  const double dt = seconds_since(t0);
  const bool ok = md.mean_accuracy >= 0.90 && md.mean_accuracy - knn.mean_accuracy >= 0.10 && dt < 600.0;
  return {ok, "2D LSTM " + num(md.mean_accuracy) + " [" + folds_text(md) + "], (br,bd) kNN " +
                  num(knn.mean_accuracy) + ", margin " + num(md.mean_accuracy - knn.mean_accuracy) +
                  " in " + num(dt, 4) + " s (need >= 0.90, margin >= 0.10, < 600 s)"};
}

Outcome shuffled_labels() {
  using namespace blinkflow::learn;
  const auto t0 = Clock::now();
  auto blocks = separability_cohort().blocks;
  // Each subject contributes one block per class; swapping a subject's two
  // labels at random keeps every training fold balanced.
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < blocks.size(); ++i) by_subject[blocks[i].subject_id].push_back(i);
  auto rng = make_rng(kCohortSeed, 0x5348);
  std::bernoulli_distribution coin(0.5);
  std::size_t swapped = 0;
  for (const auto& [subject, idx] : by_subject) {
    if (!coin(rng)) continue;
    ++swapped;
    std::swap(blocks[idx[0]].class_name, blocks[idx[1]].class_name);
  }
  const auto ec = acceptance_eval();
  const auto r = evaluate_blocks(blocks, Method::MdLstm2d, Labeling::Event, ec,
                                 separability_cohort().class_order);
  const double dt = seconds_since(t0);
  return {std::abs(r.mean_accuracy - 0.5) <= 0.15,
          "2D LSTM " + num(r.mean_accuracy) + " [" + folds_text(r) + "] with " +
              std::to_string(swapped) + "/12 subjects swapped, " + num(dt, 4) +
              " s (need 0.5 +- 0.15)"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "spectrogram geometry", spectrogram_geometry},
      {2, "Lomb-Scargle oracle equivalence", periodogram_oracle},
      {3, "spectral peak recovery", spectral_peak},
      {4, "blink entropy properties", entropy_properties},
      {5, "gradient correctness", gradient_check},
      {6, "detector/metric closure", detector_closure},
      {7, "1D k-means optimality", kmeans_optimality},
      {8, "LOSO integrity", loso_integrity},
      {9, "end-to-end synthetic separability", separability},
      {10, "chance-level sanity", shuffled_labels},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name
              << "): " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
