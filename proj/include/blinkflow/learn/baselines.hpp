#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "blinkflow/learn/dataset.hpp"
#include "blinkflow/learn/optim.hpp"

namespace blinkflow::learn {

enum class Method { MdLstm2d, Knn, LinearSvm, Mlp, Lstm1d };

inline constexpr Method kAllMethods[] = {Method::MdLstm2d, Method::Knn, Method::LinearSvm,
                                         Method::Mlp, Method::Lstm1d};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
InputKind input_kind(Method method);

// Per-feature z-scoring with statistics from the training rows only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const std::vector<std::vector<double>>& rows);
  std::vector<double> apply(std::span<const double> x) const;
};

// Majority vote over the k nearest training rows (Euclidean); equal votes go
// to the smallest class index, equal distances to the earlier training row.
std::size_t knn_predict(const std::vector<std::vector<double>>& train_x,
                        std::span<const std::size_t> train_y, std::span<const double> query,
                        std::size_t k, std::size_t n_classes);

// One-vs-rest hinge-loss linear classifier trained with seeded Pegasos-style
// subgradient steps; the bias is not regularized.
class LinearSvm {
 public:
  void fit(const std::vector<std::vector<double>>& x, std::span<const std::size_t> y,
           std::size_t n_classes, double lambda, std::size_t epochs, std::uint64_t seed);
  std::vector<double> scores(std::span<const double> x) const;
  std::size_t predict(std::span<const double> x) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> w_;  // per class: dim weights then bias
};

// One tanh hidden layer and a softmax output.
// Layout: w1 (H x D), b1 (H), w2 (C x H), b2 (C).
struct MlpModel {
  std::size_t inputs = 0, hidden = 0, n_classes = 0;
  std::vector<double> params;

  static MlpModel initialized(std::size_t inputs, std::size_t hidden, std::size_t n_classes,
                              std::uint64_t seed);
};

std::vector<double> mlp_forward(const MlpModel& m, std::span<const double> x);
double mlp_loss_grad(const MlpModel& m, std::span<const double> x, std::size_t target,
                     std::span<double> grad);

// Standard LSTM over a scalar sequence with the same pooling + softmax head
// as the 2D model. Gate order i, o, g, f.
// Layout: w_input (4H), w_recurrent (4H x H), bias (4H), fc_weight (C x H), fc_bias (C).
struct Lstm1dModel {
  std::size_t hidden = 0, n_classes = 0;
  Pooling pooling = Pooling::Mean;
  std::vector<double> params;

  static Lstm1dModel initialized(std::size_t hidden, std::size_t n_classes, Pooling pooling,
                                 std::uint64_t seed);
};

std::vector<double> lstm1d_forward(const Lstm1dModel& m, std::span<const double> x);
double lstm1d_loss_grad(const Lstm1dModel& m, std::span<const double> x, std::size_t target,
                        std::span<double> grad);

struct BaselineConfig {
  std::optional<std::size_t> knn_k;  // fixed k; otherwise grid searched
  std::vector<std::size_t> knn_grid{1, 3, 5, 7, 9};
  std::vector<double> svm_lambda_grid{1e-4, 1e-3, 1e-2, 1e-1};
  std::size_t svm_epochs = 200;
  std::vector<std::size_t> mlp_hidden_grid{8, 32};
  std::vector<std::size_t> lstm_hidden_grid{8, 16};
  // Gradient-trained baselines; hidden is taken from the grid.
  TrainConfig nn{.learning_rate = 1e-2, .epochs = 30};
  double inner_holdout_frac = 0.25;
};

// Fits `method` (any baseline; not the 2D LSTM) on train, grid searching on an
// inner subject-wise holdout drawn from train only, and predicts test.
std::vector<std::size_t> baseline_fit_predict(Method method, const Dataset& train,
                                              const Dataset& test, const BaselineConfig& cfg,
                                              std::uint64_t seed);

// Subject-wise split of ds into (inner train, validation) indices; empty
// validation when ds has fewer than two subjects.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> inner_split(
    const Dataset& ds, double holdout_frac, std::uint64_t seed);

}  // namespace blinkflow::learn
