#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace blinkflow::learn {

enum class Pooling { Mean, Last };

std::string_view to_string(Pooling pooling);
Pooling parse_pooling(std::string_view name);

// Hyperparameters shared by every gradient-trained model.
struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  Pooling pooling = Pooling::Mean;
  std::size_t hidden = 16;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

// First/second-moment adaptive steps with bias correction.
class Adam {
 public:
  Adam(std::size_t n_params, double lr, double beta1, double beta2, double eps);

  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

// Rescales grad in place so its L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_gradient_norm(std::span<double> grad, double max_norm);

// Computes loss and fills the gradient of example i (grad arrives zeroed).
using ExampleGradFn = std::function<double(std::size_t example, std::span<double> grad)>;

struct TrainHistory {
  std::vector<double> epoch_loss;  // mean loss over the epoch's steps
};

// Per-example Adam steps with gradient clipping, epoch-wise shuffling from
// cfg.seed and a fixed epoch count. Throws TrainingError on a non-finite loss.
TrainHistory fit_adam(std::vector<double>& params, std::size_t n_examples,
                      const TrainConfig& cfg, const ExampleGradFn& grad_fn);

}  // namespace blinkflow::learn
