#include <algorithm>
#include <cmath>
#include <numeric>

#include "blinkflow/error.hpp"
#include "blinkflow/learn/optim.hpp"
#include "blinkflow/random.hpp"

namespace blinkflow::learn {

std::string_view to_string(Pooling pooling) { return pooling == Pooling::Mean ? "mean" : "last"; }

Pooling parse_pooling(std::string_view name) {
  if (name == "mean") return Pooling::Mean;
  if (name == "last") return Pooling::Last;
  fail(ErrorKind::Configuration, "unknown pooling '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorKind::Configuration, "learning rate must be positive");
  if (epochs < 1) fail(ErrorKind::Configuration, "epochs must be at least 1");
  if (hidden < 1) fail(ErrorKind::Configuration, "hidden size must be at least 1");
  if (!(clip_norm > 0.0)) fail(ErrorKind::Configuration, "clip threshold must be positive");
}

Adam::Adam(std::size_t n_params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n_params, 0.0), v_(n_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= step * m_[i] / (std::sqrt(v_[i]) + eps_);
  }
}

double clip_gradient_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grad) g *= scale;
  }
  return norm;
}

TrainHistory fit_adam(std::vector<double>& params, std::size_t n_examples,
                      const TrainConfig& cfg, const ExampleGradFn& grad_fn) {
  cfg.validate();
  if (n_examples == 0) fail(ErrorKind::InsufficientData, "empty training set");
  Adam adam(params.size(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
  auto rng = make_rng(cfg.seed, 0x5348);
  std::vector<std::size_t> order(n_examples);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(params.size());
  TrainHistory history;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (auto i : order) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      try {
        loss = grad_fn(i, grad);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::NumericOverflow) throw TrainingError(epoch, e.what());
        throw;
      }
      const double norm = clip_gradient_norm(grad, cfg.clip_norm);
      if (!std::isfinite(loss) || !std::isfinite(norm)) {
        throw TrainingError(epoch, "loss diverged");
      }
      adam.step(params, grad);
      total += loss;
    }
    history.epoch_loss.push_back(total / static_cast<double>(n_examples));
  }
  return history;
}

}  // namespace blinkflow::learn
