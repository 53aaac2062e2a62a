#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "blinkflow/error.hpp"
#include "blinkflow/random.hpp"

namespace blinkflow::learn {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// tanh through a single exp; saturates cleanly to +-1 when exp overflows.
inline double fast_tanh(double x) { return 1.0 - 2.0 / (1.0 + std::exp(2.0 * x)); }

// Max-shifted softmax. Throws NumericOverflow on non-finite logits.
inline std::vector<double> softmax(std::span<const double> logits) {
  for (double z : logits) {
    if (!std::isfinite(z)) fail(ErrorKind::NumericOverflow, "non-finite logit");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(logits[k] - top);
    sum += p[k];
  }
  for (auto& x : p) x /= sum;
  return p;
}

// -log p[target], floored to stay finite when p underflows.
inline double cross_entropy(std::span<const double> probs, std::size_t target) {
  return -std::log(std::max(probs[target], 1e-300));
}

// First maximal index, so ties resolve to the smallest class.
inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Uniform in +-1/sqrt(fan_in).
inline void init_uniform(std::span<double> w, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& x : w) x = dist(rng);
}

}  // namespace blinkflow::learn
