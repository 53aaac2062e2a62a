#include "blinkflow/learn/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "blinkflow/error.hpp"

namespace blinkflow::learn {

namespace {

void check_input(std::span<const double> values) {
  if (values.size() < 2) fail(ErrorKind::DegenerateLabeling, "k-means split needs at least 2 values");
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidInput, "k-means input must be finite");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) fail(ErrorKind::DegenerateLabeling, "all values are equal");
}

void fill_centroids(std::span<const double> values, Split1d& out) {
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[out.labels[i]] += values[i];
    ++count[out.labels[i]];
  }
  out.low_centroid = count[0] ? sum[0] / static_cast<double>(count[0]) : 0.0;
  out.high_centroid = count[1] ? sum[1] / static_cast<double>(count[1]) : 0.0;
  out.within_ss = within_cluster_ss(values, out.labels);
}

}  // namespace

double within_cluster_ss(std::span<const double> values, std::span<const int> labels) {
  double sum[2] = {0.0, 0.0};
  double count[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[labels[i]] += values[i];
    count[labels[i]] += 1.0;
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double mean = sum[labels[i]] / count[labels[i]];
    ss += (values[i] - mean) * (values[i] - mean);
  }
  return ss;
}

Split1d kmeans_split(std::span<const double> values) {
  check_input(values);
  const std::size_t n = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  // Centre on the mean so the prefix-sum variance formula stays accurate.
  const double shift = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  std::vector<double> s1(n + 1, 0.0);
  std::vector<double> s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sorted[i] - shift;
    s1[i + 1] = s1[i] + x;
    s2[i + 1] = s2[i] + x * x;
  }
  const auto cost = [&](std::size_t a, std::size_t b) {
    const double m = static_cast<double>(b - a);
    const double s = s1[b] - s1[a];
    return (s2[b] - s2[a]) - s * s / m;
  };

  std::size_t best_k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < n; ++k) {
    if (!(sorted[k] > sorted[k - 1])) continue;
    const double c = cost(0, k) + cost(k, n);
    if (c < best) {
      best = c;
      best_k = k;
    }
  }
  const double threshold = sorted[best_k];

  Split1d out;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = values[i] >= threshold ? 1 : 0;
  fill_centroids(values, out);
  return out;
}

Split1d kmeans_lloyd(std::span<const double> values, std::size_t max_iter) {
  check_input(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double c0 = *lo;
  double c1 = *hi;
  Split1d out;
  out.labels.assign(values.size(), 0);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const int label = std::abs(values[i] - c1) < std::abs(values[i] - c0) ? 1 : 0;
      changed |= label != out.labels[i];
      out.labels[i] = label;
    }
    fill_centroids(values, out);
    c0 = out.low_centroid;
    c1 = out.high_centroid;
    if (!changed && iter > 0) break;
  }
  return out;
}

}  // namespace blinkflow::learn
