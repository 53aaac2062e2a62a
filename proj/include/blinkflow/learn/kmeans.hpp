#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace blinkflow::learn {

struct Split1d {
  std::vector<int> labels;  // 0 = low cluster, 1 = high cluster
  double low_centroid = 0.0;
  double high_centroid = 0.0;
  double within_ss = 0.0;
};

// Globally optimal two-cluster partition of scalars (minimum within-cluster
// sum of squares). The optimum is a threshold split of the sorted values, so
// every gap between distinct sorted values is scored with prefix sums.
// Throws DegenerateLabeling when fewer than two distinct values are given.
Split1d kmeans_split(std::span<const double> values);

// Plain Lloyd iteration with centroids started at min and max. Reaches a fixed
// point, not necessarily the global optimum.
Split1d kmeans_lloyd(std::span<const double> values, std::size_t max_iter = 100);

double within_cluster_ss(std::span<const double> values, std::span<const int> labels);

}  // namespace blinkflow::learn
