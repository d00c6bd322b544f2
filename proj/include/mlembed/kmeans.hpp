#pragma once

#include "mlembed/matrix.hpp"

#include <cstdint>
#include <vector>

namespace mlembed {

struct KMeansOptions {
  int max_iters = 300;
  int restarts = 1;  // independent k-means++ seedings; the lowest inertia wins
};

struct KMeansResult {
  Matrix centroids;
  std::vector<int> labels;
  double inertia = 0.0;
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Runs until the assignment stops
// changing or max_iters. Ties go to the lowest centroid index. Throws
// ValidationError when k exceeds the number of distinct rows.
KMeansResult kmeans(const Matrix& x, int k, std::uint64_t seed, const KMeansOptions& options = {});

std::size_t count_distinct_rows(const Matrix& x);

}  // namespace mlembed
