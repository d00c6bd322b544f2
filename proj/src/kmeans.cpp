#include "mlembed/kmeans.hpp"

#include "mlembed/errors.hpp"
#include "mlembed/random.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace mlembed {

std::size_t count_distinct_rows(const Matrix& x) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

namespace {

Matrix seed_plus_plus(const Matrix& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  Matrix centers(k, x.cols());
  centers.row(0) = x.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n))));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) dist[i] = (x.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      pick = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist[i];
        if (dist[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        // Rounding left the target past the last positive weight.
        for (Eigen::Index i = n - 1; i >= 0; --i) {
          if (dist[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    }
    centers.row(c) = x.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) dist[i] = std::min(dist[i], (x.row(i) - centers.row(c)).squaredNorm());
  }
  return centers;
}

KMeansResult lloyd(const Matrix& x, Matrix centers, int max_iters) {
  const Eigen::Index n = x.rows();
  const int k = static_cast<int>(centers.rows());
  KMeansResult result;
  result.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> best(static_cast<std::size_t>(n));

  for (int iter = 0; iter < std::max(max_iters, 1); ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int arg = 0;
      double d_best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < d_best) {
          d_best = d;
          arg = c;
        }
      }
      best[i] = d_best;
      if (result.labels[i] != arg) {
        result.labels[i] = arg;
        changed = true;
      }
    }
    result.iterations = iter + 1;
    if (!changed && iter > 0) break;

    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(result.labels[i]) += x.row(i);
      ++counts[result.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: take over the point farthest from its centroid.
      Eigen::Index far = 0;
      for (Eigen::Index i = 1; i < n; ++i) {
        if (best[i] > best[far]) far = i;
      }
      centers.row(c) = x.row(far);
      best[far] = 0.0;
    }
  }

  result.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int arg = 0;
    double d_best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double d = (x.row(i) - centers.row(c)).squaredNorm();
      if (d < d_best) {
        d_best = d;
        arg = c;
      }
    }
    result.labels[i] = arg;
    result.inertia += d_best;
  }
  result.centroids = std::move(centers);
  return result;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, int k, std::uint64_t seed, const KMeansOptions& options) {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (x.rows() == 0) throw ValidationError("k-means needs at least one row");
  const std::size_t distinct = count_distinct_rows(x);
  if (static_cast<std::size_t>(k) > distinct) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds the " + std::to_string(distinct) + " distinct rows");
  }
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(options.restarts, 1); ++r) {
    Rng rng(derive_seed(seed, 0x6b6d65616e73ULL, static_cast<std::uint64_t>(r)));
    auto result = lloyd(x, seed_plus_plus(x, k, rng), options.max_iters);
    if (result.inertia < best.inertia) best = std::move(result);
  }
  return best;
}

}  // namespace mlembed
