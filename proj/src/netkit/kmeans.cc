#include "mprs/netkit/kmeans.h"

#include <limits>

#include "mprs/errors.h"
#include "mprs/rng.h"

namespace mprs {
namespace {

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

// Returns true when any assignment changed.
bool Assign(const Tensor& points, const std::vector<double>& centers, std::size_t k,
            std::vector<std::size_t>& assignment) {
  const std::size_t n = points.rows(), d = points.cols();
  bool changed = false;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = points.row(i);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      double dist = SquaredDistance(p, std::span<const double>(centers).subspan(c * d, d));
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    if (assignment[i] != best) {
      assignment[i] = best;
      changed = true;
    }
  }
  return changed;
}

}  // namespace

double WithinClusterSumOfSquares(const Tensor& points, const Tensor& centers,
                                 const std::vector<std::size_t>& assignment) {
  double acc = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    acc += SquaredDistance(points.row(i), centers.row(assignment[i]));
  return acc;
}

KMeansResult KMeans(const Tensor& points, std::size_t k, const KMeansOptions& options) {
  const std::size_t n = points.rows(), d = points.cols();
  if (k == 0) throw ContractError("kmeans: k must be positive");
  if (n < k) {
    throw ContractError("kmeans: " + std::to_string(n) + " points cannot form " +
                        std::to_string(k) + " clusters");
  }
  Rng rng(options.seed, "kmeans");

  // k-means++ seeding.
  std::vector<double> centers(k * d);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.UniformIndex(n);
  std::copy(points.row(first).begin(), points.row(first).end(), centers.begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    auto prev = std::span<const double>(centers).subspan((c - 1) * d, d);
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(points.row(i), prev));
      total += nearest[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = rng.Uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.UniformIndex(n);
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(), centers.begin() + c * d);
  }

  KMeansResult result;
  std::vector<std::size_t> assignment(n, k);
  Assign(points, centers, k, assignment);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto p = points.row(i);
      for (std::size_t j = 0; j < d; ++j) sums[assignment[i] * d + j] += p[j];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j)
        centers[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        double dist = SquaredDistance(
            points.row(i), std::span<const double>(centers).subspan(assignment[i] * d, d));
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      std::copy(points.row(far).begin(), points.row(far).end(), centers.begin() + c * d);
    }
    bool changed = Assign(points, centers, k, assignment);
    result.objective.push_back(
        WithinClusterSumOfSquares(points, Tensor(k, d, centers), assignment));
    if (!changed) break;
  }
  result.centers = Tensor(k, d, std::move(centers));
  result.assignment = std::move(assignment);
  return result;
}

}  // namespace mprs
