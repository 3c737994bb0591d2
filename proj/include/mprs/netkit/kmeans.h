#ifndef MPRS_NETKIT_KMEANS_H_
#define MPRS_NETKIT_KMEANS_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mprs/diffcore/tensor.h"

namespace mprs {

struct KMeansOptions {
  std::size_t max_iterations = 100;
  uint64_t seed = 0;
};

struct KMeansResult {
  Tensor centers;                       // k x d
  std::vector<std::size_t> assignment;  // one cluster id per point
  std::vector<double> objective;        // within-cluster SS after each iteration
};

// k-means++ seeding followed by Lloyd iterations until assignments stop
// changing. A cluster that empties is re-seeded at the point farthest from
// its current center. Throws ContractError when points.rows() < k.
KMeansResult KMeans(const Tensor& points, std::size_t k, const KMeansOptions& options);

double WithinClusterSumOfSquares(const Tensor& points, const Tensor& centers,
                                 const std::vector<std::size_t>& assignment);

}  // namespace mprs

#endif  // MPRS_NETKIT_KMEANS_H_
