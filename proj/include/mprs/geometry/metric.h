#ifndef MPRS_GEOMETRY_METRIC_H_
#define MPRS_GEOMETRY_METRIC_H_

#include <cstddef>
#include <vector>

#include "mprs/diffcore/tensor.h"
#include "mprs/geometry/decoder.h"

namespace mprs {

// Entries of the pullback metric G = Jmu^T Jmu + Jsigma^T Jsigma at every row
// of z (B x d), flattened row-major into a taped B x d^2 tensor. Taped with
// respect to z and to any decoder parameters.
Tensor MetricEntries(const Decoder& decoder, const Tensor& z);

// Per-row log det G from B x d^2 entries, with eigenvalues clamped below at
// `floor`. Returns B x 1. The gradient is G^-1 restricted to the unclamped
// eigenspace. Throws GeometryError on non-finite entries or an eigenvalue
// that is negative beyond round-off.
Tensor LogDetMetric(const Tensor& entries, std::size_t d, double floor = 1e-12);

struct MetricTensor {
  std::size_t dim = 0;
  std::vector<double> point;
  std::vector<double> g;             // d x d row-major, symmetrized
  std::vector<double> eigenvalues;   // ascending
  std::vector<double> eigenvectors;  // column-major, see SymmetricEigen
};

// Symmetrizes and decomposes a raw d x d matrix.
MetricTensor MakeMetricTensor(std::vector<double> point, std::span<const double> g,
                              std::size_t d);

// Metric at a single latent (1 x d). Throws GeometryError naming z when the
// Jacobian is not finite.
MetricTensor PullbackMetric(const Decoder& decoder, const Tensor& z);
std::vector<MetricTensor> PullbackMetricBatch(const Decoder& decoder, const Tensor& z);

struct CurvatureOptions {
  double step = 1e-3;
  // Central differences instead of the default one-sided scheme.
  bool central = false;
};

// K(z): Frobenius norm of the d x d matrix whose row j holds the rate of
// change of the sorted eigenvalues of G along coordinate j.
double CurvatureFd(const Decoder& decoder, const Tensor& z, const CurvatureOptions& options = {});
// One K per row of z.
std::vector<double> CurvatureFdBatch(const Decoder& decoder, const Tensor& z,
                                     const CurvatureOptions& options = {});

}  // namespace mprs

#endif  // MPRS_GEOMETRY_METRIC_H_
