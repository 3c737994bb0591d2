#ifndef MPRS_LINALG_H_
#define MPRS_LINALG_H_

#include <cstddef>
#include <span>
#include <vector>

namespace mprs {

struct SymmetricEigen {
  // Ascending.
  std::vector<double> values;
  // Column-major: vectors[k * n + i] is component i of the k-th eigenvector.
  std::vector<double> vectors;
};

// Cyclic Jacobi rotations on a symmetric n x n row-major matrix. The input
// is symmetrized first; exact to round-off for the small n used here.
SymmetricEigen EigenSymmetric(std::span<const double> matrix, std::size_t n);

// Eigenvalues only, ascending.
std::vector<double> EigenvaluesSymmetric(std::span<const double> matrix, std::size_t n);

// Symmetric PSD square root via eigendecomposition with eigenvalues floored
// at zero.
std::vector<double> SqrtmPsd(std::span<const double> matrix, std::size_t n);

// Spearman rank correlation with average ranks for ties. Returns NaN when
// either input has zero variance.
double SpearmanCorrelation(std::span<const double> x, std::span<const double> y);
double PearsonCorrelation(std::span<const double> x, std::span<const double> y);

}  // namespace mprs

#endif  // MPRS_LINALG_H_
