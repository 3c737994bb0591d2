#ifndef MPRS_DIFFCORE_DUAL_H_
#define MPRS_DIFFCORE_DUAL_H_

#include <cstddef>
#include <vector>

#include "mprs/diffcore/tensor.h"

namespace mprs {

// Forward-mode value: a primal tensor plus one tangent per seeded direction,
// each shaped like the primal. Tangents are ordinary tensors, so a Jacobian
// built from them can itself be differentiated in reverse mode.
struct Dual {
  Tensor value;
  std::vector<Tensor> tangents;

  std::size_t directions() const { return tangents.size(); }
};

// Seeds z (B x d) with the d coordinate directions, shared by every row.
Dual SeedCoordinates(const Tensor& z);
Dual Constant(const Tensor& value, std::size_t directions);

// Every overload mirrors the Tensor primitive of the same name.
Dual MatMul(const Dual& a, const Tensor& w);
Dual Add(const Dual& a, const Dual& b);
Dual Add(const Dual& a, const Tensor& b);
Dual Sub(const Dual& a, const Dual& b);
Dual Sub(const Dual& a, const Tensor& b);
Dual Mul(const Dual& a, const Dual& b);
Dual Mul(const Dual& a, const Tensor& b);
Dual Neg(const Dual& a);
Dual Scale(const Dual& a, double factor);
Dual AddScalar(const Dual& a, double offset);
Dual Exp(const Dual& a);
Dual Log(const Dual& a);
Dual Tanh(const Dual& a);
Dual Relu(const Dual& a);
Dual Softplus(const Dual& a);
Dual Sigmoid(const Dual& a);
Dual Square(const Dual& a);
Dual Sqrt(const Dual& a);
Dual SumCols(const Dual& a);
Dual SliceCols(const Dual& a, std::size_t begin, std::size_t end);
Dual ConcatCols(const std::vector<Dual>& parts);

}  // namespace mprs

#endif  // MPRS_DIFFCORE_DUAL_H_
