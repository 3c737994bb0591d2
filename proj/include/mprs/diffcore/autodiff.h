#ifndef MPRS_DIFFCORE_AUTODIFF_H_
#define MPRS_DIFFCORE_AUTODIFF_H_

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "mprs/diffcore/dual.h"
#include "mprs/diffcore/tensor.h"

namespace mprs {

// Gradients of a scalar root with respect to every taped leaf reachable from
// it, keyed by leaf identity.
class Gradients {
 public:
  bool Has(const Tensor& leaf) const;
  // Gradient shaped like `leaf`; zeros if the leaf did not participate.
  Tensor Of(const Tensor& leaf) const;
  std::span<const double> Raw(const Tensor& leaf) const;
  std::size_t size() const { return grads_.size(); }

 private:
  friend Gradients Backward(const Tensor& root);
  std::unordered_map<const internal::Node*, std::vector<double>> grads_;
};

// Reverse sweep from a taped 1 x 1 root. Throws ContractError otherwise.
Gradients Backward(const Tensor& root);

using DualMap = std::function<Dual(const Dual&)>;

// J_f(z) v by dual propagation. z and v are 1 x d (or matching B x d for a
// batch of independent points).
Tensor Jvp(const DualMap& f, const Tensor& z, const Tensor& v);

// M x d Jacobian of f at a single point z (1 x d). Column i equals
// Jvp(f, z, e_i) bit for bit.
Tensor Jacobian(const DualMap& f, const Tensor& z);

}  // namespace mprs

#endif  // MPRS_DIFFCORE_AUTODIFF_H_
