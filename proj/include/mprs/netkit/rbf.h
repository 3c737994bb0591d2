#ifndef MPRS_NETKIT_RBF_H_
#define MPRS_NETKIT_RBF_H_

#include <cstddef>
#include <cstdint>

#include "mprs/diffcore/dual.h"
#include "mprs/diffcore/tensor.h"
#include "mprs/netkit/mlp.h"

namespace mprs {

struct RbfOptions {
  std::size_t centers = 64;
  // Precision floor zeta: sigma(z) <= zeta^(-1/2) everywhere.
  double floor = 1e-2;
  // Per-channel weights w_km (K x M) or one weight per center shared by all
  // output channels (K x 1).
  bool per_channel = true;
  // Initial softplus(raw) weight.
  double initial_weight = 1.0;
};

// Precision network beta(z) = sum_k w_k exp(-gamma_k |z - c_k|^2) + zeta with
// sigma(z) = beta(z)^(-1/2). Centers and bandwidths are fixed; the weights
// are trained through a softplus so they stay nonnegative.
class RbfNet {
 public:
  RbfNet() = default;
  RbfNet(std::size_t latent_dim, std::size_t out_dim, const RbfOptions& options);
  // Explicit construction, mainly for tests. weights are the actual w
  // (nonnegative) values.
  RbfNet(Tensor centers, Tensor gammas, const Tensor& weights, double floor);

  template <typename V>
  V Precision(const V& z) const {
    // |z - c|^2 = |z|^2 + |c|^2 - 2 z.c, expanded so it stays a composition of
    // primitives (and therefore forward- and reverse-differentiable).
    V z2 = SumCols(Square(z));
    V cross = Scale(MatMul(z, Transpose(centers_)), -2.0);
    V dist2 = Add(Add(cross, CenterNorms()), z2);
    V kernel = Exp(Mul(Neg(dist2), gammas_));
    V beta = MatMul(kernel, Softplus(raw_weights_));
    if (raw_weights_.cols() != out_dim_) beta = Add(beta, Tensor(1, out_dim_, 0.0));
    return AddScalar(beta, floor_);
  }

  template <typename V>
  V Sigma(const V& z) const {
    return Exp(Scale(Log(Precision(z)), -0.5));
  }

  // Kernel activations exp(-gamma_k |z - c_k|^2) computed by direct
  // differences, one row per point. Not taped.
  Tensor Activations(const Tensor& z) const;

  // Places centers by k-means on `latents` and sets
  // gamma_k = 1 / (2 * mean squared member distance to c_k).
  void FitCenters(const Tensor& latents, uint64_t seed);

  std::size_t num_centers() const { return centers_.rows(); }
  std::size_t latent_dim() const { return centers_.cols(); }
  std::size_t out_dim() const { return out_dim_; }
  double floor() const { return floor_; }
  const Tensor& centers() const { return centers_; }
  const Tensor& gammas() const { return gammas_; }
  const Tensor& raw_weights() const { return raw_weights_; }
  Tensor Weights() const;

  // Trainable parameters (the raw weights).
  ParamList Parameters() const;
  // Fixed geometry (centers and bandwidths), persisted in checkpoints.
  ParamList Buffers() const;
  RbfNet Detached() const;

 private:
  Tensor CenterNorms() const;  // 1 x K

  Tensor centers_;      // K x d
  Tensor gammas_;       // 1 x K
  Tensor raw_weights_;  // K x M or K x 1
  double floor_ = 1e-2;
  std::size_t out_dim_ = 0;
};

}  // namespace mprs

#endif  // MPRS_NETKIT_RBF_H_
