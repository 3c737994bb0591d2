#include "mprs/netkit/rbf.h"

#include <algorithm>
#include <cmath>

#include "mprs/errors.h"
#include "mprs/netkit/kmeans.h"

namespace mprs {

RbfNet::RbfNet(std::size_t latent_dim, std::size_t out_dim, const RbfOptions& options)
    : floor_(options.floor), out_dim_(out_dim) {
  if (options.floor <= 0.0) throw ContractError("RBF precision floor must be positive");
  if (options.centers == 0) throw ContractError("RBF network needs at least one center");
  if (options.initial_weight <= 0.0) throw ContractError("RBF initial weight must be positive");
  const std::size_t k = options.centers;
  // Placeholder centers on a spiral; FitCenters replaces them.
  std::vector<double> c(k * latent_dim, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double r = std::sqrt(static_cast<double>(i) + 0.5);
    for (std::size_t j = 0; j < latent_dim; ++j)
      c[i * latent_dim + j] = 0.5 * r * std::cos(2.399963 * static_cast<double>(i) + j);
  }
  centers_ = Tensor::Variable(k, latent_dim, std::move(c));
  centers_.SetRequiresGrad(false);
  gammas_ = Tensor(1, k, 1.0);
  const double raw = std::log(std::expm1(options.initial_weight));
  raw_weights_ = Tensor::Variable(k, options.per_channel ? out_dim : 1,
                                  std::vector<double>(k * (options.per_channel ? out_dim : 1), raw));
}

RbfNet::RbfNet(Tensor centers, Tensor gammas, const Tensor& weights, double floor)
    : centers_(centers.Clone()), gammas_(gammas.Clone()), floor_(floor) {
  const std::size_t k = centers_.rows();
  if (gammas_.rows() != 1 || gammas_.cols() != k) {
    throw DimensionError("RBF gammas must be 1 x K, got " + gammas_.ShapeString());
  }
  if (weights.rows() != k) throw DimensionError("RBF weights must have K rows");
  if (floor <= 0.0) throw ContractError("RBF precision floor must be positive");
  for (double g : gammas_.data())
    if (!(g > 0.0)) throw ContractError("RBF bandwidths must be positive");
  out_dim_ = weights.cols();
  std::vector<double> raw(weights.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double w = weights.data()[i];
    if (w < 0.0) throw ContractError("RBF weights must be nonnegative");
    // Inverse softplus; w = 0 maps to a very negative raw value.
    raw[i] = w > 0.0 ? std::log(std::expm1(w)) : -745.0;
  }
  raw_weights_ = Tensor::Variable(k, weights.cols(), std::move(raw));
}

Tensor RbfNet::CenterNorms() const {
  const std::size_t k = centers_.rows(), d = centers_.cols();
  std::vector<double> norms(k, 0.0);
  auto c = centers_.data();
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < d; ++j) norms[i] += c[i * d + j] * c[i * d + j];
  return Tensor(1, k, std::move(norms));
}

Tensor RbfNet::Activations(const Tensor& z) const {
  if (z.cols() != latent_dim()) {
    throw DimensionError("RBF activations: latent width " + std::to_string(z.cols()) +
                         " but centers are " + centers_.ShapeString());
  }
  const std::size_t b = z.rows(), k = num_centers(), d = latent_dim();
  std::vector<double> out(b * k);
  auto c = centers_.data();
  auto g = gammas_.data();
  for (std::size_t r = 0; r < b; ++r) {
    auto zr = z.row(r);
    for (std::size_t i = 0; i < k; ++i) {
      double dist2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = zr[j] - c[i * d + j];
        dist2 += diff * diff;
      }
      out[r * k + i] = std::exp(-g[i] * dist2);
    }
  }
  return Tensor(b, k, std::move(out));
}

void RbfNet::FitCenters(const Tensor& latents, uint64_t seed) {
  const std::size_t k = num_centers(), d = latent_dim();
  if (latents.cols() != d) throw DimensionError("FitCenters: latent width mismatch");
  KMeansOptions options;
  options.seed = seed;
  KMeansResult km = KMeans(latents, k, options);
  std::vector<double> sq(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < latents.rows(); ++i) {
    const std::size_t a = km.assignment[i];
    auto p = latents.row(i);
    auto c = km.centers.row(a);
    for (std::size_t j = 0; j < d; ++j) sq[a] += (p[j] - c[j]) * (p[j] - c[j]);
    ++counts[a];
  }
  // Clusters with zero spread borrow the mean spread of the others.
  double mean_spread = 0.0;
  std::size_t spread_count = 0;
  for (std::size_t a = 0; a < k; ++a) {
    if (counts[a] > 0 && sq[a] > 0.0) {
      mean_spread += sq[a] / static_cast<double>(counts[a]);
      ++spread_count;
    }
  }
  mean_spread = spread_count > 0 ? mean_spread / static_cast<double>(spread_count) : 1.0;
  auto centers = centers_.MutableLeafData();
  auto gammas = gammas_.MutableLeafData();
  std::copy(km.centers.data().begin(), km.centers.data().end(), centers.begin());
  for (std::size_t a = 0; a < k; ++a) {
    double spread = counts[a] > 0 && sq[a] > 0.0 ? sq[a] / static_cast<double>(counts[a])
                                                  : mean_spread;
    gammas[a] = 1.0 / (2.0 * spread);
  }
}

Tensor RbfNet::Weights() const { return Softplus(raw_weights_).Detach(); }

ParamList RbfNet::Parameters() const { return {{"decoder_sigma.raw_weights", raw_weights_}}; }

ParamList RbfNet::Buffers() const {
  return {{"decoder_sigma.centers", centers_}, {"decoder_sigma.gammas", gammas_}};
}

RbfNet RbfNet::Detached() const {
  RbfNet out = *this;
  out.centers_ = centers_.Clone();
  out.gammas_ = gammas_.Clone();
  out.raw_weights_ = raw_weights_.Detach();
  return out;
}

}  // namespace mprs
