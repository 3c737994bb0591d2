#ifndef MPRS_RVAE_RVAE_H_
#define MPRS_RVAE_RVAE_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mprs/geometry/decoder.h"
#include "mprs/geometry/geodesic.h"
#include "mprs/netkit/mlp.h"
#include "mprs/netkit/rbf.h"
#include "mprs/rng.h"

namespace mprs {

struct RvaeOptions {
  std::size_t data_dim = 64;
  std::size_t latent_dim = 2;
  std::vector<std::size_t> encoder_hidden = {64};
  std::vector<std::size_t> decoder_hidden = {64};
  RbfOptions rbf;
  double beta = 1.0;
  // Train the posterior-scale head with the variance parameters (sigma
  // stage) rather than with the mean networks.
  bool scale_head_in_sigma_stage = true;
  // Initial log posterior scale (bias of the scale head).
  double initial_log_scale = 0.0;
  // Inside the KL, use the optimized spline length instead of the midpoint
  // linearization.
  bool exact_distance = false;
  double logdet_floor = 1e-12;
  uint64_t seed = 0;
};

struct Posterior {
  Tensor mean;       // B x d
  Tensor log_scale;  // B x 1, isotropic
};

// Encoder (shared tanh trunk, mean head, log-scale head), decoder mean
// network, RBF precision network for the decoder scale, and a learned prior
// mean. The model is itself the decoder whose pullback metric is studied.
class RvaeModel : public Decoder {
 public:
  RvaeModel() = default;
  explicit RvaeModel(const RvaeOptions& options);

  Posterior Encode(const Tensor& x) const;
  // mu(z) + sigma(z) * eps.
  Tensor DecodeSample(const Tensor& z, const Tensor& eps) const;
  Tensor DecodeSample(const Tensor& z, Rng& rng) const;

  std::size_t latent_dim() const override { return options_.latent_dim; }
  std::size_t data_dim() const override { return options_.data_dim; }
  Tensor Mean(const Tensor& z) const override { return decoder_mean_.Forward(z); }
  Dual Mean(const Dual& z) const override { return decoder_mean_.Forward(z); }
  Tensor Sigma(const Tensor& z) const override { return decoder_sigma_.Sigma(z); }
  Dual Sigma(const Dual& z) const override { return decoder_sigma_.Sigma(z); }

  // Parameter groups. Mu stage: encoder trunk and mean head plus the decoder
  // mean (and the scale head unless it belongs to the sigma stage). Sigma
  // stage: RBF weights, prior mean (and the scale head).
  ParamList MuStageParams() const;
  ParamList SigmaStageParams() const;
  ParamList EncoderParams() const;
  ParamList DecoderParams() const;
  ParamList AllParams() const;
  // Non-trainable state saved with the model (RBF centers and bandwidths).
  ParamList Buffers() const;

  // Constant-parameter copy for tape-free evaluation.
  RvaeModel Frozen() const;

  const RvaeOptions& options() const { return options_; }
  RvaeOptions& mutable_options() { return options_; }
  const Mlp& encoder_trunk() const { return encoder_trunk_; }
  const Mlp& encoder_mean() const { return encoder_mean_; }
  const Mlp& encoder_scale() const { return encoder_scale_; }
  const Mlp& decoder_mean() const { return decoder_mean_; }
  RbfNet& decoder_sigma() { return decoder_sigma_; }
  const RbfNet& decoder_sigma() const { return decoder_sigma_; }
  const Tensor& prior_mean() const { return prior_mean_; }

 private:
  RvaeOptions options_;
  Mlp encoder_trunk_;
  Mlp encoder_mean_;
  Mlp encoder_scale_;
  Mlp decoder_mean_;
  RbfNet decoder_sigma_;
  Tensor prior_mean_;  // 1 x d
};

// Per-sample Gaussian negative log-likelihood, summed over pixels: B x 1.
Tensor ReconstructionNll(const Tensor& x, const Tensor& mean, const Tensor& sigma);

// z = mean + exp(log_scale) * eta.
Tensor Reparameterize(const Posterior& q, const Tensor& eta);

// Mean reconstruction NLL with one reparameterized latent per sample.
Tensor LossMu(const RvaeModel& model, const Tensor& x, const Tensor& eta);
Tensor LossMu(const RvaeModel& model, const Tensor& x, Rng& rng);

// Brownian-motion KL estimate log q(z|x) - log p(z) per sample (B x 1) for
// the metric of `decoder`.
Tensor KlBm(const Decoder& decoder, const Tensor& z, const Posterior& q, const Tensor& prior_mean,
            const SquaredDistanceFn& squared_distance, double logdet_floor = 1e-12);

// Distance used inside the KL, as selected by the model options.
SquaredDistanceFn ModelSquaredDistance(const RvaeModel& model);

// Reconstruction NLL plus beta times the KL, averaged over the batch.
Tensor LossSigma(const RvaeModel& model, const Tensor& x, const Tensor& eta);
Tensor LossSigma(const RvaeModel& model, const Tensor& x, Rng& rng);

}  // namespace mprs

#endif  // MPRS_RVAE_RVAE_H_
