#ifndef MPRS_OBFUSCATOR_OBFUSCATOR_H_
#define MPRS_OBFUSCATOR_OBFUSCATOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mprs/dataio/dataset.h"
#include "mprs/dataio/manifest.h"
#include "mprs/geometry/geodesic.h"
#include "mprs/geometry/metric.h"
#include "mprs/netkit/adam.h"
#include "mprs/netkit/mlp.h"
#include "mprs/netkit/rbf.h"
#include "mprs/rvae/rvae.h"

namespace mprs {

struct EstimatorOptions {
  std::vector<std::size_t> hidden = {64, 64};
  uint64_t seed = 0;
};

// Regression network z -> K_hat(z) >= 0 (softplus head). Predictions are
// multiplied by a fixed output scale, set from the mean training target so
// the network itself regresses values of order one.
class CurvatureEstimator {
 public:
  CurvatureEstimator() = default;
  CurvatureEstimator(std::size_t latent_dim, const EstimatorOptions& options);
  CurvatureEstimator(Mlp body, double output_scale);

  // B x d -> B x 1, taped with respect to the body parameters.
  Tensor Predict(const Tensor& z) const;
  // Values only. Throws ObfuscationError on a non-finite prediction.
  std::vector<double> Evaluate(const Tensor& z) const;

  const Mlp& body() const { return body_; }
  ParamList Parameters() const { return body_.Parameters(); }
  double output_scale() const { return output_scale_; }
  void set_output_scale(double scale);
  std::size_t latent_dim() const { return body_.in_dim(); }

 private:
  Mlp body_;
  double output_scale_ = 1.0;
};

struct EstimatorTrainOptions {
  std::size_t epochs = 50;
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  // Std of the Gaussian jitter added to posterior means.
  double jitter = 0.1;
  // Copies of the mean set drawn per fit (each with fresh jitter).
  std::size_t draws = 1;
  // Set the output scale from the mean target before training.
  bool normalize_targets = true;
  CurvatureOptions curvature;
  uint64_t seed = 0;
};

struct EstimatorReport {
  std::vector<double> epoch_mse;
  double final_mse = 0.0;
};

// Posterior means plus N(0, jitter^2) noise, `draws` copies stacked.
Tensor JitteredLatents(const Tensor& means, double jitter, std::size_t draws, Rng& rng);

// curvature_fd targets. Throws DataError naming the first latent whose target
// is not finite.
std::vector<double> CurvatureTargets(const Decoder& decoder, const Tensor& latents,
                                     const CurvatureOptions& options);

double EstimatorMse(const CurvatureEstimator& estimator, const Tensor& latents,
                    std::span<const double> targets);

// Minibatch Adam on the squared error against fixed targets, using the
// caller's optimizer so its moments persist across calls.
EstimatorReport TrainEstimator(CurvatureEstimator& estimator, Adam& optimizer,
                               const Tensor& latents, std::span<const double> targets,
                               const EstimatorTrainOptions& options);
// Same, drawing minibatch orders from `rng` instead of options.seed.
EstimatorReport TrainEstimator(CurvatureEstimator& estimator, Adam& optimizer,
                               const Tensor& latents, std::span<const double> targets,
                               const EstimatorTrainOptions& options, Rng& rng);

// Samples jittered latents around `means`, computes targets on the frozen
// decoder, and trains. Returns the per-epoch training MSE.
EstimatorReport FitEstimator(CurvatureEstimator& estimator, const Decoder& decoder,
                             const Tensor& means, const EstimatorTrainOptions& options);

// Index of the RBF center with the largest kernel activation at z (1 x d);
// the lowest index wins ties.
std::size_t SelectEndpoint(const RbfNet& rbf, const Tensor& z);
std::vector<std::size_t> SelectEndpoints(const RbfNet& rbf, const Tensor& z);

struct PrefixChoice {
  std::size_t i_max = 0;
  std::size_t i_star = 0;
};

// i_max = first argmax over the whole sequence; i_star = first argmin over
// indices 0..i_max.
PrefixChoice ChoosePerturbationIndex(std::span<const double> curvature);

struct PerturbationOutcome {
  std::vector<double> original;
  std::size_t endpoint = 0;
  GeodesicPath path;
  std::size_t i_max = 0;
  std::size_t i_star = 0;
  std::vector<double> perturbed;
};

// Geodesic from each row of z to its selected RBF center, scored by the
// estimator; the perturbed latent is the path sample at i_star.
std::vector<PerturbationOutcome> PerturbBatch(const RvaeModel& model,
                                              const CurvatureEstimator& estimator,
                                              const Tensor& z, const GeodesicOptions& options);
PerturbationOutcome Perturb(const RvaeModel& model, const CurvatureEstimator& estimator,
                            const Tensor& z, const GeodesicOptions& options);

struct PublishedDataset {
  LabeledDataset data;
  std::vector<ManifestRecord> manifest;
};

struct PublishOptions {
  GeodesicOptions geodesic;
  // Paths optimized together.
  std::size_t chunk = 256;
};

// Encodes every image to its posterior mean, perturbs it, and decodes the
// result with zero noise, clamped to [0, 1]. Labels are kept.
PublishedDataset Publish(const RvaeModel& model, const CurvatureEstimator& estimator,
                         const LabeledDataset& dataset, const PublishOptions& options = {});

}  // namespace mprs

#endif  // MPRS_OBFUSCATOR_OBFUSCATOR_H_
