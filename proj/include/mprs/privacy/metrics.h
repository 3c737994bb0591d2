#ifndef MPRS_PRIVACY_METRICS_H_
#define MPRS_PRIVACY_METRICS_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mprs/dataio/dataset.h"
#include "mprs/geometry/decoder.h"
#include "mprs/privacy/classifier.h"
#include "mprs/rng.h"

namespace mprs {

// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2) over Gaussian
// fits (unbiased covariance) of two feature sets. Needs >= 2 rows each.
double FrechetDistance(const Tensor& a, const Tensor& b);
// Features are the extractor's penultimate layer.
double FrechetFeatureDistance(const Classifier& extractor, const LabeledDataset& a,
                              const LabeledDataset& b);

// exp(mean_x KL(p(y|x) || p_bar)) for rows of class probabilities.
double DiversityScore(const Tensor& probabilities);
double DiversityScore(const Classifier& classifier, const LabeledDataset& ds);

struct UtilityReport {
  double test_accuracy = 0.0;
  double frechet_distance = 0.0;
  double diversity = 0.0;
};

// Data-space curvature proxy: for each point, the share of local covariance
// eigenvalue mass beyond the top `intrinsic_dim` in its neighborhood (the
// point and its k nearest others). Always in [0, 1]; 0 for a degenerate
// neighborhood.
std::vector<double> LocalCurvatureProxy(const Tensor& points, std::size_t k,
                                        std::size_t intrinsic_dim);

struct VulnerabilityReport {
  std::vector<double> proxy;
  std::size_t vulnerable = 0;
  std::size_t invulnerable = 0;
  double mean_vulnerable = 0.0;
  double mean_invulnerable = 0.0;
  // Point-biserial correlation; empty when either group is empty or the
  // proxy has zero variance.
  std::optional<double> correlation;
};

VulnerabilityReport CurvatureVulnerabilityReport(const Tensor& points,
                                                 const std::vector<bool>& vulnerable,
                                                 std::size_t k, std::size_t intrinsic_dim = 2);
// Group statistics for a precomputed proxy.
VulnerabilityReport CurvatureVulnerabilityReport(std::vector<double> proxy,
                                                 const std::vector<bool>& vulnerable);

struct ProbeOptions {
  double epsilon = 1e-2;
  std::size_t trials = 8;
  uint64_t seed = 0;
};

struct ProbeResult {
  std::vector<double> curvature;
  std::vector<double> mean_delta;
  std::optional<double> rank_correlation;
  std::string status = "ok";
};

// Per-sample loss of decoded images, B x data_dim -> B values. `reference`
// holds the clean decodes so a loss can depend on the unperturbed point.
using ProbeLoss = std::function<std::vector<double>(const Tensor& decoded, const Tensor& reference)>;

// For each latent: `trials` random unit directions scaled to epsilon, decode,
// mean |L(x') - L(x)|; then the Spearman correlation with `curvature`.
ProbeResult LossSensitivityProbe(const Decoder& decoder, const ProbeLoss& loss,
                                 std::span<const double> curvature, const Tensor& latents,
                                 const ProbeOptions& options);

// Classifier cross-entropy against its own prediction on the clean decode.
ProbeLoss ClassifierProbeLoss(const Classifier& classifier);

// Quadratic loss sum_j (x_j - center_j)^2 with its minimum at `center`.
ProbeLoss QuadraticProbeLoss(std::vector<double> center);

}  // namespace mprs

#endif  // MPRS_PRIVACY_METRICS_H_
