#include "mprs/privacy/metrics.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mprs/errors.h"
#include "mprs/linalg.h"

namespace mprs {
namespace {

void MeanCov(const Tensor& x, std::vector<double>& mean, std::vector<double>& cov) {
  const std::size_t n = x.rows(), d = x.cols();
  mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x.at(i, j);
  for (double& m : mean) m /= static_cast<double>(n);
  cov.assign(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double da = x.at(i, a) - mean[a];
      for (std::size_t b = a; b < d; ++b) cov[a * d + b] += da * (x.at(i, b) - mean[b]);
    }
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov[a * d + b] /= denom;
      cov[b * d + a] = cov[a * d + b];
    }
}

std::vector<double> MatMulSquare(const std::vector<double>& a, const std::vector<double>& b,
                                 std::size_t d) {
  std::vector<double> out(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] += a[i * d + k] * b[k * d + j];
  return out;
}

double Trace(const std::vector<double>& a, std::size_t d) {
  double t = 0.0;
  for (std::size_t i = 0; i < d; ++i) t += a[i * d + i];
  return t;
}

}  // namespace

double FrechetDistance(const Tensor& a, const Tensor& b) {
  if (a.rows() < 2 || b.rows() < 2) throw ContractError("Frechet distance needs >= 2 samples per set");
  if (a.cols() != b.cols()) throw DimensionError("Frechet distance: feature widths differ");
  const std::size_t d = a.cols();
  std::vector<double> ma, ca, mb, cb;
  MeanCov(a, ma, ca);
  MeanCov(b, mb, cb);
  double diff = 0.0;
  for (std::size_t j = 0; j < d; ++j) diff += (ma[j] - mb[j]) * (ma[j] - mb[j]);
  // tr((Sa Sb)^1/2) = tr((Sa^1/2 Sb Sa^1/2)^1/2), the inner matrix symmetric PSD.
  std::vector<double> ra = SqrtmPsd(ca, d);
  std::vector<double> inner = MatMulSquare(MatMulSquare(ra, cb, d), ra, d);
  const double cross = Trace(SqrtmPsd(inner, d), d);
  return std::max(0.0, diff + Trace(ca, d) + Trace(cb, d) - 2.0 * cross);
}

double FrechetFeatureDistance(const Classifier& extractor, const LabeledDataset& a,
                              const LabeledDataset& b) {
  return FrechetDistance(extractor.Features(a.Images()), extractor.Features(b.Images()));
}

double DiversityScore(const Tensor& p) {
  const std::size_t n = p.rows(), c = p.cols();
  if (n == 0) throw ContractError("diversity score of an empty set");
  std::vector<double> mean(c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) mean[j] += p.at(i, j) / static_cast<double>(n);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double q = p.at(i, j);
      if (q > 0.0) kl += q * (std::log(q) - std::log(mean[j]));
    }
  return std::exp(kl / static_cast<double>(n));
}

double DiversityScore(const Classifier& classifier, const LabeledDataset& ds) {
  return DiversityScore(classifier.Probabilities(ds.Images()));
}

std::vector<double> LocalCurvatureProxy(const Tensor& points, std::size_t k,
                                        std::size_t intrinsic_dim) {
  const std::size_t n = points.rows(), d = points.cols();
  if (k == 0 || k >= n) {
    throw ContractError("neighborhood size " + std::to_string(k) + " needs 1 <= k < " +
                        std::to_string(n));
  }
  std::vector<double> out(n, 0.0);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double t = points.at(i, c) - points.at(j, c);
        acc += t * t;
      }
      dist[j] = {acc, j};
    }
    dist[i].first = -1.0;  // the point itself comes first
    std::partial_sort(dist.begin(), dist.begin() + k + 1, dist.end());
    std::vector<double> nb;
    for (std::size_t m = 0; m <= k; ++m) {
      auto row = points.row(dist[m].second);
      nb.insert(nb.end(), row.begin(), row.end());
    }
    std::vector<double> mean, cov;
    MeanCov(Tensor(k + 1, d, std::move(nb)), mean, cov);
    std::vector<double> ev = EigenvaluesSymmetric(cov, d);  // ascending
    // Eigenvalues below round-off of the largest count as zero.
    const double floor = 1e-12 * std::max(0.0, ev.back());
    double total = 0.0, tail = 0.0;
    for (std::size_t m = 0; m < d; ++m) {
      const double v = ev[m] > floor ? ev[m] : 0.0;
      total += v;
      if (m + intrinsic_dim < d) tail += v;
    }
    out[i] = total > 0.0 ? std::clamp(tail / total, 0.0, 1.0) : 0.0;
  }
  return out;
}

VulnerabilityReport CurvatureVulnerabilityReport(std::vector<double> proxy,
                                                 const std::vector<bool>& vulnerable) {
  if (vulnerable.size() != proxy.size()) throw DimensionError("one vulnerability flag per point");
  VulnerabilityReport r;
  r.proxy = std::move(proxy);
  std::vector<double> flag(vulnerable.size());
  for (std::size_t i = 0; i < vulnerable.size(); ++i) {
    flag[i] = vulnerable[i] ? 1.0 : 0.0;
    if (vulnerable[i]) {
      r.mean_vulnerable += r.proxy[i];
      ++r.vulnerable;
    } else {
      r.mean_invulnerable += r.proxy[i];
      ++r.invulnerable;
    }
  }
  if (r.vulnerable) r.mean_vulnerable /= static_cast<double>(r.vulnerable);
  if (r.invulnerable) r.mean_invulnerable /= static_cast<double>(r.invulnerable);
  const double c = PearsonCorrelation(r.proxy, flag);
  if (std::isfinite(c)) r.correlation = c;
  return r;
}

VulnerabilityReport CurvatureVulnerabilityReport(const Tensor& points,
                                                 const std::vector<bool>& vulnerable,
                                                 std::size_t k, std::size_t intrinsic_dim) {
  if (vulnerable.size() != points.rows()) throw DimensionError("one vulnerability flag per point");
  return CurvatureVulnerabilityReport(LocalCurvatureProxy(points, k, intrinsic_dim), vulnerable);
}

ProbeResult LossSensitivityProbe(const Decoder& decoder, const ProbeLoss& loss,
                                 std::span<const double> curvature, const Tensor& latents,
                                 const ProbeOptions& options) {
  const std::size_t n = latents.rows(), d = latents.cols();
  if (d != decoder.latent_dim()) throw DimensionError("probe: latent width mismatch");
  if (curvature.size() != n) throw DimensionError("probe: one curvature value per latent");
  if (options.trials == 0) throw ContractError("probe needs at least one trial");
  Rng rng(options.seed, "probe.directions");
  ProbeResult r;
  r.curvature.assign(curvature.begin(), curvature.end());
  Tensor clean;
  {
    NoGradGuard no_grad;
    clean = decoder.Mean(latents);
  }
  const std::vector<double> base = loss(clean, clean);
  r.mean_delta.assign(n, 0.0);
  for (std::size_t t = 0; t < options.trials; ++t) {
    std::vector<double> moved(latents.data().begin(), latents.data().end());
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> dir = rng.NormalVector(d);
      double norm = 0.0;
      for (double v : dir) norm += v * v;
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < d; ++j) moved[i * d + j] += options.epsilon * dir[j] / norm;
    }
    Tensor decoded;
    {
      NoGradGuard no_grad;
      decoded = decoder.Mean(Tensor(n, d, std::move(moved)));
    }
    std::vector<double> l = loss(decoded, clean);
    for (std::size_t i = 0; i < n; ++i)
      r.mean_delta[i] += std::abs(l[i] - base[i]) / static_cast<double>(options.trials);
  }
  const double rho = SpearmanCorrelation(r.curvature, r.mean_delta);
  if (std::isfinite(rho)) {
    r.rank_correlation = rho;
  } else {
    double lo = r.curvature.empty() ? 0.0 : r.curvature[0], hi = lo;
    for (double k : r.curvature) {
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
    r.status = lo == hi ? "degenerate: zero-variance curvature" : "degenerate: zero-variance loss change";
  }
  return r;
}

ProbeLoss ClassifierProbeLoss(const Classifier& classifier) {
  return [classifier](const Tensor& decoded, const Tensor& reference) {
    std::vector<int> target = classifier.Predict(reference);
    NoGradGuard no_grad;
    Tensor logp = LogSoftmax(classifier.Logits(decoded));
    std::vector<double> out(decoded.rows());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = -logp.at(i, static_cast<std::size_t>(target[i]));
    return out;
  };
}

ProbeLoss QuadraticProbeLoss(std::vector<double> center) {
  return [center = std::move(center)](const Tensor& x, const Tensor&) {
    if (x.cols() != center.size()) throw DimensionError("quadratic loss: width mismatch");
    std::vector<double> out(x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) {
        const double d = x.at(i, j) - center[j];
        out[i] += d * d;
      }
    return out;
  };
}

}  // namespace mprs
