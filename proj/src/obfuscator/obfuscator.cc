#include "mprs/obfuscator/obfuscator.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mprs/diffcore/autodiff.h"
#include "mprs/errors.h"

namespace mprs {

CurvatureEstimator::CurvatureEstimator(std::size_t latent_dim, const EstimatorOptions& options) {
  Rng rng(options.seed, "estimator.init");
  std::vector<std::size_t> widths{latent_dim};
  widths.insert(widths.end(), options.hidden.begin(), options.hidden.end());
  widths.push_back(1);
  std::vector<Activation> acts(options.hidden.size(), Activation::kTanh);
  acts.push_back(Activation::kSoftplus);
  body_ = Mlp("estimator", widths, acts, rng);
}

CurvatureEstimator::CurvatureEstimator(Mlp body, double output_scale) : body_(std::move(body)) {
  if (body_.out_dim() != 1) throw ContractError("curvature estimator must output a scalar");
  set_output_scale(output_scale);
}

void CurvatureEstimator::set_output_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ContractError("estimator output scale must be positive and finite");
  }
  output_scale_ = scale;
}

Tensor CurvatureEstimator::Predict(const Tensor& z) const {
  Tensor out = body_.Forward(z);
  return output_scale_ == 1.0 ? out : Scale(out, output_scale_);
}

std::vector<double> CurvatureEstimator::Evaluate(const Tensor& z) const {
  NoGradGuard no_grad;
  std::vector<double> out = Predict(z).ToVector();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) {
      throw ObfuscationError("curvature estimate is not finite for latent row " +
                             std::to_string(i));
    }
  }
  return out;
}

Tensor JitteredLatents(const Tensor& means, double jitter, std::size_t draws, Rng& rng) {
  std::vector<double> out;
  out.reserve(means.size() * draws);
  for (std::size_t k = 0; k < draws; ++k)
    for (double m : means.data()) out.push_back(m + jitter * rng.Normal());
  return Tensor(means.rows() * draws, means.cols(), std::move(out));
}

std::vector<double> CurvatureTargets(const Decoder& decoder, const Tensor& latents,
                                     const CurvatureOptions& options) {
  auto fail = [&](std::size_t i) {
    std::ostringstream msg;
    msg << "non-finite curvature target at latent " << i << " (";
    auto row = latents.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) msg << (j ? ", " : "") << row[j];
    msg << ")";
    throw DataError(msg.str());
  };
  for (std::size_t i = 0; i < latents.rows(); ++i)
    for (double v : latents.row(i))
      if (!std::isfinite(v)) fail(i);
  std::vector<double> targets;
  try {
    targets = CurvatureFdBatch(decoder, latents, options);
  } catch (const GeometryError& e) {
    throw DataError(std::string("curvature targets: ") + e.what());
  }
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (!std::isfinite(targets[i])) fail(i);
  return targets;
}

double EstimatorMse(const CurvatureEstimator& estimator, const Tensor& latents,
                    std::span<const double> targets) {
  std::vector<double> pred = estimator.Evaluate(latents);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - targets[i]) * (pred[i] - targets[i]);
  return pred.empty() ? 0.0 : acc / static_cast<double>(pred.size());
}

EstimatorReport TrainEstimator(CurvatureEstimator& estimator, Adam& optimizer,
                               const Tensor& latents, std::span<const double> targets,
                               const EstimatorTrainOptions& options) {
  Rng rng(options.seed, "estimator.batches");
  return TrainEstimator(estimator, optimizer, latents, targets, options, rng);
}

EstimatorReport TrainEstimator(CurvatureEstimator& estimator, Adam& optimizer,
                               const Tensor& latents, std::span<const double> targets,
                               const EstimatorTrainOptions& options, Rng& rng) {
  if (targets.size() != latents.rows()) {
    throw DimensionError("estimator training: " + std::to_string(latents.rows()) +
                         " latents but " + std::to_string(targets.size()) + " targets");
  }
  EstimatorReport report;
  const std::size_t n = latents.rows();
  if (n == 0) return report;
  const double scale = estimator.output_scale();
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::vector<std::size_t> order = rng.Permutation(n);
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(n, begin + batch);
      std::span<const std::size_t> idx(order.data() + begin, end - begin);
      std::vector<double> zb, tb;
      for (std::size_t i : idx) {
        auto row = latents.row(i);
        zb.insert(zb.end(), row.begin(), row.end());
        tb.push_back(targets[i] / scale);
      }
      // The loss is taken on the normalized scale; the optimum is unchanged.
      Tensor pred = estimator.body().Forward(Tensor(idx.size(), latents.cols(), std::move(zb)));
      Tensor loss = Mean(Square(Sub(pred, Tensor(idx.size(), 1, std::move(tb)))));
      optimizer.Step(Backward(loss));
    }
    report.epoch_mse.push_back(EstimatorMse(estimator, latents, targets));
  }
  report.final_mse =
      report.epoch_mse.empty() ? EstimatorMse(estimator, latents, targets) : report.epoch_mse.back();
  return report;
}

EstimatorReport FitEstimator(CurvatureEstimator& estimator, const Decoder& decoder,
                             const Tensor& means, const EstimatorTrainOptions& options) {
  Rng rng(options.seed, "estimator.jitter");
  Tensor latents = JitteredLatents(means, options.jitter, std::max<std::size_t>(1, options.draws), rng);
  std::vector<double> targets = CurvatureTargets(decoder, latents, options.curvature);
  if (options.normalize_targets) {
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= static_cast<double>(std::max<std::size_t>(1, targets.size()));
    if (mean > 0.0) estimator.set_output_scale(mean);
  }
  AdamOptions adam;
  adam.learning_rate = options.learning_rate;
  Adam optimizer(estimator.Parameters(), adam);
  return TrainEstimator(estimator, optimizer, latents, targets, options);
}

std::vector<std::size_t> SelectEndpoints(const RbfNet& rbf, const Tensor& z) {
  if (rbf.num_centers() == 0) throw ContractError("endpoint selection needs at least one center");
  Tensor act = rbf.Activations(z);
  std::vector<std::size_t> out(z.rows());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = act.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::size_t SelectEndpoint(const RbfNet& rbf, const Tensor& z) {
  if (z.rows() != 1) throw DimensionError("SelectEndpoint takes a single 1 x d latent");
  return SelectEndpoints(rbf, z).front();
}

PrefixChoice ChoosePerturbationIndex(std::span<const double> curvature) {
  if (curvature.empty()) throw ContractError("empty curvature sequence");
  PrefixChoice c;
  // max_element and min_element both return the first extremum.
  c.i_max = static_cast<std::size_t>(std::max_element(curvature.begin(), curvature.end()) -
                                     curvature.begin());
  c.i_star = static_cast<std::size_t>(
      std::min_element(curvature.begin(), curvature.begin() + c.i_max + 1) - curvature.begin());
  return c;
}

std::vector<PerturbationOutcome> PerturbBatch(const RvaeModel& model,
                                              const CurvatureEstimator& estimator,
                                              const Tensor& z, const GeodesicOptions& options) {
  const std::size_t d = model.latent_dim();
  if (z.cols() != d) throw DimensionError("perturb: latent width mismatch");
  RvaeModel frozen = model.Frozen();
  std::vector<std::size_t> endpoints = SelectEndpoints(frozen.decoder_sigma(), z);
  std::vector<double> ends;
  ends.reserve(z.rows() * d);
  for (std::size_t k : endpoints) {
    auto c = frozen.decoder_sigma().centers().row(k);
    ends.insert(ends.end(), c.begin(), c.end());
  }
  std::vector<GeodesicPath> paths =
      GeodesicBatch(frozen, z.Detach(), Tensor(z.rows(), d, std::move(ends)), options);

  std::vector<Tensor> all_samples;
  all_samples.reserve(paths.size());
  for (const auto& p : paths) all_samples.push_back(p.samples);
  std::vector<double> scores =
      paths.empty() ? std::vector<double>{} : estimator.Evaluate(ConcatRows(all_samples));

  std::vector<PerturbationOutcome> out(paths.size());
  const std::size_t n = options.samples;
  for (std::size_t r = 0; r < paths.size(); ++r) {
    PerturbationOutcome& o = out[r];
    o.path = std::move(paths[r]);
    o.path.curvature.assign(scores.begin() + r * n, scores.begin() + (r + 1) * n);
    o.original = o.path.start;
    o.endpoint = endpoints[r];
    PrefixChoice c = ChoosePerturbationIndex(o.path.curvature);
    o.i_max = c.i_max;
    o.i_star = c.i_star;
    auto row = o.path.samples.row(c.i_star);
    o.perturbed.assign(row.begin(), row.end());
  }
  return out;
}

PerturbationOutcome Perturb(const RvaeModel& model, const CurvatureEstimator& estimator,
                            const Tensor& z, const GeodesicOptions& options) {
  if (z.rows() != 1) throw DimensionError("Perturb takes a single 1 x d latent");
  return PerturbBatch(model, estimator, z, options).front();
}

PublishedDataset Publish(const RvaeModel& model, const CurvatureEstimator& estimator,
                         const LabeledDataset& dataset, const PublishOptions& options) {
  if (dataset.pixels_per_image() != model.data_dim()) {
    throw DimensionError("publish: images have " + std::to_string(dataset.pixels_per_image()) +
                         " pixels, model expects " + std::to_string(model.data_dim()));
  }
  RvaeModel frozen = model.Frozen();
  PublishedDataset out;
  out.data.height = dataset.height;
  out.data.width = dataset.width;
  out.data.split = dataset.split;
  out.data.notes = dataset.notes;
  out.data.notes.push_back("published by curvature-guided geodesic perturbation");
  out.data.labels = dataset.labels;
  out.data.pixels.reserve(dataset.pixels.size());
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk);
  for (std::size_t begin = 0; begin < dataset.size(); begin += chunk) {
    const std::size_t end = std::min(dataset.size(), begin + chunk);
    std::vector<std::size_t> idx(end - begin);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
    std::vector<PerturbationOutcome> outcomes;
    Tensor decoded;
    try {
      NoGradGuard no_grad;
      Tensor means = frozen.Encode(dataset.Images(idx)).mean;
      outcomes = PerturbBatch(frozen, estimator, means, options.geodesic);
      std::vector<double> shifted;
      for (const auto& o : outcomes) shifted.insert(shifted.end(), o.perturbed.begin(), o.perturbed.end());
      decoded = frozen.Mean(Tensor(idx.size(), frozen.latent_dim(), std::move(shifted)));
    } catch (const Error& e) {
      throw ObfuscationError("publish failed in samples " + std::to_string(begin) + ".." +
                             std::to_string(end - 1) + ": " + e.what());
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (double v : decoded.row(i)) {
        if (!std::isfinite(v)) {
          throw ObfuscationError("publish: non-finite pixel for sample " + std::to_string(idx[i]));
        }
        out.data.pixels.push_back(std::clamp(v, 0.0, 1.0));
      }
      const PerturbationOutcome& o = outcomes[i];
      ManifestRecord rec;
      rec.index = idx[i];
      rec.label = dataset.labels[idx[i]];
      rec.endpoint = o.endpoint;
      rec.i_max = o.i_max;
      rec.i_star = o.i_star;
      rec.curvature = o.path.curvature;
      rec.original_latent = o.original;
      rec.perturbed_latent = o.perturbed;
      out.manifest.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace mprs
