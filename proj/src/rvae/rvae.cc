#include "mprs/rvae/rvae.h"

#include <cmath>
#include <numbers>

#include "mprs/errors.h"
#include "mprs/geometry/metric.h"

namespace mprs {
namespace {

Mlp MakeMlp(const std::string& name, std::size_t in, const std::vector<std::size_t>& hidden,
            std::size_t out, Activation hidden_act, Activation out_act, Rng& rng) {
  std::vector<std::size_t> widths{in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  std::vector<Activation> acts(hidden.size(), hidden_act);
  acts.push_back(out_act);
  return Mlp(name, widths, acts, rng);
}

void CheckFinite(const Tensor& t, const char* what) {
  for (double x : t.data()) {
    if (!std::isfinite(x)) throw TrainingError(std::string("non-finite ") + what);
  }
}

}  // namespace

RvaeModel::RvaeModel(const RvaeOptions& options) : options_(options) {
  if (options.latent_dim == 0 || options.data_dim == 0) {
    throw ContractError("RVAE needs positive latent and data dimensions");
  }
  if (options.beta < 0.0) throw ContractError("KL weight must be nonnegative");
  if (options.encoder_hidden.empty()) {
    throw ContractError("RVAE encoder needs at least one hidden layer");
  }
  Rng rng(options.seed, "rvae.init");
  const std::size_t trunk_out = options.encoder_hidden.back();
  std::vector<std::size_t> trunk_widths{options.data_dim};
  trunk_widths.insert(trunk_widths.end(), options.encoder_hidden.begin(),
                      options.encoder_hidden.end());
  encoder_trunk_ = Mlp("encoder.trunk", trunk_widths,
                       std::vector<Activation>(options.encoder_hidden.size(), Activation::kTanh), rng);
  encoder_mean_ = Mlp("encoder.mean", {trunk_out, options.latent_dim}, {Activation::kIdentity}, rng);
  encoder_scale_ = Mlp("encoder.log_scale", {trunk_out, 1}, {Activation::kIdentity}, rng);
  Tensor scale_bias = encoder_scale_.layers()[0].bias;
  scale_bias.MutableLeafData()[0] = options.initial_log_scale;
  decoder_mean_ = MakeMlp("decoder.mean", options.latent_dim, options.decoder_hidden,
                          options.data_dim, Activation::kTanh, Activation::kSigmoid, rng);
  decoder_sigma_ = RbfNet(options.latent_dim, options.data_dim, options.rbf);
  prior_mean_ = Tensor::Variable(1, options.latent_dim,
                                 std::vector<double>(options.latent_dim, 0.0));
}

Posterior RvaeModel::Encode(const Tensor& x) const {
  if (x.cols() != options_.data_dim) {
    throw DimensionError("encode: expected " + std::to_string(options_.data_dim) +
                         " pixels, got " + std::to_string(x.cols()));
  }
  Tensor h = encoder_trunk_.Forward(x);
  Posterior q{encoder_mean_.Forward(h), encoder_scale_.Forward(h)};
  CheckFinite(q.mean, "posterior mean");
  CheckFinite(q.log_scale, "posterior scale");
  return q;
}

Tensor RvaeModel::DecodeSample(const Tensor& z, const Tensor& eps) const {
  if (eps.rows() != z.rows() || eps.cols() != options_.data_dim) {
    throw DimensionError("decode: noise " + eps.ShapeString() + " does not match " +
                         std::to_string(z.rows()) + " x " + std::to_string(options_.data_dim));
  }
  return Add(Mean(z), Mul(Sigma(z), eps));
}

Tensor RvaeModel::DecodeSample(const Tensor& z, Rng& rng) const {
  return DecodeSample(z, Tensor(z.rows(), options_.data_dim,
                                rng.NormalVector(z.rows() * options_.data_dim)));
}

ParamList RvaeModel::MuStageParams() const {
  ParamList out = Concat({encoder_trunk_.Parameters(), encoder_mean_.Parameters()});
  if (!options_.scale_head_in_sigma_stage) out = Concat({out, encoder_scale_.Parameters()});
  return Concat({out, decoder_mean_.Parameters()});
}

ParamList RvaeModel::SigmaStageParams() const {
  ParamList out = decoder_sigma_.Parameters();
  out.push_back({"prior_mean", prior_mean_});
  if (options_.scale_head_in_sigma_stage) out = Concat({out, encoder_scale_.Parameters()});
  return out;
}

ParamList RvaeModel::EncoderParams() const {
  return Concat({encoder_trunk_.Parameters(), encoder_mean_.Parameters(),
                 encoder_scale_.Parameters()});
}

ParamList RvaeModel::DecoderParams() const {
  return Concat({decoder_mean_.Parameters(), decoder_sigma_.Parameters()});
}

ParamList RvaeModel::AllParams() const {
  ParamList out = Concat({EncoderParams(), DecoderParams()});
  out.push_back({"prior_mean", prior_mean_});
  return out;
}

ParamList RvaeModel::Buffers() const { return decoder_sigma_.Buffers(); }

RvaeModel RvaeModel::Frozen() const {
  RvaeModel out;
  out.options_ = options_;
  out.encoder_trunk_ = encoder_trunk_.Detached();
  out.encoder_mean_ = encoder_mean_.Detached();
  out.encoder_scale_ = encoder_scale_.Detached();
  out.decoder_mean_ = decoder_mean_.Detached();
  out.decoder_sigma_ = decoder_sigma_.Detached();
  out.prior_mean_ = prior_mean_.Detach();
  return out;
}

Tensor ReconstructionNll(const Tensor& x, const Tensor& mean, const Tensor& sigma) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Tensor residual = Sub(x, mean);
  Tensor quad = Div(Square(residual), Scale(Square(sigma), 2.0));
  Tensor per_pixel = AddScalar(Add(Log(sigma), quad), half_log_2pi);
  return SumCols(per_pixel);
}

Tensor Reparameterize(const Posterior& q, const Tensor& eta) {
  if (eta.rows() != q.mean.rows() || eta.cols() != q.mean.cols()) {
    throw DimensionError("reparameterization noise " + eta.ShapeString() + " vs posterior " +
                         q.mean.ShapeString());
  }
  return Add(q.mean, Mul(Exp(q.log_scale), eta));
}

namespace {

Tensor LatentNoise(const RvaeModel& model, std::size_t rows, Rng& rng) {
  return Tensor(rows, model.latent_dim(), rng.NormalVector(rows * model.latent_dim()));
}

void CheckBatch(const Tensor& x) {
  if (x.rows() == 0) throw ContractError("loss on an empty batch");
}

}  // namespace

Tensor LossMu(const RvaeModel& model, const Tensor& x, const Tensor& eta) {
  CheckBatch(x);
  Posterior q = model.Encode(x);
  Tensor z = Reparameterize(q, eta);
  Tensor sigma = model.Sigma(z);
  for (double s : sigma.data()) {
    if (!(s > 0.0) || !std::isfinite(s)) throw TrainingError("decoder scale underflow");
  }
  return Mean(ReconstructionNll(x, model.Mean(z), sigma));
}

Tensor LossMu(const RvaeModel& model, const Tensor& x, Rng& rng) {
  return LossMu(model, x, LatentNoise(model, x.rows(), rng));
}

Tensor KlBm(const Decoder& decoder, const Tensor& z, const Posterior& q, const Tensor& prior_mean,
            const SquaredDistanceFn& squared_distance, double logdet_floor) {
  const std::size_t d = decoder.latent_dim();
  const std::size_t b = z.rows();
  if (q.mean.rows() != b || q.log_scale.rows() != b || prior_mean.rows() != 1) {
    throw DimensionError("KL: latent batch, posterior and prior shapes disagree");
  }
  Tensor prior = Add(Tensor(b, d, 0.0), prior_mean);
  Tensor ld_q = LogDetMetric(MetricEntries(decoder, q.mean), d, logdet_floor);
  Tensor ld_p = LogDetMetric(MetricEntries(decoder, prior_mean), d, logdet_floor);
  Tensor l2_q = squared_distance(z, q.mean);
  Tensor l2_p = squared_distance(z, prior);
  Tensor variance = Exp(Scale(q.log_scale, 2.0));
  // -(d/2) ln s^2 - ld_q/2 + ld_p/2 - l2_q / (2 s^2) + l2_p / 2
  Tensor out = Scale(q.log_scale, -static_cast<double>(d));
  out = Sub(out, Scale(ld_q, 0.5));
  out = Add(out, Scale(ld_p, 0.5));
  out = Sub(out, Div(l2_q, Scale(variance, 2.0)));
  out = Add(out, Scale(l2_p, 0.5));
  return out;
}

SquaredDistanceFn ModelSquaredDistance(const RvaeModel& model) {
  if (model.options().exact_distance) {
    return [&model](const Tensor& a, const Tensor& b) { return PathSquaredDistance(model, a, b); };
  }
  return [&model](const Tensor& a, const Tensor& b) {
    return LinearizedSquaredDistance(model, a, b);
  };
}

Tensor LossSigma(const RvaeModel& model, const Tensor& x, const Tensor& eta) {
  CheckBatch(x);
  Posterior q = model.Encode(x);
  Tensor z = Reparameterize(q, eta);
  Tensor recon = ReconstructionNll(x, model.Mean(z), model.Sigma(z));
  if (model.options().beta == 0.0) return Mean(recon);
  Tensor kl = KlBm(model, z, q, model.prior_mean(), ModelSquaredDistance(model),
                   model.options().logdet_floor);
  return Mean(Add(recon, Scale(kl, model.options().beta)));
}

Tensor LossSigma(const RvaeModel& model, const Tensor& x, Rng& rng) {
  return LossSigma(model, x, LatentNoise(model, x.rows(), rng));
}

}  // namespace mprs
