#include "mprs/bilevel/trainer.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mprs/diffcore/autodiff.h"
#include "mprs/errors.h"

namespace mprs {
namespace {

// stage, epoch and five losses; wall time is deliberately not persisted so
// checkpoints of identical runs are byte-identical.
constexpr std::size_t kLogWidth = 7;

void RequirePositive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(name) + " must be positive and finite");
  }
}

void RequireCount(std::size_t v, const char* name) {
  if (v == 0) throw ConfigError(std::string(name) + " must be at least 1");
}

Adam MakeAdam(const ParamList& params, double lr) {
  AdamOptions o;
  o.learning_rate = lr;
  return Adam(params, o);
}

double CheckedItem(const Tensor& loss, const char* what) {
  const double v = loss.item();
  if (!std::isfinite(v)) throw TrainingError(std::string(what) + " is not finite");
  return v;
}

std::string Coordinates(Stage stage, std::size_t epoch, std::size_t batch) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s stage, epoch %zu, batch %zu", StageName(stage), epoch, batch);
  return buf;
}

double OptionalOrNan(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

std::optional<double> NanToOptional(double v) {
  return std::isnan(v) ? std::nullopt : std::optional<double>(v);
}

}  // namespace

void TrainConfig::Validate() const {
  RequirePositive(rvae_lr, "rvae_lr");
  RequirePositive(critic_lr, "critic_lr");
  RequirePositive(estimator_lr, "estimator_lr");
  RequirePositive(finetune_lr, "finetune_lr");
  RequireCount(critic_cadence, "critic_cadence");
  RequireCount(batch_size, "batch_size");
  RequireCount(estimator_batch_size, "estimator_batch_size");
  RequireCount(estimator_draws, "estimator_draws");
  RequireCount(model.latent_dim, "latent_dim");
  RequireCount(model.rbf.centers, "rbf_centers");
  if (geodesic.samples < 2) throw ConfigError("geodesic samples must be at least 2");
  RequireCount(geodesic.control_points, "geodesic control points");
  if (!(estimator_jitter >= 0.0)) throw ConfigError("estimator_jitter must be nonnegative");
  if (!(critic.lambda_gp >= 0.0)) throw ConfigError("lambda_gp must be nonnegative");
  if (!(model.beta >= 0.0)) throw ConfigError("beta must be nonnegative");
  RequirePositive(curvature.step, "curvature step");
}

const char* StageName(Stage stage) {
  switch (stage) {
    case Stage::kMu: return "mu";
    case Stage::kSigma: return "sigma";
    case Stage::kEstimator: return "estimator";
    case Stage::kBilevel: return "bilevel";
    case Stage::kDone: return "done";
  }
  return "?";
}

int PhaseLogEntry::phase() const {
  switch (stage) {
    case Stage::kMu:
    case Stage::kSigma: return 1;
    case Stage::kEstimator: return 2;
    default: return 3;
  }
}

std::string PhaseLog::ToCsv(bool with_timing) const {
  std::string out = "phase,stage,epoch,loss_mu,loss_sigma,loss_d,loss_g,loss_curv";
  if (with_timing) out += ",wall_seconds,checkpoint";
  out += '\n';
  auto field = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return std::string(buf);
  };
  for (const auto& e : entries) {
    out += std::to_string(e.phase()) + ',' + StageName(e.stage) + ',' + std::to_string(e.epoch);
    for (const auto* v : {&e.loss_mu, &e.loss_sigma, &e.loss_d, &e.loss_g, &e.loss_curv})
      out += ',' + field(*v);
    if (with_timing) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", e.wall_seconds);
      out += std::string(",") + buf + ',' + e.checkpoint;
    }
    out += '\n';
  }
  return out;
}

Trainer::Trainer(TrainConfig config, LabeledDataset data)
    : config_(std::move(config)), data_(std::move(data)) {
  config_.Validate();
  data_.Validate();
  if (data_.size() == 0) throw DataError("training set is empty");
  config_.model.data_dim = data_.pixels_per_image();
  config_.model.seed = config_.seed;
  config_.critic.seed = config_.seed;
  config_.estimator.seed = config_.seed;
  model_ = RvaeModel(config_.model);
  critic_ = Critic(config_.model.data_dim, config_.critic);
  estimator_ = CurvatureEstimator(config_.model.latent_dim, config_.estimator);

  mu_opt_ = MakeAdam(model_.MuStageParams(), config_.rvae_lr);
  sigma_opt_ = MakeAdam(model_.SigmaStageParams(), config_.rvae_lr);
  gen_opt_ = MakeAdam(model_.DecoderParams(), config_.rvae_lr);
  critic_opt_ = MakeAdam(critic_.Parameters(), config_.critic_lr);
  estimator_opt_ = MakeAdam(estimator_.Parameters(), config_.estimator_lr);
  elbo_opt_ = MakeAdam(model_.AllParams(), config_.finetune_lr);
  decoder_opt_ = MakeAdam(model_.DecoderParams(), config_.finetune_lr);

  batch_rng_ = Rng(config_.seed, "trainer.batches");
  noise_rng_ = Rng(config_.seed, "trainer.noise");
  jitter_rng_ = Rng(config_.seed, "trainer.jitter");
}

std::size_t Trainer::StageEpochs(Stage stage) const {
  switch (stage) {
    case Stage::kMu: return config_.mu_epochs;
    case Stage::kSigma: return config_.sigma_epochs;
    case Stage::kEstimator: return config_.estimator_epochs;
    case Stage::kBilevel: return config_.bilevel_epochs;
    case Stage::kDone: return 0;
  }
  return 0;
}

Tensor Trainer::PosteriorMeans(const Tensor& x) const {
  NoGradGuard no_grad;
  return model_.Encode(x).mean.Detach();
}

void Trainer::EnsureEstimatorData() {
  if (!estimator_targets_.empty()) return;
  // A fixed stream, so a resumed run rebuilds the same set from the frozen
  // decoder.
  Rng rng(config_.seed, "phase2.jitter");
  estimator_latents_ = JitteredLatents(PosteriorMeans(data_.Images()), config_.estimator_jitter,
                                       config_.estimator_draws, rng);
  estimator_targets_ = CurvatureTargets(model_.Frozen(), estimator_latents_, config_.curvature);
}

void Trainer::Enter(Stage stage) {
  if (stage == Stage::kSigma) {
    model_.decoder_sigma().FitCenters(PosteriorMeans(data_.Images()), config_.seed);
  } else if (stage == Stage::kEstimator) {
    EnsureEstimatorData();
    double mean = 0.0;
    for (double t : estimator_targets_) mean += t;
    mean /= static_cast<double>(estimator_targets_.size());
    if (mean > 0.0) estimator_.set_output_scale(mean);
  }
}

std::vector<std::vector<std::size_t>> Trainer::Batches() {
  std::vector<std::size_t> order = batch_rng_.Permutation(data_.size());
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    const std::size_t end = std::min(order.size(), begin + config_.batch_size);
    out.emplace_back(order.begin() + begin, order.begin() + end);
  }
  return out;
}

bool Trainer::RunEpoch() {
  while (stage_ != Stage::kDone && stage_epoch_ >= StageEpochs(stage_)) {
    stage_ = static_cast<Stage>(static_cast<int>(stage_) + 1);
    stage_epoch_ = 0;
    iteration_ = 0;
    entered_ = false;
  }
  if (stage_ == Stage::kDone) return false;
  if (!entered_) {
    Enter(stage_);
    entered_ = true;
  }
  const auto start = std::chrono::steady_clock::now();
  PhaseLogEntry entry;
  switch (stage_) {
    case Stage::kMu: entry = MuOrSigmaEpoch(false); break;
    case Stage::kSigma: entry = MuOrSigmaEpoch(true); break;
    case Stage::kEstimator: entry = EstimatorEpoch(); break;
    default: entry = BilevelEpoch(); break;
  }
  entry.stage = stage_;
  entry.epoch = stage_epoch_;
  entry.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log_.entries.push_back(entry);
  ++stage_epoch_;
  return true;
}

void Trainer::Run(const EpochHook& on_epoch) {
  while (RunEpoch()) {
    if (on_epoch) log_.entries.back().checkpoint = on_epoch(*this);
  }
}

void Trainer::AdversarialSteps(const Tensor& x, const Posterior& q, double& loss_d,
                               double& loss_g) {
  const std::size_t b = x.rows(), d = model_.latent_dim();
  Tensor z = Reparameterize(q, Tensor(b, d, noise_rng_.NormalVector(b * d))).Detach();
  Tensor fake;
  {
    NoGradGuard no_grad;
    fake = model_.Mean(z);
  }
  std::vector<double> u(b);
  for (double& v : u) v = noise_rng_.Uniform();
  Tensor ld = LossD(critic_, x, fake, Tensor(b, 1, std::move(u)));
  critic_opt_.Step(Backward(ld));
  Tensor lg = LossG(critic_, model_.Mean(z));
  loss_d += ld.item();
  loss_g += CheckedItem(lg, "generator loss");
  gen_opt_.Step(Backward(lg));
}

PhaseLogEntry Trainer::MuOrSigmaEpoch(bool sigma) {
  double loss = 0.0, loss_d = 0.0, loss_g = 0.0;
  std::size_t batches = 0, adversarial = 0;
  const std::size_t d = model_.latent_dim();
  std::vector<std::vector<std::size_t>> plan = Batches();
  for (std::size_t bi = 0; bi < plan.size(); ++bi) {
    try {
      Tensor x = data_.Images(plan[bi]);
      Tensor eta(x.rows(), d, noise_rng_.NormalVector(x.rows() * d));
      Tensor l = sigma ? LossSigma(model_, x, eta) : LossMu(model_, x, eta);
      loss += CheckedItem(l, sigma ? "sigma-stage loss" : "mu-stage loss");
      (sigma ? sigma_opt_ : mu_opt_).Step(Backward(l));
      ++batches;
      if (++iteration_ % config_.critic_cadence == 0) {
        Posterior q;
        {
          NoGradGuard no_grad;
          q = model_.Encode(x);
        }
        AdversarialSteps(x, q, loss_d, loss_g);
        ++adversarial;
      }
    } catch (const Error& e) {
      throw TrainingError("phase 1, " + Coordinates(stage_, stage_epoch_, bi) + ": " + e.what());
    }
  }
  PhaseLogEntry entry;
  if (batches > 0) {
    (sigma ? entry.loss_sigma : entry.loss_mu) = loss / static_cast<double>(batches);
  }
  if (adversarial > 0) {
    entry.loss_d = loss_d / static_cast<double>(adversarial);
    entry.loss_g = loss_g / static_cast<double>(adversarial);
  }
  return entry;
}

PhaseLogEntry Trainer::EstimatorEpoch() {
  EnsureEstimatorData();
  EstimatorTrainOptions o;
  o.epochs = 1;
  o.learning_rate = config_.estimator_lr;
  o.batch_size = config_.estimator_batch_size;
  EstimatorReport report;
  try {
    report = TrainEstimator(estimator_, estimator_opt_, estimator_latents_, estimator_targets_, o,
                            batch_rng_);
  } catch (const Error& e) {
    throw TrainingError("phase 2, epoch " + std::to_string(stage_epoch_) + ": " + e.what());
  }
  PhaseLogEntry entry;
  entry.loss_curv = CheckedItem(Tensor::Scalar(report.final_mse), "estimator loss");
  return entry;
}

PhaseLogEntry Trainer::BilevelEpoch() {
  const std::size_t d = model_.latent_dim();
  double sum_sigma = 0.0, sum_d = 0.0, sum_g = 0.0, sum_curv = 0.0;
  std::vector<std::vector<std::size_t>> plan = Batches();
  auto hook = [&](BilevelStep s) {
    if (step_hook_) step_hook_(s, *this);
  };
  for (std::size_t bi = 0; bi < plan.size(); ++bi) {
    Tensor x = data_.Images(plan[bi]);
    const std::size_t b = x.rows();
    int step = 1;
    try {
      // (1) ELBO step on every RVAE parameter, no perturbation.
      Tensor eta(b, d, noise_rng_.NormalVector(b * d));
      Tensor elbo = LossSigma(model_, x, eta);
      sum_sigma += CheckedItem(elbo, "ELBO");
      elbo_opt_.Step(Backward(elbo));
      hook(BilevelStep::kElbo);

      // (2) Critic on originals vs decoded geodesic-perturbed latents.
      step = 2;
      Tensor means = PosteriorMeans(x);
      std::vector<PerturbationOutcome> outcomes =
          PerturbBatch(model_, estimator_, means, config_.geodesic);
      std::vector<double> shifted;
      shifted.reserve(b * d);
      for (const auto& o : outcomes) shifted.insert(shifted.end(), o.perturbed.begin(), o.perturbed.end());
      Tensor z_perturbed(b, d, std::move(shifted));
      Tensor fake;
      {
        NoGradGuard no_grad;
        fake = model_.Mean(z_perturbed);
      }
      std::vector<double> u(b);
      for (double& v : u) v = noise_rng_.Uniform();
      Tensor ld = LossD(critic_, x, fake, Tensor(b, 1, std::move(u)));
      sum_d += ld.item();
      critic_opt_.Step(Backward(ld));
      hook(BilevelStep::kCritic);

      // (3) Decoder step against the updated critic.
      step = 3;
      Tensor lg = LossG(critic_, model_.Mean(z_perturbed));
      sum_g += CheckedItem(lg, "generator loss");
      decoder_opt_.Step(Backward(lg));
      hook(BilevelStep::kDecoder);

      // (4) Estimator refresh on curvature targets of the current decoder.
      step = 4;
      Tensor latents = JitteredLatents(means, config_.estimator_jitter, 1, jitter_rng_);
      std::vector<double> targets = CurvatureTargets(model_.Frozen(), latents, config_.curvature);
      refresh_before_ = EstimatorMse(estimator_, latents, targets);
      EstimatorTrainOptions o;
      o.epochs = 1;
      o.learning_rate = config_.estimator_lr;
      o.batch_size = latents.rows();
      // Fresh moments: one Adam step from zero state moves every weight by
      // about lr against its gradient sign, which cannot overshoot the way
      // momentum carried over from earlier target batches can.
      Adam refresh = MakeAdam(estimator_.Parameters(), config_.estimator_lr);
      TrainEstimator(estimator_, refresh, latents, targets, o, batch_rng_);
      refresh_after_ = EstimatorMse(estimator_, latents, targets);
      sum_curv += refresh_after_;
      hook(BilevelStep::kEstimator);
    } catch (const Error& e) {
      throw TrainingError("phase 3, " + Coordinates(stage_, stage_epoch_, bi) + ", step " +
                          std::to_string(step) + ": " + e.what());
    }
  }
  PhaseLogEntry entry;
  if (!plan.empty()) {
    const double n = static_cast<double>(plan.size());
    entry.loss_sigma = sum_sigma / n;
    entry.loss_d = sum_d / n;
    entry.loss_g = sum_g / n;
    entry.loss_curv = sum_curv / n;
  }
  return entry;
}

Checkpoint Trainer::Save() const {
  Checkpoint c;
  c.PutParams(model_.AllParams());
  c.PutParams(model_.Buffers());
  c.PutParams(critic_.Parameters());
  c.PutParams(estimator_.Parameters());
  c.Put("estimator.output_scale", 1, 1, {estimator_.output_scale()});
  const std::pair<const char*, const Adam*> opts[] = {
      {"mu", &mu_opt_},           {"sigma", &sigma_opt_},         {"generator", &gen_opt_},
      {"critic", &critic_opt_},   {"estimator", &estimator_opt_}, {"elbo", &elbo_opt_},
      {"decoder", &decoder_opt_}};
  for (const auto& [name, opt] : opts) {
    std::vector<double> state = opt->ExportState();
    const std::size_t n = state.size();
    c.Put(std::string("optimizer.") + name, 1, n, std::move(state));
  }
  c.Put("trainer.progress", 1, 4,
        {static_cast<double>(stage_), static_cast<double>(stage_epoch_),
         static_cast<double>(iteration_), entered_ ? 1.0 : 0.0});
  std::vector<double> log;
  for (const auto& e : log_.entries) {
    for (double v : {static_cast<double>(e.stage), static_cast<double>(e.epoch),
                     OptionalOrNan(e.loss_mu), OptionalOrNan(e.loss_sigma), OptionalOrNan(e.loss_d),
                     OptionalOrNan(e.loss_g), OptionalOrNan(e.loss_curv)})
      log.push_back(v);
  }
  c.Put("trainer.log", log_.entries.size(), kLogWidth, std::move(log));
  c.PutRng("batches", batch_rng_.state());
  c.PutRng("noise", noise_rng_.state());
  c.PutRng("jitter", jitter_rng_.state());
  return c;
}

void Trainer::Restore(const Checkpoint& c) {
  c.RestoreParams(model_.AllParams());
  c.RestoreParams(model_.Buffers());
  c.RestoreParams(critic_.Parameters());
  c.RestoreParams(estimator_.Parameters());
  estimator_.set_output_scale(c.Get("estimator.output_scale").values.at(0));
  const std::pair<const char*, Adam*> opts[] = {
      {"mu", &mu_opt_},           {"sigma", &sigma_opt_},         {"generator", &gen_opt_},
      {"critic", &critic_opt_},   {"estimator", &estimator_opt_}, {"elbo", &elbo_opt_},
      {"decoder", &decoder_opt_}};
  for (const auto& [name, opt] : opts) opt->ImportState(c.Get(std::string("optimizer.") + name).values);
  const auto& p = c.Get("trainer.progress").values;
  if (p.size() != 4 || p[0] < 0 || p[0] > static_cast<double>(Stage::kDone)) {
    throw FormatError("checkpoint: malformed trainer progress");
  }
  stage_ = static_cast<Stage>(static_cast<int>(p[0]));
  stage_epoch_ = static_cast<std::size_t>(p[1]);
  iteration_ = static_cast<std::size_t>(p[2]);
  entered_ = p[3] != 0.0;
  const Checkpoint::Blob& log = c.Get("trainer.log");
  if (log.cols != kLogWidth && log.rows != 0) throw FormatError("checkpoint: malformed trainer log");
  log_.entries.clear();
  for (std::size_t r = 0; r < log.rows; ++r) {
    const double* v = log.values.data() + r * kLogWidth;
    PhaseLogEntry e;
    e.stage = static_cast<Stage>(static_cast<int>(v[0]));
    e.epoch = static_cast<std::size_t>(v[1]);
    e.loss_mu = NanToOptional(v[2]);
    e.loss_sigma = NanToOptional(v[3]);
    e.loss_d = NanToOptional(v[4]);
    e.loss_g = NanToOptional(v[5]);
    e.loss_curv = NanToOptional(v[6]);
    log_.entries.push_back(e);
  }
  batch_rng_ = Rng(c.GetRng("batches"));
  noise_rng_ = Rng(c.GetRng("noise"));
  jitter_rng_ = Rng(c.GetRng("jitter"));
  estimator_latents_ = Tensor();
  estimator_targets_.clear();
}

}  // namespace mprs
