#ifndef MPRS_BILEVEL_TRAINER_H_
#define MPRS_BILEVEL_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mprs/adversary/critic.h"
#include "mprs/dataio/checkpoint.h"
#include "mprs/dataio/dataset.h"
#include "mprs/netkit/adam.h"
#include "mprs/obfuscator/obfuscator.h"
#include "mprs/rvae/rvae.h"

namespace mprs {

struct TrainConfig {
  std::size_t mu_epochs = 100;
  std::size_t sigma_epochs = 100;
  std::size_t estimator_epochs = 50;
  std::size_t bilevel_epochs = 5;

  double rvae_lr = 1e-3;
  double critic_lr = 1e-6;
  double estimator_lr = 1e-4;
  double finetune_lr = 1e-5;

  // Phase 1 critic/generator steps happen every `critic_cadence` iterations.
  std::size_t critic_cadence = 50;
  std::size_t batch_size = 64;
  std::size_t estimator_batch_size = 64;
  double estimator_jitter = 0.1;
  std::size_t estimator_draws = 1;
  uint64_t seed = 0;

  RvaeOptions model;  // data_dim is taken from the dataset
  CriticOptions critic;
  EstimatorOptions estimator;
  GeodesicOptions geodesic;
  CurvatureOptions curvature;

  // Throws ConfigError on a non-positive rate, batch size or cadence.
  void Validate() const;
};

enum class Stage { kMu, kSigma, kEstimator, kBilevel, kDone };
const char* StageName(Stage stage);

struct PhaseLogEntry {
  Stage stage = Stage::kMu;
  std::size_t epoch = 0;
  std::optional<double> loss_mu;
  std::optional<double> loss_sigma;
  std::optional<double> loss_d;
  std::optional<double> loss_g;
  std::optional<double> loss_curv;
  double wall_seconds = 0.0;
  std::string checkpoint;

  int phase() const;
};

struct PhaseLog {
  std::vector<PhaseLogEntry> entries;

  // Header: phase,stage,epoch,loss_mu,loss_sigma,loss_d,loss_g,loss_curv
  // [,wall_seconds,checkpoint]. Absent losses are empty fields.
  std::string ToCsv(bool with_timing = true) const;
};

// Phase 3 step numbers passed to the step hook.
enum class BilevelStep { kElbo = 1, kCritic = 2, kDecoder = 3, kEstimator = 4 };

// Algorithm state: model, critic, estimator, their optimizers, RNG streams
// and progress counters. Everything needed to resume lives in Save().
class Trainer {
 public:
  using StepHook = std::function<void(BilevelStep step, const Trainer& trainer)>;
  // Called after each finished epoch; the returned string is recorded as the
  // entry's checkpoint reference.
  using EpochHook = std::function<std::string(const Trainer& trainer)>;

  Trainer(TrainConfig config, LabeledDataset data);

  // Runs one epoch of the current stage. Returns false when all stages are
  // finished.
  bool RunEpoch();
  void Run(const EpochHook& on_epoch = {});

  Checkpoint Save() const;
  // Restores parameters, optimizer moments, RNG states, progress and log.
  // The trainer must have been built with the same config and data.
  void Restore(const Checkpoint& checkpoint);

  void set_step_hook(StepHook hook) { step_hook_ = std::move(hook); }

  // Estimator MSE just before and after the most recent Phase 3 refresh,
  // measured on that refresh's target batch.
  double last_refresh_before() const { return refresh_before_; }
  double last_refresh_after() const { return refresh_after_; }

  const TrainConfig& config() const { return config_; }
  const LabeledDataset& data() const { return data_; }
  const RvaeModel& model() const { return model_; }
  RvaeModel& mutable_model() { return model_; }
  const Critic& critic() const { return critic_; }
  const CurvatureEstimator& estimator() const { return estimator_; }
  const PhaseLog& log() const { return log_; }
  Stage stage() const { return stage_; }
  std::size_t stage_epoch() const { return stage_epoch_; }

 private:
  std::size_t StageEpochs(Stage stage) const;
  void Enter(Stage stage);
  std::vector<std::vector<std::size_t>> Batches();
  Tensor PosteriorMeans(const Tensor& x) const;
  void EnsureEstimatorData();

  PhaseLogEntry MuOrSigmaEpoch(bool sigma);
  PhaseLogEntry EstimatorEpoch();
  PhaseLogEntry BilevelEpoch();
  // One critic step then one generator step on mean reconstructions.
  void AdversarialSteps(const Tensor& x, const Posterior& q, double& loss_d, double& loss_g);

  TrainConfig config_;
  LabeledDataset data_;
  RvaeModel model_;
  Critic critic_;
  CurvatureEstimator estimator_;

  Adam mu_opt_;
  Adam sigma_opt_;
  Adam gen_opt_;
  Adam critic_opt_;
  Adam estimator_opt_;
  Adam elbo_opt_;
  Adam decoder_opt_;

  Rng batch_rng_;
  Rng noise_rng_;
  Rng jitter_rng_;

  Stage stage_ = Stage::kMu;
  std::size_t stage_epoch_ = 0;
  std::size_t iteration_ = 0;
  bool entered_ = false;

  Tensor estimator_latents_;
  std::vector<double> estimator_targets_;

  PhaseLog log_;
  StepHook step_hook_;
  double refresh_before_ = 0.0;
  double refresh_after_ = 0.0;
};

}  // namespace mprs

#endif  // MPRS_BILEVEL_TRAINER_H_
