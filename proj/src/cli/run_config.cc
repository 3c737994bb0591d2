#include "mprs/cli/run_config.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "mprs/dataio/synth.h"
#include "mprs/errors.h"

namespace mprs {
namespace {

void Require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string List(const std::vector<T>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "]";
}

}  // namespace

void RunConfig::Finalize() {
  Require(threads >= 1, "threads must be >= 1");
  Require(!output.empty(), "output directory must be set");
  train.seed = seed;
  baseline.seed = seed;
  eval.classifier.seed = seed;
  train.Validate();
  baseline.Validate();
  Require(publish_chunk >= 1, "train.publish_chunk must be >= 1");
  Require(train.model.latent_dim >= 1, "train.latent_dim must be >= 1");
  Require(train.geodesic.samples >= 2, "train.geodesic_samples must be >= 2");
  Require(train.geodesic.max_iterations >= 1, "train.geodesic_iterations must be >= 1");
  Require(train.model.rbf.centers >= 1, "train.rbf_centers must be >= 1");
  Require(train.curvature.step > 0.0, "train.curvature_step must be > 0");
  const auto& kinds = SynthKinds();
  Require(std::find(kinds.begin(), kinds.end(), synth.kind) != kinds.end(),
          "synth.kind must be one of plane, paraboloid, two-cluster-blobs, ring");
  Require(synth.samples >= 4, "synth.samples must be >= 4");
  Require(synth.noise >= 0.0, "synth.noise must be >= 0");
  Require(synth.label_temperature >= 0.0, "synth.label_temperature must be >= 0");
  Require(synth.tail_fraction > 0.0 && synth.tail_fraction <= 1.0,
          "synth.tail_fraction must be in (0, 1]");
  Require(synth.test_fraction > 0.0 && synth.test_fraction < 1.0,
          "synth.test_fraction must be in (0, 1)");
  Require(baseline_method == "pixelate" || baseline_method == "blur" || baseline_method == "kanon",
          "baseline.method must be pixelate, blur or kanon");
  Require(eval.classifier.arch == "conv" || eval.classifier.arch == "mlp",
          "eval.classifier_arch must be conv or mlp");
  Require(eval.classifier.learning_rate > 0.0, "eval.classifier_lr must be > 0");
  Require(eval.classifier.batch_size >= 1, "eval.classifier_batch_size must be >= 1");
  Require(eval.attack_lr > 0.0, "eval.attack_lr must be > 0");
  Require(eval.neighbors >= 1, "eval.neighbors must be >= 1");
  Require(eval.intrinsic_dim >= 1, "eval.intrinsic_dim must be >= 1");
  Require(eval.probe_source == "model" || eval.probe_source == "plane" ||
              eval.probe_source == "paraboloid",
          "eval.probe_source must be model, plane or paraboloid");
  Require(eval.probe_points >= 2, "eval.probe_points must be >= 2");
  Require(eval.probe_epsilon > 0.0, "eval.probe_epsilon must be > 0");
  Require(eval.probe_trials >= 1, "eval.probe_trials must be >= 1");
}

std::filesystem::path RunConfig::PublishedDir() const {
  return eval.published.empty() ? std::filesystem::path(output) / "published"
                                : std::filesystem::path(eval.published);
}

std::string DescribeTrainConfig(const TrainConfig& c) {
  std::ostringstream o;
  o << "batch_size=" << c.batch_size << "\n"
    << "beta=" << Num(c.model.beta) << "\n"
    << "bilevel_epochs=" << c.bilevel_epochs << "\n"
    << "critic_cadence=" << c.critic_cadence << "\n"
    << "critic_hidden=" << List(c.critic.hidden) << "\n"
    << "critic_lr=" << Num(c.critic_lr) << "\n"
    << "curvature_central=" << c.curvature.central << "\n"
    << "curvature_step=" << Num(c.curvature.step) << "\n"
    << "decoder_hidden=" << List(c.model.decoder_hidden) << "\n"
    << "encoder_hidden=" << List(c.model.encoder_hidden) << "\n"
    << "estimator_batch_size=" << c.estimator_batch_size << "\n"
    << "estimator_draws=" << c.estimator_draws << "\n"
    << "estimator_epochs=" << c.estimator_epochs << "\n"
    << "estimator_hidden=" << List(c.estimator.hidden) << "\n"
    << "estimator_jitter=" << Num(c.estimator_jitter) << "\n"
    << "estimator_lr=" << Num(c.estimator_lr) << "\n"
    << "exact_distance=" << c.model.exact_distance << "\n"
    << "finetune_lr=" << Num(c.finetune_lr) << "\n"
    << "geodesic_control_points=" << c.geodesic.control_points << "\n"
    << "geodesic_iterations=" << c.geodesic.max_iterations << "\n"
    << "geodesic_lr=" << Num(c.geodesic.learning_rate) << "\n"
    << "geodesic_samples=" << c.geodesic.samples << "\n"
    << "geodesic_tolerance=" << Num(c.geodesic.tolerance) << "\n"
    << "lambda_gp=" << Num(c.critic.lambda_gp) << "\n"
    << "latent_dim=" << c.model.latent_dim << "\n"
    << "mu_epochs=" << c.mu_epochs << "\n"
    << "rbf_centers=" << c.model.rbf.centers << "\n"
    << "rbf_floor=" << Num(c.model.rbf.floor) << "\n"
    << "rvae_lr=" << Num(c.rvae_lr) << "\n"
    << "seed=" << c.seed << "\n"
    << "sigma_epochs=" << c.sigma_epochs << "\n";
  return o.str();
}

}  // namespace mprs
