#include "mprs/cli/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <memory>

#include "mprs/cli/run_config.h"
#include "mprs/cli/verbs.h"
#include "mprs/errors.h"

namespace mprs {
namespace {

// INI sections become dotted option names: [train] mu_epochs -> --train.mu_epochs.
// Stock CLI11 would route a section to the subcommand of the same name.
class SectionedIni : public CLI::ConfigINI {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> flat;
    for (CLI::ConfigItem item : CLI::ConfigINI::from_config(input)) {
      if (item.name == "++" || item.name == "--") continue;
      std::string name;
      for (const std::string& p : item.parents) name += p + ".";
      item.name = name + item.name;
      item.parents.clear();
      flat.push_back(std::move(item));
    }
    return flat;
  }
};

void Bind(CLI::App& app, RunConfig& c) {
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<SectionedIni>());
  app.set_config("--config,-c", "", "INI run configuration; flags override file values");
  app.allow_config_extras(false);

  app.add_option("--seed", c.seed, "Root seed for every random stream");
  app.add_option("--threads", c.threads, "Worker cap (modules currently run single-threaded)")
      ->check(CLI::PositiveNumber);
  app.add_option("--output,-o", c.output, "Output directory");

  TrainConfig& t = c.train;
  app.add_option("--data.train_images", c.data.train_images, "IDX images, original train split");
  app.add_option("--data.train_labels", c.data.train_labels, "IDX labels, original train split");
  app.add_option("--data.test_images", c.data.test_images, "IDX images, original test split");
  app.add_option("--data.test_labels", c.data.test_labels, "IDX labels, original test split");

  app.add_option("--synth.kind", c.synth.kind, "plane | paraboloid | two-cluster-blobs | ring");
  app.add_option("--synth.samples", c.synth.samples, "Samples generated before downsampling");
  app.add_option("--synth.noise", c.synth.noise, "Pixel noise std");
  app.add_option("--synth.label_temperature", c.synth.label_temperature,
                 "Soft-label temperature on z_1 (0 = hard labels)");
  app.add_option("--synth.tail_classes", c.synth.tail_classes, "Classes to downsample");
  app.add_option("--synth.tail_fraction", c.synth.tail_fraction, "Tail size / head size");
  app.add_option("--synth.test_fraction", c.synth.test_fraction, "Share held out as test split");

  app.add_option("--train.mu_epochs", t.mu_epochs, "Phase 1 mu-stage epochs");
  app.add_option("--train.sigma_epochs", t.sigma_epochs, "Phase 1 sigma-stage epochs");
  app.add_option("--train.estimator_epochs", t.estimator_epochs, "Phase 2 estimator epochs");
  app.add_option("--train.bilevel_epochs,--epochs-bilevel", t.bilevel_epochs,
                 "Phase 3 epochs (0 skips Phase 3)");
  app.add_option("--train.rvae_lr", t.rvae_lr, "RVAE learning rate (Phase 1)");
  app.add_option("--train.critic_lr", t.critic_lr, "Critic and generator learning rate");
  app.add_option("--train.estimator_lr", t.estimator_lr, "Curvature estimator learning rate");
  app.add_option("--train.finetune_lr", t.finetune_lr, "Phase 3 RVAE learning rate");
  app.add_option("--train.critic_cadence", t.critic_cadence, "Phase 1 iterations per critic step");
  app.add_option("--train.batch_size", t.batch_size, "RVAE minibatch size");
  app.add_option("--train.estimator_batch_size", t.estimator_batch_size, "Estimator minibatch size");
  app.add_option("--train.estimator_jitter", t.estimator_jitter, "Latent jitter std for estimator data");
  app.add_option("--train.estimator_draws", t.estimator_draws, "Jittered copies per posterior mean");
  app.add_option("--train.latent_dim", t.model.latent_dim, "Latent dimension");
  app.add_option("--train.encoder_hidden", t.model.encoder_hidden, "Encoder hidden widths");
  app.add_option("--train.decoder_hidden", t.model.decoder_hidden, "Decoder hidden widths");
  app.add_option("--train.rbf_centers", t.model.rbf.centers, "RBF centers of the decoder scale");
  app.add_option("--train.rbf_floor", t.model.rbf.floor, "Precision floor of the RBF network");
  app.add_option("--train.beta", t.model.beta, "KL weight");
  app.add_flag("--train.exact_distance", t.model.exact_distance,
               "Optimized geodesic length inside the KL");
  app.add_option("--train.critic_hidden", t.critic.hidden, "Critic hidden widths");
  app.add_option("--train.lambda_gp", t.critic.lambda_gp, "Gradient penalty weight");
  app.add_option("--train.estimator_hidden", t.estimator.hidden, "Estimator hidden widths");
  app.add_option("--train.geodesic_samples", t.geodesic.samples, "Points along each geodesic");
  app.add_option("--train.geodesic_control_points", t.geodesic.control_points,
                 "Interior spline control points");
  app.add_option("--train.geodesic_lr", t.geodesic.learning_rate, "Geodesic Adam learning rate");
  app.add_option("--train.geodesic_iterations", t.geodesic.max_iterations,
                 "Geodesic iteration cap");
  app.add_option("--train.geodesic_tolerance", t.geodesic.tolerance,
                 "Relative energy change that stops a geodesic");
  app.add_option("--train.curvature_step", t.curvature.step, "Finite-difference step for K(z)");
  app.add_flag("--train.curvature_central", t.curvature.central, "Central differences for K(z)");
  app.add_option("--train.publish_chunk", c.publish_chunk, "Geodesics optimized together");
  app.add_option("--train.resume", c.resume, "Checkpoint to resume training from");

  app.add_option("--baseline.method", c.baseline_method, "pixelate | blur | kanon")
      ->check(CLI::IsMember({"pixelate", "blur", "kanon"}));
  app.add_option("--baseline.block", c.baseline.block, "Pixelation block size");
  app.add_option("--baseline.radius", c.baseline.radius, "Gaussian blur sigma in pixels");
  app.add_option("--baseline.k", c.baseline.k, "k-anonymity K");
  app.add_option("--baseline.clusters", c.baseline.clusters, "k-anonymity cluster count");

  ClassifierOptions& clf = c.eval.classifier;
  app.add_option("--eval.classifier_arch", clf.arch, "conv | mlp")
      ->check(CLI::IsMember({"conv", "mlp"}));
  app.add_option("--eval.classifier_channels", clf.conv_channels, "Conv layer channels");
  app.add_option("--eval.classifier_kernel", clf.kernel, "Conv kernel size");
  app.add_option("--eval.classifier_hidden", clf.hidden, "Classifier hidden widths");
  app.add_option("--eval.classifier_epochs", clf.epochs, "Classifier epochs");
  app.add_option("--eval.classifier_lr", clf.learning_rate, "Classifier learning rate");
  app.add_option("--eval.classifier_batch_size", clf.batch_size, "Classifier minibatch size");
  app.add_flag("--eval.attack_mlp", c.eval.attack_mlp, "MLP attack on softmax vectors");
  app.add_option("--eval.attack_epochs", c.eval.attack_epochs, "MLP attack epochs");
  app.add_option("--eval.attack_lr", c.eval.attack_lr, "MLP attack learning rate");
  app.add_option("--eval.neighbors", c.eval.neighbors, "k for the local curvature proxy");
  app.add_option("--eval.intrinsic_dim", c.eval.intrinsic_dim, "Intrinsic dimension p of the proxy");
  app.add_option("--eval.published", c.eval.published,
                 "Published directory to attack/evaluate (default <output>/published)");
  app.add_option("--eval.probe_source", c.eval.probe_source, "model | plane | paraboloid")
      ->check(CLI::IsMember({"model", "plane", "paraboloid"}));
  app.add_option("--eval.probe_points", c.eval.probe_points, "Latents probed");
  app.add_option("--eval.probe_epsilon", c.eval.probe_epsilon, "Probe step length");
  app.add_option("--eval.probe_trials", c.eval.probe_trials, "Random directions per latent");

  // A repeated scalar option keeps its last value.
  for (CLI::Option* o : app.get_options())
    if (o->get_items_expected_max() == 1) o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

std::string OneLine(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

std::vector<std::string> Reversed(const std::vector<std::string>& args) {
  return {args.rbegin(), args.rend()};
}

}  // namespace

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kData:
    case ErrorKind::kFormat:
    case ErrorKind::kDimension:
    case ErrorKind::kContract:
      return 3;
    case ErrorKind::kTraining:
    case ErrorKind::kGeometry:
    case ErrorKind::kObfuscation:
      return 4;
  }
  return 1;
}

RunConfig LoadRunConfig(const std::filesystem::path& ini, const std::vector<std::string>& overrides) {
  RunConfig c;
  CLI::App app;
  Bind(app, c);
  std::vector<std::string> args{"--config", ini.string()};
  args.insert(args.end(), overrides.begin(), overrides.end());
  try {
    app.parse(Reversed(args));
  } catch (const CLI::ParseError& e) {
    throw ConfigError(OneLine(e.what()));
  }
  c.Finalize();
  return c;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app("Manifold-guided private data publication: train, publish, attack, evaluate.",
               "mprs");
  Bind(app, c);
  app.require_subcommand(1);
  const std::pair<const char*, const char*> verbs[] = {
      {"synth", "Write the synthetic toy dataset to the [data] paths"},
      {"train", "Run Phases 1-3; writes model.ckpt, per-epoch checkpoints and phase_log.csv"},
      {"publish", "Perturb the training split; writes published/"},
      {"attack", "Loss-based membership inference on original vs published; writes attack.json"},
      {"evaluate", "Utility metrics of the published set; writes evaluate.json"},
      {"baseline", "Apply pixelate, blur or kanon; writes baseline-<method>/"},
      {"probe", "Curvature and loss-sensitivity tables; writes probe/"}};
  for (const auto& [name, help] : verbs) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(Reversed(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: config: " << OneLine(e.what()) << "\n";
    return 2;
  }
  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    c.Finalize();
    if (verb == "synth") CmdSynth(c, err);
    if (verb == "train") CmdTrain(c, err);
    if (verb == "publish") CmdPublish(c, err);
    if (verb == "attack") CmdAttack(c, err);
    if (verb == "evaluate") CmdEvaluate(c, err);
    if (verb == "baseline") CmdBaseline(c, err);
    if (verb == "probe") CmdProbe(c, err);
  } catch (const Error& e) {
    err << "error: " << ErrorKindName(e.kind()) << ": " << OneLine(e.what()) << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal: " << OneLine(e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mprs
