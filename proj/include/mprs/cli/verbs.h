#ifndef MPRS_CLI_VERBS_H_
#define MPRS_CLI_VERBS_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mprs/bilevel/trainer.h"
#include "mprs/cli/run_config.h"
#include "mprs/dataio/dataset.h"
#include "mprs/obfuscator/obfuscator.h"
#include "mprs/privacy/metrics.h"
#include "mprs/privacy/mia.h"

namespace mprs {

// Output layout under RunConfig::output:
//   model.ckpt, checkpoints/<stage>-<epoch>.ckpt, phase_log.csv
//   published/{images.idx,labels.idx,manifest.jsonl}
//   attack.json, attack_samples.csv
//   evaluate.json
//   baseline-<method>/{images.idx,labels.idx[,log.txt]}
//   probe/{geometry.csv,sensitivity.csv,probe.json[,latent.svg]}
// Every verb logs progress with timings to `log`; files carry no timings.

struct ToySplit {
  LabeledDataset train;
  LabeledDataset test;
};

// Synthetic manifold, optional soft relabeling, tail downsampling and a
// seeded train/test split.
ToySplit MakeToySplit(const SynthConfig& config, uint64_t seed);

// Throws DataError("missing dataset ...") when a file is absent.
LabeledDataset LoadTrainSet(const RunConfig& config);
LabeledDataset LoadTestSet(const RunConfig& config);

// Trainer restored from <output>/model.ckpt. Throws DataError("missing
// artifact ...") when absent and ConfigError when the checkpoint was written
// under different training settings.
Trainer RestoreTrainer(const RunConfig& config, const LabeledDataset& train);

ToySplit CmdSynth(const RunConfig& config, std::ostream& log);

PhaseLog CmdTrain(const RunConfig& config, std::ostream& log);

PublishedDataset CmdPublish(const RunConfig& config, std::ostream& log);

struct AttackResult {
  double original_test_accuracy = 0.0;
  double published_test_accuracy = 0.0;
  MiaReport original;
  MiaReport published;
  MemberOutcomes members;  // outcomes of the attack on the original classifier
  VulnerabilityReport vulnerability;
};
AttackResult CmdAttack(const RunConfig& config, std::ostream& log);

struct EvaluateResult {
  UtilityReport original;   // original classifier; Frechet of train vs test
  UtilityReport published;  // published classifier; Frechet of train vs published
};
EvaluateResult CmdEvaluate(const RunConfig& config, std::ostream& log);

LabeledDataset CmdBaseline(const RunConfig& config, std::ostream& log);

struct ProbeRun {
  Tensor latents;
  std::vector<std::vector<double>> eigenvalues;  // per latent, ascending
  ProbeResult sensitivity;
  std::optional<std::string> svg;
};
ProbeRun CmdProbe(const RunConfig& config, std::ostream& log);

// Scatter of 2-D latents shaded by curvature with one polyline overlaid.
std::string LatentSvg(const Tensor& latents, std::span<const double> curvature,
                      const Tensor& polyline);

}  // namespace mprs

#endif  // MPRS_CLI_VERBS_H_
