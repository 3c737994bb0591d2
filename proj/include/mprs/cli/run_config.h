#ifndef MPRS_CLI_RUN_CONFIG_H_
#define MPRS_CLI_RUN_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mprs/baselines/baselines.h"
#include "mprs/bilevel/trainer.h"
#include "mprs/privacy/classifier.h"

namespace mprs {

struct DataPaths {
  std::string train_images = "data/train-images.idx";
  std::string train_labels = "data/train-labels.idx";
  std::string test_images = "data/test-images.idx";
  std::string test_labels = "data/test-labels.idx";
};

// Toy dataset written by the `synth` verb.
struct SynthConfig {
  std::string kind = "ring";
  std::size_t samples = 3600;
  double noise = 0.1;
  // Labels ~ Bernoulli(sigmoid(z_1 / temperature)); 0 keeps the hard labels
  // of the generator.
  double label_temperature = 0.3;
  std::vector<int> tail_classes = {1};
  double tail_fraction = 0.1;
  double test_fraction = 0.5;
};

struct EvalConfig {
  ClassifierOptions classifier;
  bool attack_mlp = false;
  std::size_t attack_epochs = 200;
  double attack_lr = 1e-2;
  std::size_t neighbors = 20;
  std::size_t intrinsic_dim = 2;
  // Published directory to attack or evaluate; empty means <output>/published.
  std::string published;
  // "model" (trained checkpoint), "plane" or "paraboloid".
  std::string probe_source = "model";
  std::size_t probe_points = 200;
  double probe_epsilon = 1e-2;
  std::size_t probe_trials = 8;
};

struct RunConfig {
  uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output = "out";
  DataPaths data;
  SynthConfig synth;
  TrainConfig train;
  std::size_t publish_chunk = 256;
  // Checkpoint to continue training from; empty starts fresh.
  std::string resume;
  std::string baseline_method = "pixelate";
  BaselineConfig baseline;
  EvalConfig eval;

  // Copies the root seed into every component and checks ranges. Throws
  // ConfigError.
  void Finalize();
  std::filesystem::path PublishedDir() const;
};

// Parses an INI file with [section] key = value lines plus command-line
// style overrides ("--train.mu_epochs=3"). Unknown keys are ConfigError.
RunConfig LoadRunConfig(const std::filesystem::path& ini,
                        const std::vector<std::string>& overrides = {});

// Training hyperparameters as sorted key=value lines, stored in checkpoints.
std::string DescribeTrainConfig(const TrainConfig& config);

}  // namespace mprs

#endif  // MPRS_CLI_RUN_CONFIG_H_
