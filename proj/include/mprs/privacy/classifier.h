#ifndef MPRS_PRIVACY_CLASSIFIER_H_
#define MPRS_PRIVACY_CLASSIFIER_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mprs/dataio/dataset.h"
#include "mprs/netkit/conv.h"
#include "mprs/netkit/mlp.h"

namespace mprs {

struct ClassifierOptions {
  // "conv": two stride-2 ReLU conv layers then the MLP head; "mlp": head only.
  std::string arch = "conv";
  std::vector<std::size_t> conv_channels = {8, 16};
  std::size_t kernel = 3;
  std::vector<std::size_t> hidden = {32};
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  uint64_t seed = 0;
};

// Image classifier. Labels are class ids 0..num_classes-1.
class Classifier {
 public:
  Classifier() = default;
  Classifier(std::size_t height, std::size_t width, std::size_t num_classes,
             const ClassifierOptions& options);

  Tensor Logits(const Tensor& x) const;
  // Penultimate-layer activations, the feature space for utility metrics.
  Tensor Features(const Tensor& x) const;
  // Softmax rows, untaped.
  Tensor Probabilities(const Tensor& x) const;
  // Per-sample cross-entropy, untaped.
  std::vector<double> Losses(const LabeledDataset& ds) const;
  std::vector<int> Predict(const Tensor& x) const;
  double Accuracy(const LabeledDataset& ds) const;

  std::size_t num_classes() const { return num_classes_; }
  std::size_t input_size() const { return height_ * width_; }
  const ClassifierOptions& options() const { return options_; }
  ParamList Parameters() const;

 private:
  Tensor Trunk(const Tensor& x) const;

  ClassifierOptions options_;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<Conv2d> convs_;
  Mlp hidden_;
  Mlp head_;
};

// Mean cross-entropy of logits against integer labels, taped.
Tensor CrossEntropy(const Tensor& logits, const std::vector<int>& labels);

// Minibatch Adam on the cross-entropy. Throws ContractError when fewer than
// two classes are present. Deterministic for a fixed seed.
Classifier TrainDownstream(const LabeledDataset& ds, const ClassifierOptions& options);

}  // namespace mprs

#endif  // MPRS_PRIVACY_CLASSIFIER_H_
