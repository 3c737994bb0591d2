#include "mprs/privacy/classifier.h"

#include <algorithm>
#include <cmath>

#include "mprs/diffcore/autodiff.h"
#include "mprs/errors.h"
#include "mprs/netkit/adam.h"

namespace mprs {

Classifier::Classifier(std::size_t height, std::size_t width, std::size_t num_classes,
                       const ClassifierOptions& options)
    : options_(options), height_(height), width_(width), num_classes_(num_classes) {
  if (num_classes < 2) throw ContractError("a classifier needs at least two classes");
  if (options.arch != "conv" && options.arch != "mlp") {
    throw ConfigError("unknown classifier arch '" + options.arch + "'");
  }
  Rng rng(options.seed, "classifier.init");
  ImageShape shape{height, width, 1};
  if (options.arch == "conv") {
    for (std::size_t i = 0; i < options.conv_channels.size(); ++i) {
      ConvGeometry g{shape, options.kernel, 2, options.kernel / 2};
      convs_.emplace_back("classifier.conv" + std::to_string(i), g, options.conv_channels[i], rng);
      shape = convs_.back().output_shape();
    }
  }
  std::vector<std::size_t> widths{shape.size()};
  widths.insert(widths.end(), options.hidden.begin(), options.hidden.end());
  if (!options.hidden.empty()) {
    hidden_ = Mlp("classifier.hidden", widths,
                  std::vector<Activation>(options.hidden.size(), Activation::kRelu), rng);
  }
  head_ = Mlp("classifier.head", {widths.back(), num_classes}, {Activation::kIdentity}, rng);
}

Tensor Classifier::Trunk(const Tensor& x) const {
  if (x.cols() != input_size()) {
    throw DimensionError("classifier expects " + std::to_string(input_size()) + " pixels, got " +
                         std::to_string(x.cols()));
  }
  Tensor h = x;
  for (const auto& c : convs_) h = c.Forward(h);
  return options_.hidden.empty() ? h : hidden_.Forward(h);
}

Tensor Classifier::Logits(const Tensor& x) const { return head_.Forward(Trunk(x)); }

Tensor Classifier::Features(const Tensor& x) const {
  NoGradGuard no_grad;
  return Trunk(x);
}

Tensor Classifier::Probabilities(const Tensor& x) const {
  NoGradGuard no_grad;
  return Exp(LogSoftmax(Logits(x)));
}

std::vector<double> Classifier::Losses(const LabeledDataset& ds) const {
  NoGradGuard no_grad;
  Tensor logp = LogSoftmax(Logits(ds.Images()));
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int y = ds.labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes_) {
      throw DataError("label " + std::to_string(y) + " outside the classifier's classes");
    }
    out[i] = -logp.at(i, static_cast<std::size_t>(y));
  }
  return out;
}

std::vector<int> Classifier::Predict(const Tensor& x) const {
  Tensor p = Probabilities(x);
  std::vector<int> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = p.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double Classifier::Accuracy(const LabeledDataset& ds) const {
  if (ds.size() == 0) return 0.0;
  std::vector<int> pred = Predict(ds.Images());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) hits += pred[i] == ds.labels[i];
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

ParamList Classifier::Parameters() const {
  ParamList out;
  for (const auto& c : convs_) out = Concat({out, c.Parameters()});
  return Concat({out, hidden_.Parameters(), head_.Parameters()});
}

Tensor CrossEntropy(const Tensor& logits, const std::vector<int>& labels) {
  if (labels.size() != logits.rows()) throw DimensionError("cross-entropy: label count mismatch");
  std::vector<double> v(logits.size(), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= logits.cols()) {
      throw DataError("label " + std::to_string(labels[i]) + " outside the classifier's classes");
    }
    v[i * logits.cols() + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return Neg(Mean(SumCols(Mul(LogSoftmax(logits), Tensor(logits.rows(), logits.cols(), std::move(v))))));
}

Classifier TrainDownstream(const LabeledDataset& ds, const ClassifierOptions& options) {
  ds.Validate();
  std::vector<int> classes = ds.Classes();
  if (classes.size() < 2) throw ContractError("downstream training needs at least two classes");
  if (classes.front() < 0) throw DataError("class labels must be nonnegative");
  Classifier clf(ds.height, ds.width, static_cast<std::size_t>(classes.back()) + 1, options);
  AdamOptions ao;
  ao.learning_rate = options.learning_rate;
  Adam opt(clf.Parameters(), ao);
  Rng rng(options.seed, "classifier.batches");
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::vector<std::size_t> order = rng.Permutation(ds.size());
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      std::vector<std::size_t> idx(order.begin() + begin,
                                   order.begin() + std::min(order.size(), begin + batch));
      std::vector<int> y(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) y[i] = ds.labels[idx[i]];
      Tensor loss = CrossEntropy(clf.Logits(ds.Images(idx)), y);
      if (!std::isfinite(loss.item())) {
        throw TrainingError("classifier loss is not finite at epoch " + std::to_string(epoch));
      }
      opt.Step(Backward(loss));
    }
  }
  return clf;
}

}  // namespace mprs
