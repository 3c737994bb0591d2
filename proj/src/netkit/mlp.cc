#include "mprs/netkit/mlp.h"

#include <cmath>
#include <utility>

#include "mprs/errors.h"

namespace mprs {

ParamList Concat(std::initializer_list<ParamList> lists) {
  ParamList out;
  for (const auto& l : lists) out.insert(out.end(), l.begin(), l.end());
  return out;
}

const char* ActivationName(Activation activation) {
  switch (activation) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSoftplus: return "softplus";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "unknown";
}

Tensor ActivationDerivative(const Tensor& h, Activation activation) {
  switch (activation) {
    case Activation::kIdentity: return Tensor(h.rows(), h.cols(), 1.0);
    case Activation::kRelu: return StepMask(h);
    case Activation::kTanh: return AddScalar(Neg(Square(Tanh(h))), 1.0);
    case Activation::kSoftplus: return Sigmoid(h);
    case Activation::kSigmoid: {
      Tensor s = Sigmoid(h);
      return Mul(s, AddScalar(Neg(s), 1.0));
    }
  }
  throw ContractError("unknown activation");
}

Mlp::Mlp(std::string name, const std::vector<std::size_t>& widths,
         const std::vector<Activation>& activations, Rng& rng)
    : name_(std::move(name)) {
  if (widths.size() < 2 || activations.size() + 1 != widths.size()) {
    throw ContractError("Mlp " + name_ + ": need one activation per layer");
  }
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    std::vector<double> w(in * out);
    for (auto& v : w) v = rng.Uniform(-bound, bound);
    layers_.push_back(Layer{Tensor::Variable(in, out, std::move(w)),
                            Tensor::Variable(1, out, std::vector<double>(out, 0.0)),
                            activations[l]});
  }
}

Mlp::Mlp(std::string name, std::vector<Layer> layers)
    : name_(std::move(name)), layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.bias.rows() != 1 || layer.bias.cols() != layer.weight.cols()) {
      throw DimensionError("Mlp " + name_ + ": bias " + layer.bias.ShapeString() +
                           " does not match weight " + layer.weight.ShapeString());
    }
    if (l > 0 && layers_[l - 1].weight.cols() != layer.weight.rows()) {
      throw DimensionError("Mlp " + name_ + ": layer widths do not chain");
    }
  }
}

void Mlp::CheckInput(std::size_t cols) const {
  if (layers_.empty()) throw ContractError("Mlp " + name_ + " has no layers");
  if (cols != in_dim()) {
    throw DimensionError("Mlp " + name_ + ": input width " + std::to_string(cols) +
                         " but first layer expects " + std::to_string(in_dim()));
  }
}

Tensor Mlp::Forward(const Tensor& x) const {
  CheckInput(x.cols());
  return Run(x, layers_.size());
}

Dual Mlp::Forward(const Dual& x) const {
  CheckInput(x.value.cols());
  return Run(x, layers_.size());
}

Tensor Mlp::ForwardPrefix(const Tensor& x, std::size_t count) const {
  CheckInput(x.cols());
  if (count > layers_.size()) throw ContractError("ForwardPrefix beyond network depth");
  return Run(x, count);
}

Tensor Mlp::InputGradient(const Tensor& x) const {
  CheckInput(x.cols());
  if (out_dim() != 1) throw ContractError("InputGradient needs a single-output network");
  std::vector<Tensor> pre;
  Tensor h = x;
  for (const Layer& layer : layers_) {
    Tensor a = Add(MatMul(h, layer.weight), layer.bias);
    pre.push_back(a);
    h = Activate(a, layer.activation);
  }
  Tensor g(x.rows(), 1, 1.0);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    if (layer.activation != Activation::kIdentity) {
      g = Mul(g, ActivationDerivative(pre[l], layer.activation));
    }
    g = MatMul(g, Transpose(layer.weight));
  }
  return g;
}

std::size_t Mlp::in_dim() const { return layers_.empty() ? 0 : layers_.front().weight.rows(); }

std::size_t Mlp::out_dim() const { return layers_.empty() ? 0 : layers_.back().weight.cols(); }

Mlp Mlp::Detached() const {
  Mlp out;
  out.name_ = name_;
  for (const Layer& layer : layers_)
    out.layers_.push_back({layer.weight.Detach(), layer.bias.Detach(), layer.activation});
  return out;
}

ParamList Mlp::Parameters() const {
  ParamList out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    out.push_back({name_ + "." + std::to_string(l) + ".weight", layers_[l].weight});
    out.push_back({name_ + "." + std::to_string(l) + ".bias", layers_[l].bias});
  }
  return out;
}

}  // namespace mprs
