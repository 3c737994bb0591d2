#ifndef MPRS_NETKIT_MLP_H_
#define MPRS_NETKIT_MLP_H_

#include <cstddef>
#include <string>
#include <vector>

#include "mprs/diffcore/dual.h"
#include "mprs/diffcore/tensor.h"
#include "mprs/rng.h"

namespace mprs {

struct NamedParam {
  std::string name;
  Tensor value;
};

using ParamList = std::vector<NamedParam>;

ParamList Concat(std::initializer_list<ParamList> lists);

enum class Activation { kIdentity, kRelu, kTanh, kSoftplus, kSigmoid };

const char* ActivationName(Activation activation);

template <typename V>
V Activate(const V& x, Activation activation) {
  switch (activation) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return Relu(x);
    case Activation::kTanh: return Tanh(x);
    case Activation::kSoftplus: return Softplus(x);
    case Activation::kSigmoid: return Sigmoid(x);
  }
  return x;
}

// Derivative of the activation at pre-activation `h`, as a taped tensor.
Tensor ActivationDerivative(const Tensor& h, Activation activation);

class Mlp {
 public:
  struct Layer {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out
    Activation activation = Activation::kIdentity;
  };

  Mlp() = default;
  // widths = {in, h1, ..., out}; one activation per layer. Weights use
  // Glorot-uniform initialization, biases start at zero.
  Mlp(std::string name, const std::vector<std::size_t>& widths,
      const std::vector<Activation>& activations, Rng& rng);
  Mlp(std::string name, std::vector<Layer> layers);

  Tensor Forward(const Tensor& x) const;
  Dual Forward(const Dual& x) const;
  // Output of the first `count` layers (e.g. penultimate features).
  Tensor ForwardPrefix(const Tensor& x, std::size_t count) const;

  // d(output)/d(input) for a single-output network, built from taped ops so
  // the result can itself be differentiated w.r.t. the weights.
  Tensor InputGradient(const Tensor& x) const;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t depth() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::string& name() const { return name_; }

  ParamList Parameters() const;
  // Copy whose parameters are constants, for evaluation without a tape.
  Mlp Detached() const;

 private:
  void CheckInput(std::size_t cols) const;

  template <typename V>
  V Run(const V& x, std::size_t count) const {
    V h = x;
    for (std::size_t l = 0; l < count; ++l) {
      const Layer& layer = layers_[l];
      h = Activate(Add(MatMul(h, layer.weight), layer.bias), layer.activation);
    }
    return h;
  }

  std::string name_;
  std::vector<Layer> layers_;
};

}  // namespace mprs

#endif  // MPRS_NETKIT_MLP_H_
