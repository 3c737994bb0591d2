#include "mprs/diffcore/dual.h"

#include <utility>

#include "mprs/errors.h"

namespace mprs {
namespace {

void CheckDirections(const Dual& a, const Dual& b, const char* op) {
  if (a.directions() != b.directions()) {
    throw DimensionError(std::string(op) + ": dual operands carry " +
                         std::to_string(a.directions()) + " and " +
                         std::to_string(b.directions()) + " directions");
  }
}

// Broadcasts a tangent up to the shape of the primal it belongs to.
Tensor Expand(const Tensor& t, const Tensor& like) {
  if (t.rows() == like.rows() && t.cols() == like.cols()) return t;
  return Add(t, Tensor(like.rows(), like.cols(), 0.0));
}

// Tangent map t -> t * factor, shared by every direction.
Dual ChainElementwise(Tensor value, const Dual& a, const Tensor& factor) {
  Dual out{std::move(value), {}};
  out.tangents.reserve(a.directions());
  for (const auto& t : a.tangents) out.tangents.push_back(Mul(t, factor));
  return out;
}

}  // namespace

Dual SeedCoordinates(const Tensor& z) {
  const std::size_t b = z.rows(), d = z.cols();
  Dual out{z, {}};
  out.tangents.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    Tensor e(b, d, 0.0);
    auto data = e.MutableLeafData();
    for (std::size_t r = 0; r < b; ++r) data[r * d + i] = 1.0;
    out.tangents.push_back(e);
  }
  return out;
}

Dual Constant(const Tensor& value, std::size_t directions) {
  Tensor zero(value.rows(), value.cols(), 0.0);
  return Dual{value, std::vector<Tensor>(directions, zero)};
}

Dual MatMul(const Dual& a, const Tensor& w) {
  Dual out{MatMul(a.value, w), {}};
  for (const auto& t : a.tangents) out.tangents.push_back(MatMul(t, w));
  return out;
}

Dual Add(const Dual& a, const Dual& b) {
  CheckDirections(a, b, "add");
  Dual out{Add(a.value, b.value), {}};
  for (std::size_t i = 0; i < a.directions(); ++i)
    out.tangents.push_back(Expand(Add(a.tangents[i], b.tangents[i]), out.value));
  return out;
}

Dual Add(const Dual& a, const Tensor& b) {
  Dual out{Add(a.value, b), {}};
  for (const auto& t : a.tangents) out.tangents.push_back(Expand(t, out.value));
  return out;
}

Dual Sub(const Dual& a, const Dual& b) {
  CheckDirections(a, b, "sub");
  Dual out{Sub(a.value, b.value), {}};
  for (std::size_t i = 0; i < a.directions(); ++i)
    out.tangents.push_back(Expand(Sub(a.tangents[i], b.tangents[i]), out.value));
  return out;
}

Dual Sub(const Dual& a, const Tensor& b) {
  Dual out{Sub(a.value, b), {}};
  for (const auto& t : a.tangents) out.tangents.push_back(Expand(t, out.value));
  return out;
}

Dual Mul(const Dual& a, const Dual& b) {
  CheckDirections(a, b, "mul");
  Dual out{Mul(a.value, b.value), {}};
  for (std::size_t i = 0; i < a.directions(); ++i) {
    out.tangents.push_back(
        Add(Mul(a.tangents[i], b.value), Mul(a.value, b.tangents[i])));
  }
  return out;
}

Dual Mul(const Dual& a, const Tensor& b) {
  Dual out{Mul(a.value, b), {}};
  for (const auto& t : a.tangents) out.tangents.push_back(Mul(t, b));
  return out;
}

Dual Neg(const Dual& a) {
  Dual out{Neg(a.value), {}};
  for (const auto& t : a.tangents) out.tangents.push_back(Neg(t));
  return out;
}

Dual Scale(const Dual& a, double factor) {
  Dual out{Scale(a.value, factor), {}};
  for (const auto& t : a.tangents) out.tangents.push_back(Scale(t, factor));
  return out;
}

Dual AddScalar(const Dual& a, double offset) {
  return Dual{AddScalar(a.value, offset), a.tangents};
}

Dual Exp(const Dual& a) {
  Tensor y = Exp(a.value);
  return ChainElementwise(y, a, y);
}

Dual Log(const Dual& a) {
  Dual out{Log(a.value), {}};
  for (const auto& t : a.tangents) out.tangents.push_back(Div(t, a.value));
  return out;
}

Dual Tanh(const Dual& a) {
  Tensor y = Tanh(a.value);
  return ChainElementwise(y, a, AddScalar(Neg(Square(y)), 1.0));
}

Dual Relu(const Dual& a) {
  return ChainElementwise(Relu(a.value), a, StepMask(a.value));
}

Dual Softplus(const Dual& a) {
  return ChainElementwise(Softplus(a.value), a, Sigmoid(a.value));
}

Dual Sigmoid(const Dual& a) {
  Tensor y = Sigmoid(a.value);
  return ChainElementwise(y, a, Mul(y, AddScalar(Neg(y), 1.0)));
}

Dual Square(const Dual& a) {
  return ChainElementwise(Square(a.value), a, Scale(a.value, 2.0));
}

Dual Sqrt(const Dual& a) {
  Tensor y = Sqrt(a.value);
  Dual out{y, {}};
  Tensor two_y = Scale(y, 2.0);
  for (const auto& t : a.tangents) out.tangents.push_back(Div(t, two_y));
  return out;
}

Dual SumCols(const Dual& a) {
  Dual out{SumCols(a.value), {}};
  for (const auto& t : a.tangents) out.tangents.push_back(SumCols(t));
  return out;
}

Dual SliceCols(const Dual& a, std::size_t begin, std::size_t end) {
  Dual out{SliceCols(a.value, begin, end), {}};
  for (const auto& t : a.tangents) out.tangents.push_back(SliceCols(t, begin, end));
  return out;
}

Dual ConcatCols(const std::vector<Dual>& parts) {
  if (parts.empty()) throw DimensionError("concat of zero duals");
  const std::size_t k = parts.front().directions();
  std::vector<Tensor> values;
  for (const auto& p : parts) {
    if (p.directions() != k) throw DimensionError("concat: direction count mismatch");
    values.push_back(p.value);
  }
  Dual out{ConcatCols(values), {}};
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<Tensor> ts;
    for (const auto& p : parts) ts.push_back(p.tangents[i]);
    out.tangents.push_back(ConcatCols(ts));
  }
  return out;
}

}  // namespace mprs
