#include "mprs/diffcore/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "mprs/errors.h"

namespace mprs {
namespace {

thread_local bool grad_enabled = true;

std::string Shape(std::size_t r, std::size_t c) {
  std::ostringstream out;
  out << "[" << r << "x" << c << "]";
  return out.str();
}

std::shared_ptr<internal::Node> NewNode(std::size_t rows, std::size_t cols,
                                        std::vector<double> value) {
  if (value.size() != rows * cols) {
    throw DimensionError("tensor data length " + std::to_string(value.size()) +
                         " does not match shape " + Shape(rows, cols));
  }
  auto node = std::make_shared<internal::Node>();
  node->rows = rows;
  node->cols = cols;
  node->value = std::move(value);
  return node;
}

// Broadcast geometry for a binary elementwise op.
struct Broadcast {
  std::size_t rows, cols;
  std::size_t a_rs, a_cs, b_rs, b_cs;
};

Broadcast ResolveBroadcast(const Tensor& a, const Tensor& b, const char* op) {
  auto dim = [&](std::size_t x, std::size_t y) -> std::size_t {
    if (x == y) return x;
    if (x == 1) return y;
    if (y == 1) return x;
    throw DimensionError(std::string(op) + ": cannot broadcast " + a.ShapeString() +
                         " with " + b.ShapeString());
  };
  Broadcast g;
  g.rows = dim(a.rows(), b.rows());
  g.cols = dim(a.cols(), b.cols());
  g.a_rs = a.rows() == 1 ? 0 : a.cols();
  g.a_cs = a.cols() == 1 ? 0 : 1;
  g.b_rs = b.rows() == 1 ? 0 : b.cols();
  g.b_cs = b.cols() == 1 ? 0 : 1;
  return g;
}

// f(x, y) -> value; da(x, y, out) and db(x, y, out) -> partial derivatives.
template <typename F, typename Da, typename Db>
Tensor BinaryOp(const Tensor& a, const Tensor& b, const char* name, F f, Da da, Db db) {
  Broadcast g = ResolveBroadcast(a, b, name);
  std::vector<double> out(g.rows * g.cols);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < g.rows; ++i) {
    for (std::size_t j = 0; j < g.cols; ++j) {
      out[i * g.cols + j] = f(av[i * g.a_rs + j * g.a_cs], bv[i * g.b_rs + j * g.b_cs]);
    }
  }
  auto an = a.node();
  auto bn = b.node();
  return MakeOp(
      g.rows, g.cols, std::move(out), {a, b},
      [g, an, bn, da, db](std::span<const double> grad, std::span<double* const> in) {
        const auto& av = an->value;
        const auto& bv = bn->value;
        for (std::size_t i = 0; i < g.rows; ++i) {
          for (std::size_t j = 0; j < g.cols; ++j) {
            std::size_t ia = i * g.a_rs + j * g.a_cs;
            std::size_t ib = i * g.b_rs + j * g.b_cs;
            double gv = grad[i * g.cols + j];
            if (in[0]) in[0][ia] += gv * da(av[ia], bv[ib]);
            if (in[1]) in[1][ib] += gv * db(av[ia], bv[ib]);
          }
        }
      });
}

// f(x) -> value; df(x, y) -> derivative given input x and output y.
template <typename F, typename Df>
Tensor UnaryOp(const Tensor& a, F f, Df df) {
  auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  auto an = a.node();
  Tensor result = MakeOp(a.rows(), a.cols(), std::move(out), {a}, nullptr);
  if (result.requires_grad()) {
    std::weak_ptr<internal::Node> self = result.node();
    result.node()->backward = [an, self, df](std::span<const double> grad,
                                             std::span<double* const> in) {
      if (!in[0]) return;
      auto out_node = self.lock();
      const auto& x = an->value;
      const auto& y = out_node->value;
      for (std::size_t i = 0; i < x.size(); ++i) in[0][i] += grad[i] * df(x[i], y[i]);
    };
  }
  return result;
}

double StableSoftplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double StableSigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor::Tensor() : node_(NewNode(0, 0, {})) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : node_(NewNode(rows, cols, std::vector<double>(rows * cols, fill))) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : node_(NewNode(rows, cols, std::move(data))) {}

Tensor Tensor::Scalar(double value) { return Tensor(1, 1, std::vector<double>{value}); }

Tensor Tensor::Row(std::vector<double> values) {
  std::size_t n = values.size();
  return Tensor(1, n, std::move(values));
}

Tensor Tensor::Column(std::vector<double> values) {
  std::size_t n = values.size();
  return Tensor(n, 1, std::move(values));
}

Tensor Tensor::FromRows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("FromRows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data));
}

Tensor Tensor::Identity(std::size_t n) {
  Tensor t(n, n, 0.0);
  auto d = t.MutableLeafData();
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 1.0;
  return t;
}

Tensor Tensor::Variable(std::size_t rows, std::size_t cols, std::vector<double> data) {
  Tensor t(rows, cols, std::move(data));
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::Variable(const Tensor& value) {
  return Variable(value.rows(), value.cols(), value.ToVector());
}

std::size_t Tensor::rows() const { return node_->rows; }
std::size_t Tensor::cols() const { return node_->cols; }
std::size_t Tensor::size() const { return node_->value.size(); }

std::string Tensor::ShapeString() const { return Shape(rows(), cols()); }

std::span<const double> Tensor::data() const { return node_->value; }

std::vector<double> Tensor::ToVector() const { return node_->value; }

double Tensor::at(std::size_t r, std::size_t c) const {
  if (r >= rows() || c >= cols()) {
    throw DimensionError("index (" + std::to_string(r) + "," + std::to_string(c) +
                         ") out of range for " + ShapeString());
  }
  return node_->value[r * cols() + c];
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on non-scalar " + ShapeString());
  return node_->value[0];
}

std::span<const double> Tensor::row(std::size_t r) const {
  if (r >= rows()) throw DimensionError("row index out of range for " + ShapeString());
  return std::span<const double>(node_->value).subspan(r * cols(), cols());
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

bool Tensor::is_leaf() const { return node_->inputs.empty(); }

Tensor Tensor::Detach() const {
  if (!requires_grad()) return *this;
  return Tensor(rows(), cols(), node_->value);
}

Tensor Tensor::Clone() const {
  Tensor t(rows(), cols(), node_->value);
  t.node_->requires_grad = requires_grad() && is_leaf();
  return t;
}

void Tensor::SetRequiresGrad(bool requires_grad) {
  if (!is_leaf()) throw ContractError("SetRequiresGrad on a non-leaf tensor");
  node_->requires_grad = requires_grad;
}

std::span<double> Tensor::MutableLeafData() {
  if (!is_leaf()) throw ContractError("MutableLeafData on a non-leaf tensor");
  return node_->value;
}

Tensor MakeOp(std::size_t rows, std::size_t cols, std::vector<double> value,
              const std::vector<Tensor>& inputs, BackwardFn backward) {
  auto node = NewNode(rows, cols, std::move(value));
  bool needs = false;
  if (grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

bool GradEnabled() { return grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

EnableGradGuard::EnableGradGuard() : previous_(grad_enabled) { grad_enabled = true; }
EnableGradGuard::~EnableGradGuard() { grad_enabled = previous_; }

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + a.ShapeString() + " x " +
                         b.ShapeString());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  auto an = a.node();
  auto bn = b.node();
  return MakeOp(m, n, std::move(out), {a, b},
                [an, bn, m, k, n](std::span<const double> g, std::span<double* const> in) {
                  const auto& av = an->value;
                  const auto& bv = bn->value;
                  if (in[0]) {
                    // dA = G B^T, as row axpys over B^T so the inner loop vectorizes.
                    std::vector<double> bt(k * n);
                    for (std::size_t p = 0; p < k; ++p)
                      for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = bv[p * n + j];
                    for (std::size_t i = 0; i < m; ++i) {
                      const double* grow = g.data() + i * n;
                      double* drow = in[0] + i * k;
                      for (std::size_t j = 0; j < n; ++j) {
                        const double gij = grow[j];
                        if (gij == 0.0) continue;
                        const double* btrow = bt.data() + j * k;
                        for (std::size_t p = 0; p < k; ++p) drow[p] += gij * btrow[p];
                      }
                    }
                  }
                  if (in[1]) {
                    // dB = A^T G
                    for (std::size_t i = 0; i < m; ++i) {
                      const double* grow = g.data() + i * n;
                      for (std::size_t p = 0; p < k; ++p) {
                        const double aip = av[i * k + p];
                        if (aip == 0.0) continue;
                        double* drow = in[1] + p * n;
                        for (std::size_t j = 0; j < n; ++j) drow[j] += aip * grow[j];
                      }
                    }
                  }
                });
}

Tensor Transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  auto av = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return MakeOp(c, r, std::move(out), {a},
                [r, c](std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) in[0][i * c + j] += g[j * r + i];
                });
}

Tensor Add(const Tensor& a, const Tensor& b) {
  return BinaryOp(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  return BinaryOp(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  return BinaryOp(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor Div(const Tensor& a, const Tensor& b) {
  return BinaryOp(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor Neg(const Tensor& a) {
  return UnaryOp(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor Scale(const Tensor& a, double factor) {
  return UnaryOp(
      a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor AddScalar(const Tensor& a, double offset) {
  return UnaryOp(
      a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor Exp(const Tensor& a) {
  return UnaryOp(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor Log(const Tensor& a) {
  return UnaryOp(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor Tanh(const Tensor& a) {
  return UnaryOp(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor Relu(const Tensor& a) {
  return UnaryOp(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor Softplus(const Tensor& a) {
  return UnaryOp(a, StableSoftplus, [](double x, double) { return StableSigmoid(x); });
}

Tensor Sigmoid(const Tensor& a) {
  return UnaryOp(a, StableSigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor Square(const Tensor& a) {
  return UnaryOp(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor Sqrt(const Tensor& a) {
  return UnaryOp(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0 ? 0.5 / y : 0.0; });
}

Tensor Sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  const std::size_t n = a.size();
  return MakeOp(1, 1, {acc}, {a}, [n](std::span<const double> g, std::span<double* const> in) {
    if (!in[0]) return;
    for (std::size_t i = 0; i < n; ++i) in[0][i] += g[0];
  });
}

Tensor Mean(const Tensor& a) {
  if (a.size() == 0) throw DimensionError("mean of an empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor SumRows(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(c, 0.0);
  auto av = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += av[i * c + j];
  return MakeOp(1, c, std::move(out), {a},
                [r, c](std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) in[0][i * c + j] += g[j];
                });
}

Tensor SumCols(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r, 0.0);
  auto av = a.data();
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += av[i * c + j];
    out[i] = acc;
  }
  return MakeOp(r, 1, std::move(out), {a},
                [r, c](std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) in[0][i * c + j] += g[i];
                });
}

Tensor Reshape(const Tensor& a, std::size_t rows, std::size_t cols) {
  if (rows * cols != a.size()) {
    throw DimensionError("cannot reshape " + a.ShapeString() + " to " + std::to_string(rows) +
                         " x " + std::to_string(cols));
  }
  auto av = a.data();
  return MakeOp(rows, cols, std::vector<double>(av.begin(), av.end()), {a},
                [](std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
                });
}

Tensor LogSoftmax(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  auto av = a.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    double m = av[i * c];
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, av[i * c + j]);
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += std::exp(av[i * c + j] - m);
    const double lse = m + std::log(acc);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = av[i * c + j] - lse;
  }
  std::vector<double> probs(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) probs[i] = std::exp(out[i]);
  return MakeOp(r, c, std::move(out), {a},
                [r, c, probs = std::move(probs)](std::span<const double> g,
                                                 std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < r; ++i) {
                    double gs = 0.0;
                    for (std::size_t j = 0; j < c; ++j) gs += g[i * c + j];
                    for (std::size_t j = 0; j < c; ++j)
                      in[0][i * c + j] += g[i * c + j] - probs[i * c + j] * gs;
                  }
                });
}

Tensor SliceRows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.rows()) {
    throw DimensionError("row slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of range for " + a.ShapeString());
  }
  const std::size_t c = a.cols();
  auto av = a.data();
  std::vector<double> out(av.begin() + begin * c, av.begin() + end * c);
  return MakeOp(end - begin, c, std::move(out), {a},
                [begin, c](std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < g.size(); ++i) in[0][begin * c + i] += g[i];
                });
}

Tensor SliceCols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) {
    throw DimensionError("column slice [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") out of range for " + a.ShapeString());
  }
  const std::size_t r = a.rows(), c = a.cols(), w = end - begin;
  auto av = a.data();
  std::vector<double> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = av[i * c + begin + j];
  return MakeOp(r, w, std::move(out), {a},
                [r, c, w, begin](std::span<const double> g, std::span<double* const> in) {
                  if (!in[0]) return;
                  for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < w; ++j) in[0][i * c + begin + j] += g[i * w + j];
                });
}

Tensor ConcatRows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const std::size_t c = parts.front().cols();
  std::size_t r = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.cols() != c) {
      throw DimensionError("row concat: column mismatch " + parts.front().ShapeString() +
                           " vs " + p.ShapeString());
    }
    offsets.push_back(r * c);
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(r * c);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) sizes.push_back(p.size());
  return MakeOp(r, c, std::move(out), parts,
                [offsets, sizes](std::span<const double> g, std::span<double* const> in) {
                  for (std::size_t k = 0; k < in.size(); ++k) {
                    if (!in[k]) continue;
                    for (std::size_t i = 0; i < sizes[k]; ++i) in[k][i] += g[offsets[k] + i];
                  }
                });
}

Tensor ConcatCols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const std::size_t r = parts.front().rows();
  std::size_t c = 0;
  std::vector<std::size_t> offsets, widths;
  for (const auto& p : parts) {
    if (p.rows() != r) {
      throw DimensionError("column concat: row mismatch " + parts.front().ShapeString() +
                           " vs " + p.ShapeString());
    }
    offsets.push_back(c);
    widths.push_back(p.cols());
    c += p.cols();
  }
  std::vector<double> out(r * c);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto pv = parts[k].data();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j)
        out[i * c + offsets[k] + j] = pv[i * widths[k] + j];
  }
  return MakeOp(r, c, std::move(out), parts,
                [r, c, offsets, widths](std::span<const double> g, std::span<double* const> in) {
                  for (std::size_t k = 0; k < in.size(); ++k) {
                    if (!in[k]) continue;
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < widths[k]; ++j)
                        in[k][i * widths[k] + j] += g[i * c + offsets[k] + j];
                  }
                });
}

Tensor StepMask(const Tensor& a) {
  std::vector<double> out(a.size());
  auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0 ? 1.0 : 0.0;
  return Tensor(a.rows(), a.cols(), std::move(out));
}

}  // namespace mprs
