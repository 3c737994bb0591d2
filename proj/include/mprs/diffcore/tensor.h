#ifndef MPRS_DIFFCORE_TENSOR_H_
#define MPRS_DIFFCORE_TENSOR_H_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mprs {

// Receives the gradient of the op output and accumulates into the gradient
// buffers of its inputs. Entries of `input_grads` are null for inputs that do
// not require a gradient.
using BackwardFn = std::function<void(std::span<const double> grad_out,
                                      std::span<double* const> input_grads)>;

namespace internal {

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
};

}  // namespace internal

// Dense row-major matrix of doubles. Vectors are 1 x n (row) or n x 1
// (column); a scalar is 1 x 1. Copies share the underlying value, and values
// never change after construction except for leaf parameters updated by an
// optimizer through MutableLeafData().
class Tensor {
 public:
  Tensor();
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor Scalar(double value);
  static Tensor Row(std::vector<double> values);
  static Tensor Column(std::vector<double> values);
  static Tensor FromRows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor Identity(std::size_t n);
  // A leaf that participates in differentiation.
  static Tensor Variable(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor Variable(const Tensor& value);

  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const;
  std::vector<std::size_t> shape() const { return {rows(), cols()}; }
  std::string ShapeString() const;

  std::span<const double> data() const;
  std::vector<double> ToVector() const;
  double at(std::size_t r, std::size_t c) const;
  // Value of a 1 x 1 tensor.
  double item() const;
  std::span<const double> row(std::size_t r) const;

  bool requires_grad() const;
  bool is_leaf() const;
  // Same values, no tape participation.
  Tensor Detach() const;
  // Deep copy of the values; the copy is a fresh leaf with the same
  // requires_grad flag.
  Tensor Clone() const;
  void SetRequiresGrad(bool requires_grad);
  std::span<double> MutableLeafData();

  const internal::Node* id() const { return node_.get(); }
  const std::shared_ptr<internal::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<internal::Node> node) : node_(std::move(node)) {}
  friend Tensor MakeOp(std::size_t, std::size_t, std::vector<double>,
                       const std::vector<Tensor>&, BackwardFn);

  std::shared_ptr<internal::Node> node_;
};

// Creates an op node. The node is recorded on the tape only when gradient
// recording is enabled and at least one input requires a gradient; otherwise
// `backward` is dropped and the result is a constant.
Tensor MakeOp(std::size_t rows, std::size_t cols, std::vector<double> value,
              const std::vector<Tensor>& inputs, BackwardFn backward);

bool GradEnabled();

// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Re-enables recording inside a NoGradGuard scope, for local optimizations.
class EnableGradGuard {
 public:
  EnableGradGuard();
  ~EnableGradGuard();
  EnableGradGuard(const EnableGradGuard&) = delete;
  EnableGradGuard& operator=(const EnableGradGuard&) = delete;

 private:
  bool previous_;
};

// Primitive operations. Binary elementwise ops broadcast any dimension of
// size 1 against the other operand.
Tensor MatMul(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Div(const Tensor& a, const Tensor& b);
Tensor Neg(const Tensor& a);
Tensor Scale(const Tensor& a, double factor);
Tensor AddScalar(const Tensor& a, double offset);
Tensor Exp(const Tensor& a);
Tensor Log(const Tensor& a);
Tensor Tanh(const Tensor& a);
Tensor Relu(const Tensor& a);
Tensor Softplus(const Tensor& a);
Tensor Sigmoid(const Tensor& a);
Tensor Square(const Tensor& a);
// The derivative at 0 is taken to be 0.
Tensor Sqrt(const Tensor& a);
Tensor Sum(const Tensor& a);
Tensor Mean(const Tensor& a);
// Sum over rows: r x c -> 1 x c.
Tensor SumRows(const Tensor& a);
// Sum over columns: r x c -> r x 1.
Tensor SumCols(const Tensor& a);
Tensor SliceRows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor SliceCols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor ConcatRows(const std::vector<Tensor>& parts);
Tensor ConcatCols(const std::vector<Tensor>& parts);
// Same row-major values viewed as rows x cols.
Tensor Reshape(const Tensor& a, std::size_t rows, std::size_t cols);
// Row-wise log-softmax, computed with the max subtracted.
Tensor LogSoftmax(const Tensor& a);
// Constant 0/1 mask of a > 0; never taped.
Tensor StepMask(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return Add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return Sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return Mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return Div(a, b); }
inline Tensor operator-(const Tensor& a) { return Neg(a); }
inline Tensor operator*(const Tensor& a, double s) { return Scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return Scale(a, s); }
inline Tensor operator+(const Tensor& a, double s) { return AddScalar(a, s); }

}  // namespace mprs

#endif  // MPRS_DIFFCORE_TENSOR_H_
