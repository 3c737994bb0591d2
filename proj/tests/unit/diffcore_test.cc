#include <gtest/gtest.h>

#include <cstring>

#include "mprs/diffcore/autodiff.h"
#include "mprs/diffcore/dual.h"
#include "mprs/diffcore/tensor.h"
#include "mprs/errors.h"
#include "mprs/netkit/mlp.h"
#include "test_util.h"

namespace mprs {
namespace {

using testing::MaxAbsDiff;
using testing::MaxRelativeError;
using testing::NumericGradient;
using testing::RandomTensor;
using testing::RandomVariable;

TEST(MatMul, IdentityLeavesMatrixUnchanged) {
  Tensor out = MatMul(Tensor::Identity(2), Tensor::FromRows({{5, 6}, {7, 8}}));
  EXPECT_EQ(out.ToVector(), (std::vector<double>{5, 6, 7, 8}));
}

TEST(MatMul, RowTimesColumn) {
  Tensor out = MatMul(Tensor::FromRows({{1, 2}}), Tensor::FromRows({{3}, {4}}));
  ASSERT_EQ(out.rows(), 1u);
  ASSERT_EQ(out.cols(), 1u);
  EXPECT_EQ(out.item(), 11.0);
}

TEST(MatMul, MatchesTripleLoop) {
  Rng rng(7, "matmul");
  Tensor a = RandomTensor(4, 3, rng), b = RandomTensor(3, 2, rng);
  Tensor c = MatMul(a, b);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 3; ++k) acc += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(c.at(i, j), acc, 1e-12);
    }
  }
}

TEST(MatMul, ShapeMismatchNamesBothShapes) {
  try {
    MatMul(Tensor(2, 3), Tensor(2, 3));
    FAIL() << "expected a dimension error";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos) << e.what();
  }
}

TEST(Backward, SquareAtThree) {
  Tensor x = Tensor::Variable(1, 1, {3.0});
  Gradients g = Backward(Mul(x, x));
  EXPECT_EQ(g.Of(x).item(), 6.0);
}

TEST(Backward, LinearMapGivesColumnSums) {
  Tensor a = Tensor::FromRows({{1, 2, 3}, {4, 5, 6}});
  Tensor v = Tensor::Variable(3, 1, {0.3, -0.1, 2.0});
  Gradients g = Backward(Sum(MatMul(a, v)));
  EXPECT_EQ(g.Of(v).ToVector(), (std::vector<double>{5, 7, 9}));
}

TEST(Backward, NonScalarRootIsContractError) {
  Tensor x = Tensor::Variable(2, 1, {1.0, 2.0});
  EXPECT_THROW(Backward(Mul(x, x)), ContractError);
  EXPECT_THROW(Backward(Tensor::Scalar(1.0)), ContractError);
}

TEST(Backward, DetachedTensorReceivesNothing) {
  Tensor x = Tensor::Variable(1, 2, {1.0, 2.0});
  Tensor y = Tensor::Variable(1, 2, {3.0, 4.0});
  Gradients g = Backward(Sum(Mul(x, y.Detach())));
  EXPECT_TRUE(g.Has(x));
  EXPECT_FALSE(g.Has(y));
}

TEST(Backward, TwoLayerNetworkMatchesFiniteDifferences) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed, "two-layer");
    Tensor x = RandomTensor(5, 3, rng);
    Tensor w1 = RandomVariable(3, 4, rng), b1 = RandomVariable(1, 4, rng);
    Tensor w2 = RandomVariable(4, 2, rng), b2 = RandomVariable(1, 2, rng);
    auto loss = [&](const Tensor& w1v) {
      Tensor h = Tanh(Add(MatMul(x, w1v), b1));
      return Mean(Square(Add(MatMul(h, w2), b2)));
    };
    Gradients g = Backward(loss(w1));
    auto numeric = NumericGradient(
        [&](const std::vector<double>& w) {
          NoGradGuard ng;
          return loss(Tensor(3, 4, w)).item();
        },
        w1.ToVector());
    EXPECT_LT(MaxRelativeError(g.Of(w1).data(), numeric), 1e-4) << "seed " << seed;
  }
}

TEST(Backward, Deterministic) {
  Rng rng(3, "det");
  Tensor x = RandomTensor(6, 4, rng);
  Tensor w = RandomVariable(4, 3, rng);
  auto run = [&] {
    Tensor loss = Sum(Softplus(MatMul(Tanh(x), w)));
    return Backward(loss).Of(w).ToVector();
  };
  auto a = run(), b = run();
  EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)), 0);
}

struct UnaryCase {
  const char* name;
  std::function<Tensor(const Tensor&)> op;
  double lo, hi;
};

struct BinaryCase {
  const char* name;
  std::function<Tensor(const Tensor&, const Tensor&)> op;
  std::size_t ar, ac, br, bc;
  double lo, hi;
};

class PrimitiveGradients : public ::testing::TestWithParam<uint64_t> {};

TEST_P(PrimitiveGradients, UnaryMatchFiniteDifferences) {
  const uint64_t seed = GetParam();
  std::vector<UnaryCase> cases = {
      {"neg", [](const Tensor& a) { return Neg(a); }, -2, 2},
      {"scale", [](const Tensor& a) { return Scale(a, -1.7); }, -2, 2},
      {"add_scalar", [](const Tensor& a) { return AddScalar(a, 0.3); }, -2, 2},
      {"exp", [](const Tensor& a) { return Exp(a); }, -2, 2},
      {"log", [](const Tensor& a) { return Log(a); }, 0.2, 3},
      {"tanh", [](const Tensor& a) { return Tanh(a); }, -2, 2},
      {"relu", [](const Tensor& a) { return Relu(a); }, 0.1, 2},
      {"relu_negative", [](const Tensor& a) { return Relu(a); }, -2, -0.1},
      {"softplus", [](const Tensor& a) { return Softplus(a); }, -3, 3},
      {"sigmoid", [](const Tensor& a) { return Sigmoid(a); }, -3, 3},
      {"square", [](const Tensor& a) { return Square(a); }, -2, 2},
      {"sqrt", [](const Tensor& a) { return Sqrt(a); }, 0.2, 3},
      {"sum", [](const Tensor& a) { return Sum(a); }, -2, 2},
      {"mean", [](const Tensor& a) { return Mean(a); }, -2, 2},
      {"sum_rows", [](const Tensor& a) { return SumRows(a); }, -2, 2},
      {"sum_cols", [](const Tensor& a) { return SumCols(a); }, -2, 2},
      {"transpose", [](const Tensor& a) { return Transpose(a); }, -2, 2},
      {"slice_rows", [](const Tensor& a) { return SliceRows(a, 1, 3); }, -2, 2},
      {"slice_cols", [](const Tensor& a) { return SliceCols(a, 0, 2); }, -2, 2},
      {"concat_rows", [](const Tensor& a) { return ConcatRows({a, Square(a)}); }, -2, 2},
      {"concat_cols", [](const Tensor& a) { return ConcatCols({Exp(a), a}); }, -2, 2},
  };
  for (const auto& c : cases) {
    Rng rng(seed, c.name);
    Tensor x = RandomVariable(3, 4, rng, c.lo, c.hi);
    Tensor probe_shape = c.op(x);
    Tensor weights = RandomTensor(probe_shape.rows(), probe_shape.cols(), rng);
    auto loss = [&](const Tensor& in) { return Sum(Mul(c.op(in), weights)); };
    Gradients g = Backward(loss(x));
    auto numeric = NumericGradient(
        [&](const std::vector<double>& v) {
          NoGradGuard ng;
          return loss(Tensor(3, 4, v)).item();
        },
        x.ToVector());
    EXPECT_LT(MaxRelativeError(g.Of(x).data(), numeric), 1e-4) << c.name << " seed " << seed;
  }
}

TEST_P(PrimitiveGradients, BinaryMatchFiniteDifferences) {
  const uint64_t seed = GetParam();
  std::vector<BinaryCase> cases = {
      {"matmul", [](const Tensor& a, const Tensor& b) { return MatMul(a, b); }, 3, 4, 4, 2, -1, 1},
      {"add", [](const Tensor& a, const Tensor& b) { return Add(a, b); }, 3, 4, 3, 4, -1, 1},
      {"add_row_broadcast", [](const Tensor& a, const Tensor& b) { return Add(a, b); }, 3, 4, 1, 4, -1, 1},
      {"add_outer_broadcast", [](const Tensor& a, const Tensor& b) { return Add(a, b); }, 3, 1, 1, 4, -1, 1},
      {"sub", [](const Tensor& a, const Tensor& b) { return Sub(a, b); }, 3, 4, 3, 1, -1, 1},
      {"mul", [](const Tensor& a, const Tensor& b) { return Mul(a, b); }, 3, 4, 3, 4, -1, 1},
      {"mul_scalar_broadcast", [](const Tensor& a, const Tensor& b) { return Mul(a, b); }, 3, 4, 1, 1, -1, 1},
      {"div", [](const Tensor& a, const Tensor& b) { return Div(a, b); }, 3, 4, 1, 4, 0.5, 2},
  };
  for (const auto& c : cases) {
    Rng rng(seed, c.name);
    Tensor a = RandomVariable(c.ar, c.ac, rng, c.lo, c.hi);
    Tensor b = RandomVariable(c.br, c.bc, rng, c.lo, c.hi);
    Tensor shape = c.op(a, b);
    Tensor weights = RandomTensor(shape.rows(), shape.cols(), rng);
    Gradients g = Backward(Sum(Mul(c.op(a, b), weights)));
    auto num_a = NumericGradient(
        [&](const std::vector<double>& v) {
          NoGradGuard ng;
          return Sum(Mul(c.op(Tensor(c.ar, c.ac, v), b), weights)).item();
        },
        a.ToVector());
    auto num_b = NumericGradient(
        [&](const std::vector<double>& v) {
          NoGradGuard ng;
          return Sum(Mul(c.op(a, Tensor(c.br, c.bc, v)), weights)).item();
        },
        b.ToVector());
    EXPECT_LT(MaxRelativeError(g.Of(a).data(), num_a), 1e-4) << c.name << " seed " << seed;
    EXPECT_LT(MaxRelativeError(g.Of(b).data(), num_b), 1e-4) << c.name << " seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(TenSeeds, PrimitiveGradients, ::testing::Range<uint64_t>(0, 10));

TEST(Sqrt, DerivativeAtZeroIsZero) {
  Tensor x = Tensor::Variable(1, 1, {0.0});
  EXPECT_EQ(Backward(Sum(Sqrt(x))).Of(x).item(), 0.0);
}

TEST(Broadcast, IncompatibleShapesThrow) {
  EXPECT_THROW(Add(Tensor(2, 3), Tensor(3, 2)), DimensionError);
}

Dual LinearMap(const Dual& z, const Tensor& a) { return MatMul(z, Transpose(a)); }

TEST(Jvp, LinearMapGivesAv) {
  Tensor a = Tensor::FromRows({{1, 2}, {3, 4}, {5, 6}});
  Tensor v = Tensor::Row({0.5, -1.0});
  Tensor out = Jvp([&](const Dual& z) { return LinearMap(z, a); }, Tensor::Row({7, -3}), v);
  EXPECT_EQ(out.ToVector(), (std::vector<double>{-1.5, -2.5, -3.5}));
}

TEST(Jvp, ElementwiseSquare) {
  Tensor out = Jvp([](const Dual& z) { return Square(z); }, Tensor::Row({1, 2}),
                   Tensor::Row({1, 0}));
  EXPECT_EQ(out.ToVector(), (std::vector<double>{2, 0}));
}

TEST(Jvp, ShapeMismatchIsDimensionError) {
  EXPECT_THROW(Jvp([](const Dual& z) { return z; }, Tensor::Row({1, 2}), Tensor::Row({1, 2, 3})),
               DimensionError);
}

Mlp RandomMlp(Rng& rng, std::size_t in, std::size_t out, std::size_t depth) {
  std::vector<std::size_t> widths{in};
  std::vector<Activation> acts;
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    widths.push_back(5);
    acts.push_back(l % 2 ? Activation::kSoftplus : Activation::kTanh);
  }
  widths.push_back(out);
  acts.push_back(Activation::kSigmoid);
  return Mlp("net", widths, acts, rng);
}

TEST(Jvp, RandomMlpMatchesCentralDifference) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed, "jvp");
    Mlp net = RandomMlp(rng, 3, 4, 2);
    Tensor z = RandomTensor(1, 3, rng), v = RandomTensor(1, 3, rng);
    Tensor out = Jvp([&](const Dual& x) { return net.Forward(x); }, z, v);
    const double h = 1e-5;
    Tensor up = net.Forward(Add(z, Scale(v, h)));
    Tensor down = net.Forward(Sub(z, Scale(v, h)));
    std::vector<double> fd(4);
    for (std::size_t i = 0; i < 4; ++i) fd[i] = (up.data()[i] - down.data()[i]) / (2 * h);
    EXPECT_LT(MaxRelativeError(out.data(), fd), 1e-5) << "seed " << seed;
  }
}

TEST(Jacobian, LinearMapGivesMatrix) {
  Tensor a = Tensor::FromRows({{1, 2}, {3, 4}, {5, 6}});
  Tensor j = Jacobian([&](const Dual& z) { return LinearMap(z, a); }, Tensor::Row({0.1, 0.2}));
  EXPECT_EQ(j.ToVector(), a.ToVector());
}

TEST(Jacobian, HandDifferentiatedPolynomial) {
  auto f = [](const Dual& z) {
    Dual z1 = SliceCols(z, 0, 1), z2 = SliceCols(z, 1, 2);
    return ConcatCols({Square(z1), Mul(z1, z2)});
  };
  Tensor j = Jacobian(f, Tensor::Row({1, 2}));
  EXPECT_EQ(j.ToVector(), (std::vector<double>{2, 0, 2, 1}));
}

TEST(Jacobian, ThreeLayerDecoderMatchesFiniteDifferences) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed, "jacobian");
    Mlp net = RandomMlp(rng, 2, 6, 3);
    Tensor z = RandomTensor(1, 2, rng);
    Tensor j = Jacobian([&](const Dual& x) { return net.Forward(x); }, z);
    const double h = 1e-5;
    for (std::size_t c = 0; c < 2; ++c) {
      std::vector<double> e(2, 0.0);
      e[c] = h;
      Tensor up = net.Forward(Add(z, Tensor::Row(e)));
      Tensor down = net.Forward(Sub(z, Tensor::Row(e)));
      for (std::size_t r = 0; r < 6; ++r) {
        const double fd = (up.data()[r] - down.data()[r]) / (2 * h);
        const double rel = std::abs(j.at(r, c) - fd) / std::max({std::abs(fd), std::abs(j.at(r, c)), 1e-6});
        EXPECT_LT(rel, 1e-4) << "seed " << seed;
      }
    }
  }
}

TEST(Jacobian, ColumnsEqualJvpOnBasisVectors) {
  Rng rng(11, "jac-vs-jvp");
  Mlp net = RandomMlp(rng, 3, 5, 3);
  Tensor z = RandomTensor(1, 3, rng);
  DualMap f = [&](const Dual& x) { return net.Forward(x); };
  Tensor j = Jacobian(f, z);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> e(3, 0.0);
    e[c] = 1.0;
    Tensor col = Jvp(f, z, Tensor::Row(e));
    for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(j.at(r, c), col.data()[r]);
  }
}

TEST(Dual, TangentsAreReverseDifferentiable) {
  // d/dW of sum(J) where J is the Jacobian of tanh(z W); checked against
  // finite differences on W.
  Rng rng(5, "double");
  Tensor w = RandomVariable(2, 3, rng);
  Tensor z = RandomTensor(1, 2, rng);
  auto jac_sum = [&](const Tensor& wv) {
    Dual out = Tanh(MatMul(SeedCoordinates(z), wv));
    return Add(Sum(Square(out.tangents[0])), Sum(out.tangents[1]));
  };
  Gradients g = Backward(jac_sum(w));
  auto numeric = NumericGradient(
      [&](const std::vector<double>& v) {
        NoGradGuard ng;
        return jac_sum(Tensor(2, 3, v)).item();
      },
      w.ToVector());
  EXPECT_LT(MaxRelativeError(g.Of(w).data(), numeric), 1e-4);
}

TEST(Dual, PrimitiveTangentsMatchFiniteDifferences) {
  std::vector<std::pair<const char*, std::function<Dual(const Dual&)>>> cases = {
      {"exp", [](const Dual& x) { return Exp(x); }},
      {"log", [](const Dual& x) { return Log(AddScalar(Square(x), 0.5)); }},
      {"tanh", [](const Dual& x) { return Tanh(x); }},
      {"softplus", [](const Dual& x) { return Softplus(x); }},
      {"sigmoid", [](const Dual& x) { return Sigmoid(x); }},
      {"sqrt", [](const Dual& x) { return Sqrt(AddScalar(Square(x), 1.0)); }},
      {"relu", [](const Dual& x) { return Relu(AddScalar(x, 5.0)); }},
      {"mul", [](const Dual& x) { return Mul(x, Exp(x)); }},
      {"sub", [](const Dual& x) { return Sub(Square(x), x); }},
      {"neg", [](const Dual& x) { return Neg(Scale(x, 2.0)); }},
      {"sum_cols", [](const Dual& x) { return SumCols(Square(x)); }},
  };
  Rng rng(9, "dual-prims");
  Tensor z = RandomTensor(1, 3, rng);
  Tensor v = RandomTensor(1, 3, rng);
  for (const auto& [name, f] : cases) {
    Tensor out = Jvp(f, z, v);
    const double h = 1e-5;
    Tensor up = f(Constant(Add(z, Scale(v, h)), 0)).value;
    Tensor down = f(Constant(Sub(z, Scale(v, h)), 0)).value;
    std::vector<double> fd(out.size());
    for (std::size_t i = 0; i < fd.size(); ++i) fd[i] = (up.data()[i] - down.data()[i]) / (2 * h);
    EXPECT_LT(MaxRelativeError(out.data(), fd), 1e-6) << name;
  }
}

TEST(Tensor, ShapeInvariant) {
  Tensor t(3, 5, 1.0);
  EXPECT_EQ(t.rows() * t.cols(), t.data().size());
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
}

}  // namespace
}  // namespace mprs
