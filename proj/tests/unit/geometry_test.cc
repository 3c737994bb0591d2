#include <gtest/gtest.h>

#include <cmath>

#include "mprs/diffcore/autodiff.h"
#include "mprs/errors.h"
#include "mprs/geometry/decoder.h"
#include "mprs/geometry/geodesic.h"
#include "mprs/geometry/metric.h"
#include "mprs/linalg.h"
#include "mprs/netkit/mlp.h"
#include "mprs/netkit/rbf.h"
#include "test_util.h"

namespace mprs {
namespace {

using testing::MaxRelativeError;
using testing::NumericGradient;
using testing::RandomTensor;

// Curved test decoder: MLP mean and RBF sigma.
class MlpDecoder : public Decoder {
 public:
  MlpDecoder(uint64_t seed, std::size_t d, std::size_t m) {
    Rng rng(seed, "mlp-decoder");
    mean_ = Mlp("mu", {d, 8, m}, {Activation::kTanh, Activation::kSigmoid}, rng);
    sigma_ = RbfNet(RandomTensor(4, d, rng), RandomTensor(1, 4, rng, 0.5, 2.0),
                    RandomTensor(4, m, rng, 0.5, 3.0), 0.5);
  }
  std::size_t latent_dim() const override { return mean_.in_dim(); }
  std::size_t data_dim() const override { return mean_.out_dim(); }
  Tensor Mean(const Tensor& z) const override { return mean_.Forward(z); }
  Dual Mean(const Dual& z) const override { return mean_.Forward(z); }
  Tensor Sigma(const Tensor& z) const override { return sigma_.Sigma(z); }
  Dual Sigma(const Dual& z) const override { return sigma_.Sigma(z); }

 private:
  Mlp mean_;
  RbfNet sigma_;
};

TEST(PullbackMetric, IdentityDecoderGivesIdentity) {
  auto dec = AffineDecoder::Identity(3);
  MetricTensor m = PullbackMetric(*dec, Tensor::Row({0.3, -1.0, 2.0}));
  EXPECT_EQ(m.g, (std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1}));
  for (double l : m.eigenvalues) EXPECT_NEAR(l, 1.0, 1e-15);
}

TEST(PullbackMetric, AffineDecoderGivesWWt) {
  Rng rng(1, "affine");
  Tensor w = RandomTensor(2, 5, rng);
  AffineDecoder dec(w, RandomTensor(1, 5, rng));
  for (int trial = 0; trial < 3; ++trial) {
    MetricTensor m = PullbackMetric(dec, RandomTensor(1, 2, rng, -5, 5));
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 5; ++k) acc += w.at(i, k) * w.at(j, k);
        EXPECT_NEAR(m.g[i * 2 + j], acc, 1e-14);
      }
    }
  }
}

TEST(PullbackMetric, ParaboloidMatchesHandJacobian) {
  const double a = 0.7;
  ParaboloidDecoder dec(a);
  const std::vector<std::vector<double>> probes = {
      {0, 0}, {1, 0}, {-0.5, 0.25}, {2, -1}, {0.1, 0.9}};
  for (const auto& z : probes) {
    // J = [[1,0],[0,1],[2a z1, 2a z2]] so G = I + 4a^2 z z^T.
    MetricTensor m = PullbackMetric(dec, Tensor::Row(z));
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        const double expected = (i == j ? 1.0 : 0.0) + 4 * a * a * z[i] * z[j];
        EXPECT_NEAR(m.g[i * 2 + j], expected, 1e-8);
      }
    }
  }
  MetricTensor at_origin = PullbackMetric(ParaboloidDecoder(1.0), Tensor::Row({0, 0}));
  EXPECT_EQ(at_origin.g, (std::vector<double>{1, 0, 0, 1}));
  MetricTensor at_rim = PullbackMetric(ParaboloidDecoder(1.0), Tensor::Row({1, 0}));
  EXPECT_EQ(at_rim.g, (std::vector<double>{5, 0, 0, 1}));
}

TEST(PullbackMetric, SymmetricAndPsdOnCurvedDecoder) {
  MlpDecoder dec(3, 2, 6);
  Rng rng(4, "psd");
  auto metrics = PullbackMetricBatch(dec, RandomTensor(1000, 2, rng, -3, 3));
  for (const auto& m : metrics) {
    EXPECT_NEAR(m.g[1], m.g[2], 1e-10);
    EXPECT_GE(m.eigenvalues[0], -1e-10);
    EXPECT_LE(m.eigenvalues[0], m.eigenvalues[1]);
  }
}

TEST(PullbackMetric, NonFiniteJacobianIsGeometryErrorNamingPoint) {
  // log(z) has an infinite derivative at 0.
  class LogDecoder : public ConstantSigmaDecoder {
   public:
    LogDecoder() : ConstantSigmaDecoder(1, 1, 1.0) {}
    Tensor Mean(const Tensor& z) const override { return Log(z); }
    Dual Mean(const Dual& z) const override { return Log(z); }
  } dec;
  try {
    PullbackMetric(dec, Tensor::Row({0.0}));
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_NE(std::string(e.what()).find("(0)"), std::string::npos) << e.what();
  }
}

TEST(Curvature, AffineDecodersAreFlat) {
  Rng rng(6, "flat");
  AffineDecoder dec(RandomTensor(3, 7, rng), RandomTensor(1, 7, rng));
  auto k = CurvatureFdBatch(dec, RandomTensor(100, 3, rng, -4, 4));
  for (double x : k) EXPECT_LT(x, 1e-8);
  EXPECT_EQ(CurvatureFd(*AffineDecoder::Identity(2), Tensor::Row({0.5, 0.5})), 0.0);
}

// Independent oracle: eigenvalues of I + 4a^2 z z^T are 1 and 1 + 4a^2|z|^2.
double ParaboloidCurvatureOracle(double a, std::vector<double> z, double h, bool central) {
  auto eig = [a](const std::vector<double>& p) {
    return std::vector<double>{1.0, 1.0 + 4 * a * a * (p[0] * p[0] + p[1] * p[1])};
  };
  double acc = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    auto up = z, down = z;
    up[j] += h;
    if (central) down[j] -= h;
    auto lu = eig(up), ld = eig(down);
    for (std::size_t k = 0; k < 2; ++k) {
      const double rate = (lu[k] - ld[k]) / (central ? 2 * h : h);
      acc += rate * rate;
    }
  }
  return std::sqrt(acc);
}

TEST(Curvature, ParaboloidMatchesIndependentOracle) {
  ParaboloidDecoder dec(1.0);
  const double k = CurvatureFd(dec, Tensor::Row({1, 0}));
  const double oracle = ParaboloidCurvatureOracle(1.0, {1, 0}, 1e-3, false);
  EXPECT_LT(std::abs(k - oracle) / oracle, 1e-6);
  CurvatureOptions central;
  central.central = true;
  const double kc = CurvatureFd(dec, Tensor::Row({1, 0}), central);
  EXPECT_LT(std::abs(kc - ParaboloidCurvatureOracle(1.0, {1, 0}, 1e-3, true)) / kc, 1e-6);
  // Analytic gradient of the top eigenvalue at (1,0) is (8, 0).
  EXPECT_NEAR(kc, 8.0, 1e-5);
}

TEST(Curvature, RimCurvesMoreThanOrigin) {
  ParaboloidDecoder dec(1.0);
  EXPECT_GT(CurvatureFd(dec, Tensor::Row({1.5, 0})), CurvatureFd(dec, Tensor::Row({0.01, 0})));
}

TEST(Curvature, BatchEqualsSinglePoint) {
  MlpDecoder dec(5, 2, 4);
  Rng rng(2, "batch");
  Tensor z = RandomTensor(7, 2, rng);
  auto batch = CurvatureFdBatch(dec, z);
  for (std::size_t r = 0; r < 7; ++r) EXPECT_EQ(batch[r], CurvatureFd(dec, SliceRows(z, r, r + 1)));
}

TEST(LogDetMetric, ValueAndGradientMatchOracles) {
  Rng rng(8, "logdet");
  // Random SPD 3 x 3 per row: A A^T + 0.5 I.
  std::vector<double> entries;
  for (int b = 0; b < 4; ++b) {
    Tensor a = RandomTensor(3, 3, rng);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        double acc = i == j ? 0.5 : 0.0;
        for (std::size_t k = 0; k < 3; ++k) acc += a.at(i, k) * a.at(j, k);
        entries.push_back(acc);
      }
  }
  Tensor g = Tensor::Variable(4, 9, entries);
  Tensor ld = LogDetMetric(g, 3);
  for (std::size_t b = 0; b < 4; ++b) {
    auto ev = EigenvaluesSymmetric(g.row(b), 3);
    EXPECT_NEAR(ld.data()[b], std::log(ev[0] * ev[1] * ev[2]), 1e-12);
  }
  Tensor w = RandomTensor(4, 1, rng);
  Gradients grads = Backward(Sum(Mul(LogDetMetric(g, 3), w)));
  // Symmetric perturbation oracle: d/dt logdet(G + t S) = tr(G^-1 S); the
  // op treats G_ij and G_ji as separate inputs, so perturb one entry at a
  // time through a symmetrized matrix.
  auto numeric = NumericGradient(
      [&](const std::vector<double>& v) {
        std::vector<double> sym(v.size());
        for (std::size_t b = 0; b < 4; ++b)
          for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
              sym[b * 9 + i * 3 + j] = 0.5 * (v[b * 9 + i * 3 + j] + v[b * 9 + j * 3 + i]);
        NoGradGuard ng;
        return Sum(Mul(LogDetMetric(Tensor(4, 9, sym), 3), w)).item();
      },
      entries);
  EXPECT_LT(MaxRelativeError(grads.Of(g).data(), numeric), 1e-6);
}

TEST(LogDetMetric, ClampsSingularAndRejectsIndefinite) {
  Tensor singular = Tensor::Row({1, 0, 0, 0});
  EXPECT_NEAR(LogDetMetric(singular, 2).item(), std::log(1e-12), 1e-12);
  EXPECT_THROW(LogDetMetric(Tensor::Row({1, 0, 0, -1}), 2), GeometryError);
  EXPECT_THROW(LogDetMetric(Tensor::Row({NAN, 0, 0, 1}), 2), GeometryError);
}

TEST(CurveEnergy, ConstantPathHasZeroEnergy) {
  MlpDecoder dec(1, 2, 3);
  Tensor samples(5, 2, std::vector<double>{.1, .2, .1, .2, .1, .2, .1, .2, .1, .2});
  EXPECT_EQ(CurveEnergy(dec, samples).item(), 0.0);
}

TEST(CurveEnergy, EqualSegmentsClosedForm) {
  auto dec = AffineDecoder::Identity(2);
  const std::size_t n = 11;
  std::vector<double> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    pts.push_back(3.0 * t);
    pts.push_back(4.0 * t);
  }
  const double l = 5.0;
  EXPECT_NEAR(CurveEnergy(*dec, Tensor(n, 2, pts)).item(), l * l / (2.0 * (n - 1)), 1e-12);
}

TEST(CurveEnergy, MatchesLoopOracleAndReversal) {
  MlpDecoder dec(2, 2, 4);
  Rng rng(3, "energy");
  Tensor path = RandomTensor(5, 2, rng);
  Tensor mu = dec.Mean(path), sigma = dec.Sigma(path);
  double oracle = 0.0;
  for (std::size_t i = 0; i + 1 < 5; ++i)
    for (std::size_t k = 0; k < 4; ++k)
      oracle += 0.5 * (std::pow(mu.at(i + 1, k) - mu.at(i, k), 2) +
                       std::pow(sigma.at(i + 1, k) - sigma.at(i, k), 2));
  EXPECT_NEAR(CurveEnergy(dec, path).item(), oracle, 1e-12);
  std::vector<Tensor> rows;
  for (std::size_t i = 5; i-- > 0;) rows.push_back(SliceRows(path, i, i + 1));
  EXPECT_NEAR(CurveEnergy(dec, ConcatRows(rows)).item(), oracle, 1e-12);
}

TEST(SplineBasis, InterpolatesKnotsAndReproducesLines) {
  // With n - 1 a multiple of C + 1, knots land on sample parameters.
  Tensor b = SplineBasis(16, 4);
  for (std::size_t r = 0; r < 16; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < 6; ++c) acc += b.at(r, c);
    EXPECT_NEAR(acc, 1.0, 1e-14);
    double first = 0.0;
    for (std::size_t c = 0; c < 6; ++c) first += b.at(r, c) * static_cast<double>(c) / 5.0;
    EXPECT_NEAR(first, static_cast<double>(r) / 15.0, 1e-14);
  }
  for (std::size_t k = 0; k < 6; ++k)
    for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(b.at(3 * k, c), k == c ? 1.0 : 0.0, 1e-14);
}

TEST(Geodesic, EqualEndpointsGiveConstantPath) {
  ParaboloidDecoder dec(1.0);
  GeodesicPath p = Geodesic(dec, Tensor::Row({0.3, 0.4}), Tensor::Row({0.3, 0.4}));
  EXPECT_EQ(p.energy, 0.0);
  for (std::size_t i = 0; i < p.samples.rows(); ++i) {
    EXPECT_EQ(p.samples.at(i, 0), 0.3);
    EXPECT_EQ(p.samples.at(i, 1), 0.4);
  }
}

TEST(Geodesic, FlatMetricKeepsStraightLine) {
  Rng rng(5, "flat-geo");
  AffineDecoder dec(RandomTensor(2, 4, rng), Tensor(1, 4, 0.0));
  Tensor s = Tensor::Row({-1, 0.5}), e = Tensor::Row({2, -1});
  GeodesicPath p = Geodesic(dec, s, e);
  ASSERT_EQ(p.samples.rows(), 20u);
  double worst = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    const double t = static_cast<double>(i) / 19.0;
    for (std::size_t j = 0; j < 2; ++j) {
      const double line = s.data()[j] + t * (e.data()[j] - s.data()[j]);
      worst = std::max(worst, std::abs(p.samples.at(i, j) - line));
    }
  }
  EXPECT_LT(worst, 1e-3);
  EXPECT_EQ(p.samples.at(0, 0), -1.0);
  EXPECT_EQ(p.samples.at(19, 1), -1.0);
}

TEST(Geodesic, ParaboloidBendsBelowStraightEnergy) {
  ParaboloidDecoder dec(1.0);
  Tensor s = Tensor::Row({-1, 0}), e = Tensor::Row({1, 0});
  GeodesicPath p = Geodesic(dec, s, e);
  std::vector<double> line;
  for (std::size_t i = 0; i < 20; ++i) {
    line.push_back(-1.0 + 2.0 * static_cast<double>(i) / 19.0);
    line.push_back(0.0);
  }
  const double straight = CurveEnergy(dec, Tensor(20, 2, line)).item();
  EXPECT_NEAR(p.initial_energy, straight, 1e-12);
  EXPECT_LT(p.energy, straight - 1e-3);
  EXPECT_NEAR(CurveEnergy(dec, p.samples).item(), p.energy, 1e-12);
}

TEST(Geodesic, NeverIncreasesEnergyAndBatchMatchesSingle) {
  MlpDecoder dec(9, 2, 5);
  Rng rng(10, "pairs");
  Tensor starts = RandomTensor(50, 2, rng, -2, 2), ends = RandomTensor(50, 2, rng, -2, 2);
  GeodesicOptions o;
  o.max_iterations = 60;
  auto batch = GeodesicBatch(dec, starts, ends, o);
  for (const auto& p : batch) EXPECT_LE(p.energy, p.initial_energy + 1e-9);
  for (std::size_t i : {0u, 17u, 49u}) {
    GeodesicPath single = Geodesic(dec, SliceRows(starts, i, i + 1), SliceRows(ends, i, i + 1), o);
    EXPECT_EQ(single.energy, batch[i].energy);
    EXPECT_EQ(single.samples.ToVector(), batch[i].samples.ToVector());
    EXPECT_EQ(single.iterations, batch[i].iterations);
  }
}

TEST(GeodesicLength, DegenerateAndEuclidean) {
  auto dec = AffineDecoder::Identity(2);
  EXPECT_EQ(GeodesicLength(*dec, Tensor(4, 2, std::vector<double>(8, 1.5))), 0.0);
  GeodesicPath p = Geodesic(*dec, Tensor::Row({0, 0}), Tensor::Row({3, 4}));
  EXPECT_NEAR(GeodesicLength(*dec, p.samples), 5.0, 1e-6);
}

TEST(GeodesicLength, StableUnderRefinement) {
  MlpDecoder dec(4, 2, 6);
  Tensor s = Tensor::Row({-1, -1}), e = Tensor::Row({1, 1});
  GeodesicPath p = Geodesic(dec, s, e);
  // Resample the same spline at n and 2n points.
  Tensor knots = ConcatRows({s, p.control_points, e});
  const double coarse = GeodesicLength(dec, MatMul(SplineBasis(20, 4), knots));
  const double fine = GeodesicLength(dec, MatMul(SplineBasis(40, 4), knots));
  EXPECT_GT(coarse, 0.0);
  EXPECT_LT(std::abs(fine - coarse) / fine, 0.01);
}

TEST(LinearizedSquaredDistance, EqualsQuadraticFormAtMidpoint) {
  MlpDecoder dec(6, 2, 5);
  Rng rng(1, "lin");
  Tensor a = RandomTensor(3, 2, rng), b = RandomTensor(3, 2, rng);
  Tensor l2 = LinearizedSquaredDistance(dec, a, b);
  for (std::size_t r = 0; r < 3; ++r) {
    Tensor mid = Scale(Add(SliceRows(a, r, r + 1), SliceRows(b, r, r + 1)), 0.5);
    MetricTensor m = PullbackMetric(dec, mid);
    const double dx = a.at(r, 0) - b.at(r, 0), dy = a.at(r, 1) - b.at(r, 1);
    const double q = m.g[0] * dx * dx + 2 * m.g[1] * dx * dy + m.g[3] * dy * dy;
    EXPECT_NEAR(l2.data()[r], q, 1e-12);
  }
}

TEST(PathSquaredDistance, FlatCaseEqualsEuclidean) {
  auto dec = AffineDecoder::Identity(2);
  Tensor a = Tensor::Variable(1, 2, {0, 0});
  Tensor d = PathSquaredDistance(*dec, a, Tensor::Row({3, 4}));
  EXPECT_NEAR(d.item(), 25.0, 1e-6);
  Gradients g = Backward(Sum(d));
  EXPECT_NEAR(g.Of(a).data()[0], -6.0, 1e-5);
}

}  // namespace
}  // namespace mprs
