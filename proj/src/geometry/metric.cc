#include "mprs/geometry/metric.h"

#include <cmath>
#include <sstream>

#include "mprs/errors.h"
#include "mprs/linalg.h"

namespace mprs {
namespace {

std::string PointString(std::span<const double> z) {
  std::ostringstream out;
  out.precision(17);
  out << "(";
  for (std::size_t i = 0; i < z.size(); ++i) out << (i ? ", " : "") << z[i];
  out << ")";
  return out.str();
}

// Largest metric batch evaluated at once by the finite-difference code.
constexpr std::size_t kChunk = 512;

}  // namespace

Tensor MetricEntries(const Decoder& decoder, const Tensor& z) {
  const std::size_t d = decoder.latent_dim();
  if (z.cols() != d) {
    throw DimensionError("metric: latent width " + std::to_string(z.cols()) + ", decoder expects " +
                         std::to_string(d));
  }
  Dual seed = SeedCoordinates(z);
  Dual mu = decoder.Mean(seed);
  Dual sigma = decoder.Sigma(seed);
  std::vector<Tensor> cols;
  cols.reserve(d * d);
  std::vector<Tensor> upper(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      upper[i * d + j] = Add(SumCols(Mul(mu.tangents[i], mu.tangents[j])),
                             SumCols(Mul(sigma.tangents[i], sigma.tangents[j])));
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) cols.push_back(i <= j ? upper[i * d + j] : upper[j * d + i]);
  return ConcatCols(cols);
}

Tensor LogDetMetric(const Tensor& entries, std::size_t d, double floor) {
  if (entries.cols() != d * d) {
    throw DimensionError("logdet: entries " + entries.ShapeString() + " are not d^2 wide for d=" +
                         std::to_string(d));
  }
  const std::size_t b = entries.rows();
  std::vector<double> value(b);
  // Per-row gradient d(logdet)/dG, kept for the backward pass.
  auto inverse = std::make_shared<std::vector<double>>(b * d * d, 0.0);
  for (std::size_t r = 0; r < b; ++r) {
    auto g = entries.row(r);
    for (double x : g) {
      if (!std::isfinite(x)) throw GeometryError("logdet: non-finite metric entry in row " +
                                                 std::to_string(r));
    }
    SymmetricEigen eig = EigenSymmetric(g, d);
    const double top = std::max(1.0, std::abs(eig.values.back()));
    if (eig.values.front() < -1e-8 * top) {
      throw GeometryError("logdet: metric in row " + std::to_string(r) +
                          " is indefinite (eigenvalue " + std::to_string(eig.values.front()) + ")");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double lambda = eig.values[k];
      if (lambda > floor) {
        acc += std::log(lambda);
        const double* v = eig.vectors.data() + k * d;
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) (*inverse)[r * d * d + i * d + j] += v[i] * v[j] / lambda;
      } else {
        acc += std::log(floor);
      }
    }
    value[r] = acc;
  }
  const std::size_t width = d * d;
  return MakeOp(b, 1, std::move(value), {entries},
                [inverse, b, width](std::span<const double> grad_out,
                                    std::span<double* const> input_grads) {
                  if (!input_grads[0]) return;
                  for (std::size_t r = 0; r < b; ++r)
                    for (std::size_t k = 0; k < width; ++k)
                      input_grads[0][r * width + k] += grad_out[r] * (*inverse)[r * width + k];
                });
}

MetricTensor MakeMetricTensor(std::vector<double> point, std::span<const double> g, std::size_t d) {
  MetricTensor m;
  m.dim = d;
  m.point = std::move(point);
  m.g.resize(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m.g[i * d + j] = 0.5 * (g[i * d + j] + g[j * d + i]);
  for (double x : m.g) {
    if (!std::isfinite(x)) throw GeometryError("non-finite metric at z = " + PointString(m.point));
  }
  SymmetricEigen eig = EigenSymmetric(m.g, d);
  m.eigenvalues = std::move(eig.values);
  m.eigenvectors = std::move(eig.vectors);
  return m;
}

std::vector<MetricTensor> PullbackMetricBatch(const Decoder& decoder, const Tensor& z) {
  NoGradGuard no_grad;
  const std::size_t d = decoder.latent_dim();
  std::vector<MetricTensor> out;
  out.reserve(z.rows());
  for (std::size_t begin = 0; begin < z.rows(); begin += kChunk) {
    const std::size_t end = std::min(z.rows(), begin + kChunk);
    Tensor part = SliceRows(z, begin, end);
    Tensor entries = MetricEntries(decoder, part);
    for (std::size_t r = 0; r < part.rows(); ++r) {
      auto row = part.row(r);
      out.push_back(MakeMetricTensor(std::vector<double>(row.begin(), row.end()), entries.row(r), d));
    }
  }
  return out;
}

MetricTensor PullbackMetric(const Decoder& decoder, const Tensor& z) {
  if (z.rows() != 1) throw DimensionError("PullbackMetric takes a single 1 x d latent");
  return PullbackMetricBatch(decoder, z).front();
}

std::vector<double> CurvatureFdBatch(const Decoder& decoder, const Tensor& z,
                                     const CurvatureOptions& options) {
  if (!(options.step > 0.0)) throw ContractError("curvature step must be positive");
  const std::size_t d = decoder.latent_dim();
  if (z.cols() != d) throw DimensionError("curvature: latent width mismatch");
  const double h = options.step;
  // Per point: the base, then +h e_j for each j, then -h e_j when central.
  const std::size_t per = 1 + d * (options.central ? 2 : 1);
  std::vector<double> points;
  points.reserve(z.rows() * per * d);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto base = z.row(r);
    points.insert(points.end(), base.begin(), base.end());
    for (int sign : {1, -1}) {
      if (sign < 0 && !options.central) break;
      for (std::size_t j = 0; j < d; ++j) {
        std::size_t at = points.size();
        points.insert(points.end(), base.begin(), base.end());
        points[at + j] += sign * h;
      }
    }
  }
  std::vector<MetricTensor> metrics =
      PullbackMetricBatch(decoder, Tensor(z.rows() * per, d, std::move(points)));
  std::vector<double> out(z.rows());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const MetricTensor* m = &metrics[r * per];
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const auto& plus = m[1 + j].eigenvalues;
      const auto& minus = options.central ? m[1 + d + j].eigenvalues : m[0].eigenvalues;
      const double denom = options.central ? 2.0 * h : h;
      for (std::size_t k = 0; k < d; ++k) {
        const double rate = (plus[k] - minus[k]) / denom;
        acc += rate * rate;
      }
    }
    out[r] = std::sqrt(acc);
  }
  return out;
}

double CurvatureFd(const Decoder& decoder, const Tensor& z, const CurvatureOptions& options) {
  if (z.rows() != 1) throw DimensionError("CurvatureFd takes a single 1 x d latent");
  return CurvatureFdBatch(decoder, z, options).front();
}

}  // namespace mprs
