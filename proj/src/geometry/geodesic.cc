#include "mprs/geometry/geodesic.h"

#include <algorithm>
#include <cmath>
#include <memory>

#include "mprs/diffcore/autodiff.h"
#include "mprs/errors.h"
#include "mprs/netkit/adam.h"

namespace mprs {
namespace {

// Second derivatives of the natural spline through knot values y on uniform
// knots with spacing h.
std::vector<double> NaturalMoments(const std::vector<double>& y, double h) {
  const std::size_t m = y.size();
  std::vector<double> moments(m, 0.0);
  if (m < 3) return moments;
  const std::size_t n = m - 2;
  std::vector<double> diag(n, 2.0 * h / 3.0), rhs(n);
  const double off = h / 6.0;
  for (std::size_t i = 0; i < n; ++i) rhs[i] = (y[i + 2] - 2.0 * y[i + 1] + y[i]) / h;
  // Thomas algorithm.
  for (std::size_t i = 1; i < n; ++i) {
    const double w = off / diag[i - 1];
    diag[i] -= w * off;
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = n; i-- > 0;) {
    double x = rhs[i];
    if (i + 1 < n) x -= off * moments[i + 2];
    moments[i + 1] = x / diag[i];
  }
  return moments;
}

double EvaluateSpline(const std::vector<double>& y, const std::vector<double>& moments, double h,
                      double t) {
  const std::size_t segments = y.size() - 1;
  std::size_t k = std::min(static_cast<std::size_t>(t / h), segments - 1);
  const double a = static_cast<double>(k + 1) * h - t;
  const double b = t - static_cast<double>(k) * h;
  return moments[k] * a * a * a / (6.0 * h) + moments[k + 1] * b * b * b / (6.0 * h) +
         (y[k] / h - moments[k] * h / 6.0) * a + (y[k + 1] / h - moments[k + 1] * h / 6.0) * b;
}

// Samples of P splines sharing one basis: rows p*n .. p*n+n-1 hold path p.
// Taped with respect to the stacked controls (P*C x d).
Tensor SplineSamples(const Tensor& basis, const Tensor& controls, const Tensor& starts,
                     const Tensor& ends) {
  const std::size_t n = basis.rows(), c = basis.cols() - 2, d = controls.cols();
  const std::size_t paths = starts.rows();
  std::vector<double> out(paths * n * d, 0.0);
  auto bs = basis.data();
  auto cs = controls.data();
  for (std::size_t p = 0; p < paths; ++p) {
    auto s = starts.row(p);
    auto e = ends.row(p);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = out.data() + (p * n + i) * d;
      const double* w = bs.data() + i * (c + 2);
      for (std::size_t j = 0; j < d; ++j) row[j] = w[0] * s[j] + w[c + 1] * e[j];
      for (std::size_t k = 0; k < c; ++k) {
        if (w[k + 1] == 0.0) continue;
        const double* ctrl = cs.data() + (p * c + k) * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += w[k + 1] * ctrl[j];
      }
    }
  }
  return MakeOp(paths * n, d, std::move(out), {controls},
                [basis, n, c, d, paths](std::span<const double> g, std::span<double* const> grads) {
                  if (!grads[0]) return;
                  auto bs = basis.data();
                  for (std::size_t p = 0; p < paths; ++p) {
                    for (std::size_t i = 0; i < n; ++i) {
                      const double* w = bs.data() + i * (c + 2);
                      const double* gi = g.data() + (p * n + i) * d;
                      for (std::size_t k = 0; k < c; ++k) {
                        if (w[k + 1] == 0.0) continue;
                        double* out = grads[0] + (p * c + k) * d;
                        for (std::size_t j = 0; j < d; ++j) out[j] += w[k + 1] * gi[j];
                      }
                    }
                  }
                });
}

// Squared decoded length of every consecutive-sample segment, (rows-1) x 1.
Tensor SegmentEnergies(const Decoder& decoder, const Tensor& samples) {
  const std::size_t n = samples.rows();
  Tensor mu = decoder.Mean(samples);
  Tensor sigma = decoder.Sigma(samples);
  Tensor dmu = Sub(SliceRows(mu, 1, n), SliceRows(mu, 0, n - 1));
  Tensor dsigma = Sub(SliceRows(sigma, 1, n), SliceRows(sigma, 0, n - 1));
  return Add(SumCols(Square(dmu)), SumCols(Square(dsigma)));
}

}  // namespace

Tensor SplineBasis(std::size_t samples, std::size_t control_points) {
  if (samples < 2) throw ContractError("a geodesic needs at least 2 samples");
  const std::size_t m = control_points + 2;
  const double h = 1.0 / static_cast<double>(m - 1);
  std::vector<double> basis(samples * m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> y(m, 0.0);
    y[k] = 1.0;
    std::vector<double> moments = NaturalMoments(y, h);
    for (std::size_t i = 1; i + 1 < samples; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(samples - 1);
      basis[i * m + k] = EvaluateSpline(y, moments, h, t);
    }
  }
  basis[0] = 1.0;
  basis[(samples - 1) * m + (m - 1)] = 1.0;
  return Tensor(samples, m, std::move(basis));
}

Tensor CurveEnergy(const Decoder& decoder, const Tensor& samples) {
  if (samples.rows() < 2) throw ContractError("curve energy needs at least 2 samples");
  return Scale(Sum(SegmentEnergies(decoder, samples)), 0.5);
}

std::vector<GeodesicPath> GeodesicBatch(const Decoder& decoder, const Tensor& starts,
                                        const Tensor& ends, const GeodesicOptions& options) {
  const std::size_t d = decoder.latent_dim();
  if (starts.cols() != d || ends.cols() != d || starts.rows() != ends.rows()) {
    throw DimensionError("geodesic endpoints " + starts.ShapeString() + " and " +
                         ends.ShapeString() + " do not match latent width " + std::to_string(d));
  }
  const std::size_t paths = starts.rows(), n = options.samples, c = options.control_points;
  const Tensor basis = SplineBasis(n, c);
  const double h = 1.0 / static_cast<double>(c + 1);

  struct State {
    std::vector<double> controls, best, m, v;
    double previous = 0.0, best_energy = 0.0, initial = 0.0;
    uint64_t step = 0;
    bool active = true;
  };
  std::vector<State> state(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    auto s = starts.row(p);
    auto e = ends.row(p);
    State& st = state[p];
    st.controls.resize(c * d);
    for (std::size_t k = 0; k < c; ++k) {
      const double t = static_cast<double>(k + 1) * h;
      for (std::size_t j = 0; j < d; ++j) st.controls[k * d + j] = s[j] + t * (e[j] - s[j]);
    }
    // Equal endpoints: a constant path with zero energy, no optimization.
    if (std::equal(s.begin(), s.end(), e.begin())) {
      for (std::size_t k = 0; k < c; ++k) std::copy(s.begin(), s.end(), st.controls.begin() + k * d);
      st.active = false;
    }
    st.best = st.controls;
    st.m.assign(c * d, 0.0);
    st.v.assign(c * d, 0.0);
  }
  AdamOptions adam;
  adam.learning_rate = options.learning_rate;
  EnableGradGuard grad_on;

  for (std::size_t iter = 0;; ++iter) {
    std::vector<std::size_t> active;
    for (std::size_t p = 0; p < paths; ++p)
      if (state[p].active) active.push_back(p);
    if (active.empty()) break;

    std::vector<double> ctrl, s_rows, e_rows;
    for (std::size_t p : active) {
      ctrl.insert(ctrl.end(), state[p].controls.begin(), state[p].controls.end());
      auto s = starts.row(p);
      auto e = ends.row(p);
      s_rows.insert(s_rows.end(), s.begin(), s.end());
      e_rows.insert(e_rows.end(), e.begin(), e.end());
    }
    Tensor controls = Tensor::Variable(active.size() * c, d, std::move(ctrl));
    Tensor samples = SplineSamples(basis, controls, Tensor(active.size(), d, std::move(s_rows)),
                                   Tensor(active.size(), d, std::move(e_rows)));
    Tensor segments = SegmentEnergies(decoder, samples);
    // Zero the segments that join one path to the next.
    std::vector<double> mask(active.size() * n - 1, 1.0);
    for (std::size_t a = 0; a + 1 < active.size(); ++a) mask[a * n + n - 1] = 0.0;
    Tensor masked = Mul(segments, Tensor(mask.size(), 1, mask));
    Gradients grads = Backward(Scale(Sum(masked), 0.5));
    auto seg = masked.data();
    auto g = grads.Raw(controls);

    for (std::size_t a = 0; a < active.size(); ++a) {
      State& st = state[active[a]];
      double energy = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) energy += seg[a * n + i];
      energy *= 0.5;
      if (!std::isfinite(energy)) {
        throw GeometryError("geodesic energy became non-finite at iteration " +
                            std::to_string(iter));
      }
      if (iter == 0) {
        st.initial = st.best_energy = energy;
      } else if (energy < st.best_energy) {
        st.best_energy = energy;
        st.best = st.controls;
      }
      const bool converged =
          energy == 0.0 ||
          (iter > 0 && std::abs(st.previous - energy) <= options.tolerance * std::abs(st.previous));
      st.previous = energy;
      if (converged || st.step >= options.max_iterations) {
        st.active = false;
        continue;
      }
      ++st.step;
      std::vector<double> grad(g.begin() + a * c * d, g.begin() + (a + 1) * c * d);
      AdamUpdate(st.controls, grad, st.m, st.v, st.step, adam);
    }
  }

  std::vector<GeodesicPath> out(paths);
  NoGradGuard no_grad;
  for (std::size_t p = 0; p < paths; ++p) {
    GeodesicPath& path = out[p];
    auto s = starts.row(p);
    auto e = ends.row(p);
    path.start.assign(s.begin(), s.end());
    path.end.assign(e.begin(), e.end());
    path.control_points = Tensor(c, d, state[p].best);
    if (std::equal(s.begin(), s.end(), e.begin())) {
      std::vector<double> constant;
      for (std::size_t i = 0; i < n; ++i) constant.insert(constant.end(), s.begin(), s.end());
      path.samples = Tensor(n, d, std::move(constant));
    } else {
      path.samples = SplineSamples(basis, path.control_points, SliceRows(starts, p, p + 1),
                                   SliceRows(ends, p, p + 1));
    }
    path.energy = state[p].best_energy;
    path.initial_energy = state[p].initial;
    path.iterations = state[p].step;
  }
  return out;
}

GeodesicPath Geodesic(const Decoder& decoder, const Tensor& start, const Tensor& end,
                      const GeodesicOptions& options) {
  if (start.rows() != 1 || end.rows() != 1) {
    throw DimensionError("Geodesic takes single 1 x d endpoints");
  }
  return GeodesicBatch(decoder, start, end, options).front();
}

Tensor LinearizedSquaredDistance(const Decoder& decoder, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("distance operands " + a.ShapeString() + " and " + b.ShapeString());
  }
  Dual probe{Scale(Add(a, b), 0.5), {Sub(a, b)}};
  Dual mu = decoder.Mean(probe);
  Dual sigma = decoder.Sigma(probe);
  return Add(SumCols(Square(mu.tangents[0])), SumCols(Square(sigma.tangents[0])));
}

double GeodesicLength(const Decoder& decoder, const Tensor& samples) {
  const std::size_t n = samples.rows();
  if (n < 2) return 0.0;
  NoGradGuard no_grad;
  Tensor sq = LinearizedSquaredDistance(decoder, SliceRows(samples, 1, n),
                                        SliceRows(samples, 0, n - 1));
  double length = 0.0;
  for (double x : sq.data()) length += std::sqrt(std::max(x, 0.0));
  return length;
}

Tensor PathSquaredDistance(const Decoder& decoder, const Tensor& a, const Tensor& b,
                           const GeodesicOptions& options) {
  std::vector<GeodesicPath> paths;
  {
    NoGradGuard no_grad;
    paths = GeodesicBatch(decoder, a.Detach(), b.Detach(), options);
  }
  const std::size_t n = options.samples;
  std::vector<Tensor> out;
  out.reserve(paths.size());
  for (std::size_t r = 0; r < paths.size(); ++r) {
    std::vector<Tensor> rows{SliceRows(a, r, r + 1)};
    if (n > 2) rows.push_back(SliceRows(paths[r].samples, 1, n - 1));
    rows.push_back(SliceRows(b, r, r + 1));
    Tensor samples = ConcatRows(rows);
    Tensor seg = LinearizedSquaredDistance(decoder, SliceRows(samples, 1, n),
                                           SliceRows(samples, 0, n - 1));
    out.push_back(Square(Sum(Sqrt(seg))));
  }
  return ConcatRows(out);
}

}  // namespace mprs
