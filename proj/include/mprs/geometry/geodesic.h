#ifndef MPRS_GEOMETRY_GEODESIC_H_
#define MPRS_GEOMETRY_GEODESIC_H_

#include <cstddef>
#include <functional>
#include <vector>

#include "mprs/diffcore/tensor.h"
#include "mprs/geometry/decoder.h"

namespace mprs {

struct GeodesicOptions {
  std::size_t samples = 20;
  std::size_t control_points = 4;
  double learning_rate = 1e-2;
  std::size_t max_iterations = 200;
  // Stop once |E_prev - E| <= tolerance * E_prev.
  double tolerance = 1e-6;
};

struct GeodesicPath {
  std::vector<double> start;
  std::vector<double> end;
  Tensor control_points;  // C x d
  Tensor samples;         // n x d; first row is start, last row is end
  double energy = 0.0;
  double initial_energy = 0.0;
  std::size_t iterations = 0;
  // Per-sample curvature estimates, filled in by the perturbation step.
  std::vector<double> curvature;
};

// n x (C + 2) matrix mapping the knot values (start, C controls, end) of a
// natural cubic spline on uniform knots over [0, 1] to its values at n
// uniform parameters. Rows 0 and n - 1 are exact unit vectors.
Tensor SplineBasis(std::size_t samples, std::size_t control_points);

// 1/2 sum_i |mu(z_{i+1}) - mu(z_i)|^2 + |sigma(z_{i+1}) - sigma(z_i)|^2, taped.
Tensor CurveEnergy(const Decoder& decoder, const Tensor& samples);

// Spline with interior control points initialized on the straight segment
// and optimized by Adam on the discretized energy. Returns the best iterate,
// so energy never exceeds the straight-line energy. Throws GeometryError if
// the energy becomes non-finite.
GeodesicPath Geodesic(const Decoder& decoder, const Tensor& start, const Tensor& end,
                      const GeodesicOptions& options = {});

// Independent geodesics between matching rows of starts and ends (P x d),
// optimized together; each path stops on its own criterion. Results equal
// separate Geodesic calls bit for bit.
std::vector<GeodesicPath> GeodesicBatch(const Decoder& decoder, const Tensor& starts,
                                        const Tensor& ends, const GeodesicOptions& options = {});

// sum_i sqrt(dz_i^T G(mid_i) dz_i) over consecutive samples.
double GeodesicLength(const Decoder& decoder, const Tensor& samples);

// Squared manifold distance between matching rows of a and b (B x d), taped.
using SquaredDistanceFn = std::function<Tensor(const Tensor& a, const Tensor& b)>;

// (a - b)^T G((a + b) / 2) (a - b), evaluated with one forward-mode pass.
Tensor LinearizedSquaredDistance(const Decoder& decoder, const Tensor& a, const Tensor& b);

// Squared length of the optimized geodesic. The interior of the path is
// found without a tape; the length along it is taped.
Tensor PathSquaredDistance(const Decoder& decoder, const Tensor& a, const Tensor& b,
                           const GeodesicOptions& options = {});

}  // namespace mprs

#endif  // MPRS_GEOMETRY_GEODESIC_H_
