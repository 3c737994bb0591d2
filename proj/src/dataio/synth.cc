#include "mprs/dataio/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mprs/diffcore/tensor.h"
#include "mprs/errors.h"
#include "mprs/rng.h"

namespace mprs {
namespace {

constexpr std::size_t kBlobSide = 8;

std::shared_ptr<const Decoder> MakeDecoder(const std::string& kind) {
  if (kind == "plane") {
    Tensor w = Tensor::FromRows({{1.0, 0.0, 0.5}, {0.0, 1.0, -0.5}});
    return std::make_shared<ScaledDecoder>(
        std::make_shared<AffineDecoder>(w, Tensor(1, 3, 0.0)), 0.25, 0.5);
  }
  if (kind == "paraboloid") {
    return std::make_shared<ScaledDecoder>(std::make_shared<ParaboloidDecoder>(1.0), 0.25, 0.5);
  }
  // Blob center = 3.5 + 2 z in pixel units, so |z| <= 1.5 stays on the grid.
  return std::make_shared<BlobDecoder>(kBlobSide, 1.2, 3.5, 2.0);
}

}  // namespace

const std::vector<std::string>& SynthKinds() {
  static const std::vector<std::string> kinds{"plane", "paraboloid", "two-cluster-blobs", "ring"};
  return kinds;
}

SynthManifold MakeSynthManifold(const std::string& kind, std::size_t n, double noise,
                                uint64_t seed) {
  const auto& kinds = SynthKinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
    throw ContractError("unknown synthetic manifold kind '" + kind + "'");
  }
  if (noise < 0.0) throw ContractError("synthetic noise must be nonnegative");
  Rng rng(seed, "synth." + kind);
  std::vector<double> z(n * 2);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a, b;
    if (kind == "two-cluster-blobs") {
      labels[i] = static_cast<int>(rng.UniformIndex(2));
      a = (labels[i] == 0 ? -0.8 : 0.8) + 0.15 * rng.Normal();
      b = 0.15 * rng.Normal();
    } else if (kind == "ring") {
      const double t = 2.0 * std::numbers::pi * rng.Uniform();
      a = std::cos(t);
      b = std::sin(t);
    } else {
      a = rng.Uniform(-1.0, 1.0);
      b = rng.Uniform(-1.0, 1.0);
    }
    if (kind != "two-cluster-blobs") labels[i] = a >= 0.0 ? 1 : 0;
    z[2 * i] = a;
    z[2 * i + 1] = b;
  }
  SynthManifold out;
  out.decoder = MakeDecoder(kind);
  out.latents = Tensor(n, 2, std::move(z));
  Tensor clean = out.decoder->Mean(out.latents);
  out.data.height = kind == "plane" || kind == "paraboloid" ? 1 : kBlobSide;
  out.data.width = kind == "plane" || kind == "paraboloid" ? 3 : kBlobSide;
  out.data.labels = std::move(labels);
  out.data.pixels.reserve(clean.size());
  for (double v : clean.data()) out.data.pixels.push_back(std::clamp(v + noise * rng.Normal(), 0.0, 1.0));
  out.data.notes.push_back("synthetic " + kind);
  return out;
}

}  // namespace mprs
