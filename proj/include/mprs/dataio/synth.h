#ifndef MPRS_DATAIO_SYNTH_H_
#define MPRS_DATAIO_SYNTH_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mprs/dataio/dataset.h"
#include "mprs/geometry/decoder.h"

namespace mprs {

// Synthetic manifolds with a known decoder:
//   plane               1 x 3 images, affine in z, z ~ U[-1, 1]^2
//   paraboloid          1 x 3 images (z, |z|^2) rescaled into [0, 1]
//   two-cluster-blobs   8 x 8 Gaussian blob images, latents in two clusters
//   ring                8 x 8 blob images with latents on the unit circle
// Labels: sign of z_1 for plane, paraboloid and ring; cluster id for blobs.
struct SynthManifold {
  LabeledDataset data;
  std::shared_ptr<const Decoder> decoder;
  Tensor latents;  // N x 2, the noiseless generating points
};

const std::vector<std::string>& SynthKinds();

// Pixels are decoder(z) plus N(0, noise^2), clamped to [0, 1]. Throws
// ContractError for an unknown kind.
SynthManifold MakeSynthManifold(const std::string& kind, std::size_t n, double noise,
                                uint64_t seed);

}  // namespace mprs

#endif  // MPRS_DATAIO_SYNTH_H_
