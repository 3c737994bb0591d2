#ifndef MPRS_BASELINES_BASELINES_H_
#define MPRS_BASELINES_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mprs/dataio/dataset.h"

namespace mprs {

struct BaselineConfig {
  std::size_t block = 3;
  double radius = 1.5;
  std::size_t k = 10;
  std::size_t clusters = 1000;
  uint64_t seed = 0;
  // Throws ConfigError when a field is out of range.
  void Validate() const;
};

// Each block x block tile replaced by its mean; edge tiles are averaged over
// their actual extent. `image` is height x width row-major.
std::vector<double> Pixelate(std::span<const double> image, std::size_t height,
                             std::size_t width, std::size_t block);

// Normalized 1-D Gaussian taps with std `radius`, half-width ceil(3 radius).
std::vector<double> GaussianKernel(double radius);

// Separable Gaussian blur with half-sample symmetric borders
// (d c b a | a b c d | d c b a). Preserves the image sum.
std::vector<double> GaussianBlur(std::span<const double> image, std::size_t height,
                                 std::size_t width, double radius);

LabeledDataset PixelateDataset(const LabeledDataset& ds, std::size_t block);
LabeledDataset BlurDataset(const LabeledDataset& ds, double radius);

struct KAnonymizeResult {
  LabeledDataset data;
  // Original index of the representative each output sample copies.
  std::vector<std::size_t> source;
  std::size_t suppressed = 0;        // samples dropped with their small clusters
  std::size_t clusters_kept = 0;
  std::size_t clusters_suppressed = 0;
};

// k-means on pixels; in clusters of size >= k every member becomes the
// member nearest the center (image and label). Smaller clusters are dropped.
// Output keeps the original order of the retained samples. Throws
// ContractError when the dataset has fewer samples than clusters.
KAnonymizeResult KAnonymize(const LabeledDataset& ds, std::size_t k, std::size_t clusters,
                            uint64_t seed);

// Method selector for the CLI: "pixelate", "blur" or "kanon".
LabeledDataset ApplyBaseline(const std::string& method, const LabeledDataset& ds,
                             const BaselineConfig& config, std::vector<std::string>* log = nullptr);

}  // namespace mprs

#endif  // MPRS_BASELINES_BASELINES_H_
