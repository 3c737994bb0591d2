#ifndef MPRS_DATAIO_DATASET_H_
#define MPRS_DATAIO_DATASET_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mprs/diffcore/tensor.h"

namespace mprs {

// N grayscale images of height x width pixels in [0, 1] with integer labels.
struct LabeledDataset {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // N * height * width, row-major per image
  std::vector<int> labels;
  std::string split = "train";
  std::vector<std::string> notes;

  std::size_t size() const { return labels.size(); }
  std::size_t pixels_per_image() const { return height * width; }
  std::span<const double> image(std::size_t i) const;
  // All images as an N x (height * width) tensor.
  Tensor Images() const;
  Tensor Images(std::span<const std::size_t> indices) const;
  LabeledDataset Subset(std::span<const std::size_t> indices) const;
  std::vector<int> Classes() const;
  std::size_t CountLabel(int label) const;
  // Throws DataError when sizes disagree or a pixel leaves [0, 1].
  void Validate() const;
};

LabeledDataset ConcatDatasets(const LabeledDataset& a, const LabeledDataset& b);

}  // namespace mprs

#endif  // MPRS_DATAIO_DATASET_H_
