#include "mprs/dataio/dataset.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "mprs/errors.h"

namespace mprs {

std::span<const double> LabeledDataset::image(std::size_t i) const {
  if (i >= size()) throw DataError("image index " + std::to_string(i) + " out of range");
  return std::span<const double>(pixels).subspan(i * pixels_per_image(), pixels_per_image());
}

Tensor LabeledDataset::Images() const { return Tensor(size(), pixels_per_image(), pixels); }

Tensor LabeledDataset::Images(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * pixels_per_image());
  for (std::size_t i : indices) {
    auto img = image(i);
    out.insert(out.end(), img.begin(), img.end());
  }
  return Tensor(indices.size(), pixels_per_image(), std::move(out));
}

LabeledDataset LabeledDataset::Subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.height = height;
  out.width = width;
  out.split = split;
  out.notes = notes;
  out.pixels.reserve(indices.size() * pixels_per_image());
  for (std::size_t i : indices) {
    auto img = image(i);
    out.pixels.insert(out.pixels.end(), img.begin(), img.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

std::vector<int> LabeledDataset::Classes() const {
  std::set<int> s(labels.begin(), labels.end());
  return std::vector<int>(s.begin(), s.end());
}

std::size_t LabeledDataset::CountLabel(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void LabeledDataset::Validate() const {
  if (pixels.size() != labels.size() * pixels_per_image()) {
    throw DataError("dataset holds " + std::to_string(pixels.size()) + " pixels for " +
                    std::to_string(labels.size()) + " images of " + std::to_string(height) + "x" +
                    std::to_string(width));
  }
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (!(pixels[i] >= 0.0 && pixels[i] <= 1.0)) {
      throw DataError("pixel " + std::to_string(i % pixels_per_image()) + " of image " +
                      std::to_string(i / pixels_per_image()) + " is outside [0, 1]");
    }
  }
}

LabeledDataset ConcatDatasets(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.height != b.height || a.width != b.width) {
    throw DataError("cannot concatenate datasets with different image shapes");
  }
  LabeledDataset out = a;
  out.pixels.insert(out.pixels.end(), b.pixels.begin(), b.pixels.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

}  // namespace mprs
