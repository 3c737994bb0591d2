#ifndef MPRS_DATAIO_MANIFEST_H_
#define MPRS_DATAIO_MANIFEST_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mprs/dataio/dataset.h"

namespace mprs {

// Per-sample perturbation metadata. One JSON object per line, see
// docs/formats.md.
struct ManifestRecord {
  std::size_t index = 0;
  int label = 0;
  std::size_t endpoint = 0;
  std::size_t i_max = 0;
  std::size_t i_star = 0;
  std::vector<double> curvature;  // K_hat along the path
  std::vector<double> original_latent;
  std::vector<double> perturbed_latent;

  bool operator==(const ManifestRecord&) const = default;
};

std::string ManifestLine(const ManifestRecord& record);
ManifestRecord ParseManifestLine(const std::string& line);

void WriteManifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);
// Throws FormatError naming the line number on malformed input.
std::vector<ManifestRecord> ReadManifest(const std::filesystem::path& path);

// A published directory holds images.idx, labels.idx and, when non-empty,
// manifest.jsonl.
struct PublishedFiles {
  std::filesystem::path images;
  std::filesystem::path labels;
  std::filesystem::path manifest;
};

PublishedFiles PublishedLayout(const std::filesystem::path& dir);
void WritePublished(const std::filesystem::path& dir, const LabeledDataset& data,
                    const std::vector<ManifestRecord>& manifest);
LabeledDataset ReadPublishedImages(const std::filesystem::path& dir);

}  // namespace mprs

#endif  // MPRS_DATAIO_MANIFEST_H_
