#ifndef MPRS_DATAIO_IDX_H_
#define MPRS_DATAIO_IDX_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mprs/dataio/dataset.h"

namespace mprs {

inline constexpr uint32_t kIdxImageMagic = 0x00000803;
inline constexpr uint32_t kIdxLabelMagic = 0x00000801;

// Parses in-memory IDX containers. Pixels are scaled by 1/255. Throws
// FormatError with the offending byte offset on bad magic, truncated or
// oversized payloads, and count mismatches.
LabeledDataset ParseIdx(std::span<const uint8_t> images, std::span<const uint8_t> labels);
LabeledDataset LoadIdx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Pixels are written as round(255 * v); labels must fit in a byte.
std::vector<uint8_t> EncodeIdxImages(const LabeledDataset& ds);
std::vector<uint8_t> EncodeIdxLabels(const LabeledDataset& ds);
void SaveIdx(const LabeledDataset& ds, const std::filesystem::path& images,
             const std::filesystem::path& labels);

std::vector<uint8_t> ReadBytes(const std::filesystem::path& path);
void WriteBytes(const std::filesystem::path& path, std::span<const uint8_t> bytes);

}  // namespace mprs

#endif  // MPRS_DATAIO_IDX_H_
