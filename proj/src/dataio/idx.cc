#include "mprs/dataio/idx.h"

#include <cmath>
#include <fstream>
#include <iterator>

#include "mprs/errors.h"

namespace mprs {
namespace {

uint32_t ReadBigEndian(std::span<const uint8_t> bytes, std::size_t offset, const char* what) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(std::string(what) + ": truncated header at byte " + std::to_string(offset));
  }
  return (uint32_t{bytes[offset]} << 24) | (uint32_t{bytes[offset + 1]} << 16) |
         (uint32_t{bytes[offset + 2]} << 8) | uint32_t{bytes[offset + 3]};
}

void PutBigEndian(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void CheckMagic(uint32_t got, uint32_t want, const char* what) {
  if (got != want) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s: bad magic 0x%08x at byte 0 (expected 0x%08x)", what, got,
                  want);
    throw FormatError(buf);
  }
}

void CheckPayload(std::size_t size, std::size_t header, std::size_t payload, const char* what) {
  if (size < header + payload) {
    throw FormatError(std::string(what) + ": payload truncated at byte " + std::to_string(size) +
                      ", expected " + std::to_string(header + payload) + " bytes");
  }
  if (size > header + payload) {
    throw FormatError(std::string(what) + ": unexpected trailing data at byte " +
                      std::to_string(header + payload));
  }
}

}  // namespace

LabeledDataset ParseIdx(std::span<const uint8_t> images, std::span<const uint8_t> labels) {
  CheckMagic(ReadBigEndian(images, 0, "idx images"), kIdxImageMagic, "idx images");
  const std::size_t n = ReadBigEndian(images, 4, "idx images");
  const std::size_t h = ReadBigEndian(images, 8, "idx images");
  const std::size_t w = ReadBigEndian(images, 12, "idx images");
  CheckPayload(images.size(), 16, n * h * w, "idx images");

  CheckMagic(ReadBigEndian(labels, 0, "idx labels"), kIdxLabelMagic, "idx labels");
  const std::size_t nl = ReadBigEndian(labels, 4, "idx labels");
  if (nl != n) {
    throw FormatError("idx labels: count " + std::to_string(nl) + " at byte 4 does not match " +
                      std::to_string(n) + " images");
  }
  CheckPayload(labels.size(), 8, n, "idx labels");

  LabeledDataset ds;
  ds.height = h;
  ds.width = w;
  ds.pixels.resize(n * h * w);
  for (std::size_t i = 0; i < ds.pixels.size(); ++i) ds.pixels[i] = images[16 + i] / 255.0;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = labels[8 + i];
  return ds;
}

LabeledDataset LoadIdx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  LabeledDataset ds = ParseIdx(ReadBytes(images), ReadBytes(labels));
  ds.notes.push_back("loaded from " + images.filename().string());
  return ds;
}

std::vector<uint8_t> EncodeIdxImages(const LabeledDataset& ds) {
  ds.Validate();
  std::vector<uint8_t> out;
  out.reserve(16 + ds.pixels.size());
  PutBigEndian(out, kIdxImageMagic);
  PutBigEndian(out, static_cast<uint32_t>(ds.size()));
  PutBigEndian(out, static_cast<uint32_t>(ds.height));
  PutBigEndian(out, static_cast<uint32_t>(ds.width));
  for (double v : ds.pixels) out.push_back(static_cast<uint8_t>(std::lround(v * 255.0)));
  return out;
}

std::vector<uint8_t> EncodeIdxLabels(const LabeledDataset& ds) {
  std::vector<uint8_t> out;
  out.reserve(8 + ds.size());
  PutBigEndian(out, kIdxLabelMagic);
  PutBigEndian(out, static_cast<uint32_t>(ds.size()));
  for (int label : ds.labels) {
    if (label < 0 || label > 255) {
      throw DataError("label " + std::to_string(label) + " does not fit in an IDX byte");
    }
    out.push_back(static_cast<uint8_t>(label));
  }
  return out;
}

void SaveIdx(const LabeledDataset& ds, const std::filesystem::path& images,
             const std::filesystem::path& labels) {
  WriteBytes(images, EncodeIdxImages(ds));
  WriteBytes(labels, EncodeIdxLabels(ds));
}

std::vector<uint8_t> ReadBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void WriteBytes(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace mprs
