#ifndef MPRS_DATAIO_CHECKPOINT_H_
#define MPRS_DATAIO_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mprs/netkit/mlp.h"
#include "mprs/rng.h"

namespace mprs {

inline constexpr uint32_t kCheckpointVersion = 1;

// Container layout, all integers and floats little-endian:
//   "MPRS" | u32 version | u64 config length | config bytes
//   | u32 blob count | per blob: u32 name length, name, u64 rows, u64 cols,
//     rows * cols f64
//   | u32 rng count | per stream: u32 name length, name, u64 seed, u64 stream,
//     u64 counter
struct Checkpoint {
  struct Blob {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
  };

  uint32_t version = kCheckpointVersion;
  std::string config;
  std::vector<Blob> blobs;
  std::vector<std::pair<std::string, Rng::State>> rngs;

  const Blob* Find(const std::string& name) const;
  // Throws FormatError when absent.
  const Blob& Get(const std::string& name) const;
  void Put(std::string name, std::size_t rows, std::size_t cols, std::vector<double> values);
  void PutParams(const ParamList& params);
  // Copies blob values into the parameter leaves. Throws FormatError on a
  // missing name or a shape mismatch.
  void RestoreParams(const ParamList& params) const;
  void PutRng(std::string name, const Rng::State& state);
  Rng::State GetRng(const std::string& name) const;
};

std::vector<uint8_t> SerializeCheckpoint(const Checkpoint& checkpoint);
// Throws FormatError (with byte offset) on bad magic, unknown version,
// truncation or trailing bytes.
Checkpoint DeserializeCheckpoint(std::span<const uint8_t> bytes);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace mprs

#endif  // MPRS_DATAIO_CHECKPOINT_H_
