#include "mprs/dataio/checkpoint.h"

#include <bit>
#include <cstring>

#include "mprs/dataio/idx.h"
#include "mprs/errors.h"

namespace mprs {
namespace {

constexpr char kMagic[4] = {'M', 'P', 'R', 'S'};

class Writer {
 public:
  void U32(uint32_t v) { Le(v, 4); }
  void U64(uint64_t v) { Le(v, 8); }
  void F64(double v) { Le(std::bit_cast<uint64_t>(v), 8); }
  void Str32(const std::string& s) {
    U32(static_cast<uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  std::vector<uint8_t> bytes;

 private:
  void Le(uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}
  uint32_t U32(const char* what) { return static_cast<uint32_t>(Le(4, what)); }
  uint64_t U64(const char* what) { return Le(8, what); }
  double F64(const char* what) { return std::bit_cast<double>(Le(8, what)); }
  std::string Str(std::size_t n, const char* what) {
    Need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void Need(std::size_t n, const char* what) const {
    if (n > bytes_.size() - pos_) {
      throw FormatError(std::string("checkpoint truncated reading ") + what + " at byte " +
                        std::to_string(pos_));
    }
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  uint64_t Le(int n, const char* what) {
    Need(static_cast<std::size_t>(n), what);
    uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Checkpoint::Blob* Checkpoint::Find(const std::string& name) const {
  for (const auto& b : blobs)
    if (b.name == name) return &b;
  return nullptr;
}

const Checkpoint::Blob& Checkpoint::Get(const std::string& name) const {
  const Blob* b = Find(name);
  if (!b) throw FormatError("checkpoint has no entry '" + name + "'");
  return *b;
}

void Checkpoint::Put(std::string name, std::size_t rows, std::size_t cols,
                     std::vector<double> values) {
  if (values.size() != rows * cols) throw DimensionError("checkpoint blob '" + name + "' size mismatch");
  for (auto& b : blobs) {
    if (b.name == name) {
      b = Blob{std::move(name), rows, cols, std::move(values)};
      return;
    }
  }
  blobs.push_back(Blob{std::move(name), rows, cols, std::move(values)});
}

void Checkpoint::PutParams(const ParamList& params) {
  for (const auto& p : params) Put(p.name, p.value.rows(), p.value.cols(), p.value.ToVector());
}

void Checkpoint::RestoreParams(const ParamList& params) const {
  for (const auto& p : params) {
    const Blob& b = Get(p.name);
    if (b.rows != p.value.rows() || b.cols != p.value.cols()) {
      throw FormatError("checkpoint entry '" + p.name + "' is " + std::to_string(b.rows) + " x " +
                        std::to_string(b.cols) + ", model expects " + p.value.ShapeString());
    }
    Tensor leaf = p.value;
    std::copy(b.values.begin(), b.values.end(), leaf.MutableLeafData().begin());
  }
}

void Checkpoint::PutRng(std::string name, const Rng::State& state) {
  for (auto& [n, s] : rngs) {
    if (n == name) {
      s = state;
      return;
    }
  }
  rngs.emplace_back(std::move(name), state);
}

Rng::State Checkpoint::GetRng(const std::string& name) const {
  for (const auto& [n, s] : rngs)
    if (n == name) return s;
  throw FormatError("checkpoint has no rng stream '" + name + "'");
}

std::vector<uint8_t> SerializeCheckpoint(const Checkpoint& c) {
  Writer w;
  w.bytes.insert(w.bytes.end(), kMagic, kMagic + 4);
  w.U32(c.version);
  w.U64(c.config.size());
  w.bytes.insert(w.bytes.end(), c.config.begin(), c.config.end());
  w.U32(static_cast<uint32_t>(c.blobs.size()));
  for (const auto& b : c.blobs) {
    w.Str32(b.name);
    w.U64(b.rows);
    w.U64(b.cols);
    for (double v : b.values) w.F64(v);
  }
  w.U32(static_cast<uint32_t>(c.rngs.size()));
  for (const auto& [name, s] : c.rngs) {
    w.Str32(name);
    w.U64(s.seed);
    w.U64(s.stream);
    w.U64(s.counter);
  }
  return std::move(w.bytes);
}

Checkpoint DeserializeCheckpoint(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  if (r.Str(4, "magic") != std::string(kMagic, 4)) throw FormatError("checkpoint: bad magic at byte 0");
  Checkpoint c;
  c.version = r.U32("version");
  if (c.version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(c.version) +
                      " at byte 4 (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const uint64_t config_len = r.U64("config length");
  c.config = r.Str(config_len, "config");
  const uint32_t count = r.U32("blob count");
  for (uint32_t i = 0; i < count; ++i) {
    Checkpoint::Blob b;
    b.name = r.Str(r.U32("blob name length"), "blob name");
    b.rows = r.U64("blob rows");
    b.cols = r.U64("blob cols");
    const std::size_t at = r.pos();
    if (b.cols != 0 && b.rows > r.remaining() / 8 / b.cols) {
      throw FormatError("checkpoint: blob '" + b.name + "' of " + std::to_string(b.rows) + " x " +
                        std::to_string(b.cols) + " overruns the file at byte " + std::to_string(at));
    }
    b.values.resize(b.rows * b.cols);
    for (double& v : b.values) v = r.F64("blob values");
    c.blobs.push_back(std::move(b));
  }
  const uint32_t rng_count = r.U32("rng count");
  for (uint32_t i = 0; i < rng_count; ++i) {
    std::string name = r.Str(r.U32("rng name length"), "rng name");
    Rng::State s;
    s.seed = r.U64("rng seed");
    s.stream = r.U64("rng stream");
    s.counter = r.U64("rng counter");
    c.rngs.emplace_back(std::move(name), s);
  }
  if (r.remaining() != 0) {
    throw FormatError("checkpoint: trailing data at byte " + std::to_string(r.pos()));
  }
  return c;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  WriteBytes(path, SerializeCheckpoint(checkpoint));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  return DeserializeCheckpoint(ReadBytes(path));
}

}  // namespace mprs
