#ifndef MPRS_RNG_H_
#define MPRS_RNG_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace mprs {

// Counter-based generator: the n-th draw of a stream is a pure function of
// (seed, stream id, n), so the whole state is three integers and streams
// never interfere with each other.
class Rng {
 public:
  struct State {
    uint64_t seed = 0;
    uint64_t stream = 0;
    uint64_t counter = 0;
    bool operator==(const State&) const = default;
  };

  Rng() = default;
  Rng(uint64_t seed, std::string_view stream_name);
  explicit Rng(State state) : state_(state) {}

  static uint64_t StreamId(std::string_view name);

  uint64_t NextU64();
  // Uniform on [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Box-Muller; consumes exactly two draws so the state stays a counter.
  double Normal();
  // Uniform on {0, ..., n-1}. n must be positive.
  std::size_t UniformIndex(std::size_t n);

  std::vector<double> NormalVector(std::size_t n);

  template <typename T>
  void Shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = UniformIndex(i);
      std::swap(values[i - 1], values[j]);
    }
  }

  std::vector<std::size_t> Permutation(std::size_t n);

  const State& state() const { return state_; }

 private:
  State state_;
};

}  // namespace mprs

#endif  // MPRS_RNG_H_
