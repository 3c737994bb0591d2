#include "mprs/rng.h"

#include <cmath>
#include <numbers>
#include <numeric>

#include "mprs/errors.h"

namespace mprs {
namespace {

uint64_t Mix(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

Rng::Rng(uint64_t seed, std::string_view stream_name) {
  state_.seed = seed;
  state_.stream = StreamId(stream_name);
  state_.counter = 0;
}

uint64_t Rng::StreamId(std::string_view name) {
  // FNV-1a, 64 bit.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t Rng::NextU64() {
  uint64_t key = Mix(state_.seed + 0x9e3779b97f4a7c15ULL) ^ Mix(state_.stream);
  uint64_t x = Mix(key + 0x9e3779b97f4a7c15ULL * (state_.counter + 1));
  ++state_.counter;
  return Mix(x ^ key);
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double Rng::Normal() {
  double u1 = Uniform();
  double u2 = Uniform();
  // 1 - u1 lies in (0, 1], keeping the log finite.
  double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::UniformIndex(std::size_t n) {
  if (n == 0) throw ContractError("Rng::UniformIndex: n must be positive");
  // Lemire's multiply-shift; bias is below 2^-64 * n, irrelevant here.
  unsigned __int128 product =
      static_cast<unsigned __int128>(NextU64()) * static_cast<unsigned __int128>(n);
  return static_cast<std::size_t>(product >> 64);
}

std::vector<double> Rng::NormalVector(std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = Normal();
  return out;
}

std::vector<std::size_t> Rng::Permutation(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Shuffle(order);
  return order;
}

}  // namespace mprs
