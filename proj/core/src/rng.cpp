#include "trimfit/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trimfit {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
// Domain separators so that draw #i of a stream and child key #i can never
// collide even for equal indices.
constexpr std::uint64_t kDrawTag = 0xd1b54a32d192ed03ULL;
constexpr std::uint64_t kSplitTag = 0x8cb92ba72f3d8dd7ULL;

// splitmix64 finalizer; full avalanche on 64 bits.
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

std::uint64_t hash2(std::uint64_t key, std::uint64_t i) {
  return mix64(key + kGolden * (i + 1));
}

}  // namespace

RngStream RngStream::root(std::uint64_t seed) {
  return RngStream(mix64(seed + kGolden), 0);
}

RngStream RngStream::substream(std::uint64_t index) const {
  return RngStream(hash2(key_ ^ kSplitTag, index), 0);
}

std::uint64_t RngStream::next_u64() {
  return hash2(key_ ^ kDrawTag, counter_++);
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double RngStream::normal(double mean, double sd) {
  // u1 shifted into (0, 1] so log stays finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = uniform01();
  double z = std::sqrt(-2.0 * std::log(u1)) *
             std::cos(2.0 * std::numbers::pi * u2);
  return mean + sd * z;
}

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("sample: k outside [0, n]");
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  std::vector<int> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    // uniform index in [i, n)
    int j = i + static_cast<int>(uniform01() * static_cast<double>(n - i));
    if (j >= n) j = n - 1;  // uniform01() < 1 makes this unreachable in exact math
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace trimfit
