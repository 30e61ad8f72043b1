#pragma once

#include <cstdint>
#include <vector>

namespace trimfit {

// Counter-based splittable generator. A stream is identified by a 64-bit key;
// draws hash (key, counter) and substreams derive a child key from
// (key, index), so substream(root(seed), i).substream(j)... is a pure
// function of the seed and the index path, independent of draw order
// elsewhere. Replications can therefore run on any thread layout and still
// reproduce bit-identical values.
class RngStream {
 public:
  static RngStream root(std::uint64_t seed);

  // Child stream; does not consume draws from this stream.
  RngStream substream(std::uint64_t index) const;

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);

  // Box-Muller; consumes exactly two uniforms per call. sd == 0 returns mean.
  double normal(double mean, double sd);

  // k distinct indices from [0, n), by partial Fisher-Yates. Order is the
  // shuffle order (deterministic), not sorted.
  std::vector<int> sample_without_replacement(int n, int k);

  std::uint64_t key() const { return key_; }

 private:
  RngStream(std::uint64_t key, std::uint64_t counter)
      : key_(key), counter_(counter) {}

  std::uint64_t next_u64();

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace trimfit
