#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace somlp {

// Stream labels keep independent random sequences for the different
// consumers that share one master seed.
enum class RngStream : std::uint64_t {
  Init = 1,
  Shuffle = 2,
  PermutationGen = 3,
  SubsetSampling = 4,
  EvalSubset = 5,
};

// xoshiro256** seeded through splitmix64. Fixed algorithm so that the same
// (seed, stream) pair gives bit-identical sequences on every platform.
class Prng {
 public:
  Prng(std::uint64_t seed, RngStream stream, std::uint64_t substream = 0) {
    // splitmix64 over (seed, stream, substream) to fill the state
    std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(stream)) ^
                      (0xBF58476D1CE4E5B9ull * (substream + 1));
    for (auto& word : state_) word = splitmix64(x);
    if (state_[0] == 0 && state_[1] == 0 && state_[2] == 0 && state_[3] == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  float next_float() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

  // uniform in [lo,hi)
  float next_float(float lo, float hi) { return lo + (hi - lo) * next_float(); }

  // unbiased integer in [0,n) via rejection
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t threshold = (0ull - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  const std::uint64_t* state_words() const { return state_; }
  void set_state_words(const std::uint64_t w[4]) {
    for (int i = 0; i < 4; ++i) state_[i] = w[i];
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

// Fisher-Yates permutation of {0..n-1}.
inline std::vector<std::uint32_t> shuffled_indices(Prng& prng, std::size_t n) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(prng.next_below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace somlp
