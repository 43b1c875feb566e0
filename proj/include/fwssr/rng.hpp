// rng.hpp — deterministic seeded random streams.
//
// All sampling is built directly on the mt19937_64 output stream. The
// std::*_distribution adapters are implementation-defined, so using them
// would break bit-reproducibility of generated datasets across standard
// libraries; Box-Muller and rejection sampling below are fully specified.

#ifndef FWSSR_RNG_HPP
#define FWSSR_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fwssr {

// Derives an independent stream seed from (seed, tag). splitmix64 over the
// seed xor'd with an FNV-1a hash of the tag.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag);

class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (pair-cached).
  double normal();

  // Uniform integer in [0, n). Unbiased (rejection).
  int uniform_int(int n);

  // In-place Fisher-Yates shuffle.
  void shuffle(std::vector<int>& v);

  // Independent child stream for a named purpose.
  SplitRng child(std::string_view tag) const {
    return SplitRng(mix_seed(seed_, tag));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Random permutation of {0, ..., n-1}.
std::vector<int> random_permutation(int n, SplitRng& rng);

}  // namespace fwssr

#endif  // FWSSR_RNG_HPP
