#ifndef FADER_RNG_H_
#define FADER_RNG_H_

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace fader {

// SplitMix64 step; used to expand seeds and to derive sub-seeds.
std::uint64_t SplitMix64(std::uint64_t* state);

// Derives an independent seed for a named sub-stream, e.g. one per entity.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view stream);

// xoshiro256** seeded through SplitMix64. All sampling in the toolkit goes
// through this generator and the helpers below so that results do not depend
// on the standard library's distribution implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  std::uint64_t Next();
  std::uint64_t operator()() { return Next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t Below(std::uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform();

  // Uniform double in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Standard normal deviate (Box-Muller, no caching).
  double Normal();

  // Poisson deviate by sequential inversion; fine for the small means used
  // by the synthetic generator.
  std::uint32_t Poisson(double mean);

  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = Below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // k distinct indices from [0, n) in sample order (partial Fisher-Yates).
  // Returns all n indices, shuffled, when k >= n.
  std::vector<std::size_t> SampleIndices(std::size_t n, std::size_t k);

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace fader

#endif  // FADER_RNG_H_
