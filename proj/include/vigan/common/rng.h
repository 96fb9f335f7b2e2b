#ifndef VIGAN_COMMON_RNG_H_
#define VIGAN_COMMON_RNG_H_

#include <cstdint>
#include <random>

namespace vigan {

// Mixes a 64-bit value; used to derive independent seeds for sub-streams.
std::uint64_t SplitMix64(std::uint64_t x);

// Derives the seed of stream `index` under `seed`.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t index);

// Pseudo-random source with platform-independent output. The standard
// distributions are implementation-defined, so uniform and normal variates
// are computed here directly from the raw engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t Index(std::uint64_t n);

  double Normal();
  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

  // Derived child generator; does not advance this one.
  Rng Fork(std::uint64_t index) const;

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vigan

#endif  // VIGAN_COMMON_RNG_H_
