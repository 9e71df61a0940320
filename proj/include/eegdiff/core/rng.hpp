#pragma once

#include <cstdint>

#include <torch/torch.h>

namespace eegdiff {

// Mixes two 64-bit words (splitmix64 finalizer). Used to derive independent
// stream seeds from (global_seed, index) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// Seeded random source. Every sampling operation in the library draws from an
// explicit Rng so results are pure functions of (inputs, seed).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;
  Rng(Rng&&) noexcept = default;
  Rng& operator=(Rng&&) noexcept = default;

  std::uint64_t seed() const { return seed_; }

  // Standard-normal tensor of the given shape.
  torch::Tensor normal(torch::IntArrayRef shape, torch::ScalarType dtype = torch::kFloat);

  // Uniform double in [0, 1).
  double uniform();

  // Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  at::Generator& generator() { return gen_; }

  // Child stream for item `index`, independent of how many siblings exist.
  Rng fork(std::uint64_t index) const { return Rng(mix_seed(seed_, index)); }

 private:
  std::uint64_t seed_;
  at::Generator gen_;
};

}  // namespace eegdiff
