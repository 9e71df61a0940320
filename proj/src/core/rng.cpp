#include "eegdiff/core/rng.hpp"

#include <ATen/CPUGeneratorImpl.h>


namespace eegdiff {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), gen_(at::make_generator<at::CPUGeneratorImpl>(seed)) {}

torch::Tensor Rng::normal(torch::IntArrayRef shape, torch::ScalarType dtype) {
  return torch::randn(shape, gen_, torch::TensorOptions().dtype(dtype));
}

double Rng::uniform() {
  return torch::rand({1}, gen_, torch::TensorOptions().dtype(torch::kDouble)).item<double>();
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  return torch::randint(lo, hi + 1, {1}, gen_, torch::TensorOptions().dtype(torch::kLong))
      .item<std::int64_t>();
}

}  // namespace eegdiff
