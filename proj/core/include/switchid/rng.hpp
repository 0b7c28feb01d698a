#pragma once

#include "switchid/linalg.hpp"

#include <cstdint>

namespace switchid {

// Counter-based Gaussian noise.
//
// Draw k of stream s under seed is a pure function of (seed, s, k): the
// SplitMix64 finalizer is chained over the three words to give two 53-bit
// uniforms, and Box-Muller (cosine branch) turns them into one standard
// normal. Nothing depends on <random> distributions, so files are
// byte-reproducible across standard libraries.
enum class NoiseStream : std::uint64_t {
  InitialState = 1,
  Process = 2,
  Measurement = 3,
  Exploration = 4,
};

std::uint64_t splitmix64(std::uint64_t x);

// Uniform on the open interval (0, 1).
double uniform_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

double normal_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// Per-trial seed; a fixed function of (base_seed, trial).
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t trial);

class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, NoiseStream stream)
      : seed_(seed), stream_(static_cast<std::uint64_t>(stream)) {}

  double next() { return normal_at(seed_, stream_, counter_++); }

  Vector next_vector(Eigen::Index n, double scale);

  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace switchid
