#include "switchid/rng.hpp"

#include <cmath>
#include <numbers>

namespace switchid {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31U);
}

namespace {

std::uint64_t hash3(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

}  // namespace

double uniform_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t bits = hash3(seed, stream, index) >> 11U;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double normal_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const double u1 = uniform_at(seed, stream, 2 * index);
  const double u2 = uniform_at(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t trial) {
  return splitmix64(base_seed ^ splitmix64(trial + 0x5851F42D4C957F2DULL));
}

Vector GaussianStream::next_vector(Eigen::Index n, double scale) {
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = scale * next();
  return v;
}

}  // namespace switchid
