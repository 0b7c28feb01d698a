#pragma once

#include "switchid/linalg.hpp"
#include "switchid/state_space.hpp"

#include <random>

namespace switchid::testing {

inline Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

// Random A rescaled to the given spectral radius.
inline Matrix random_with_radius(std::mt19937_64& rng, Eigen::Index n, double rho) {
  Matrix a = gaussian_matrix(rng, n, n);
  const double r = spectral_radius(a);
  return r > 0.0 ? Matrix(a * (rho / r)) : a;
}

inline StateSpace random_stable(std::mt19937_64& rng, Eigen::Index dx, Eigen::Index du,
                                Eigen::Index dy, double max_rho) {
  std::uniform_real_distribution<double> u(0.05, max_rho);
  return StateSpace{random_with_radius(rng, dx, u(rng)), gaussian_matrix(rng, dx, du),
                    gaussian_matrix(rng, dy, dx)};
}

// sum_k (A')^k Q A^k, truncated once the terms are negligible.
inline Matrix lyapunov_series(const Matrix& a, const Matrix& q) {
  Matrix p = q;
  Matrix term = q;
  for (int k = 0; k < 100000; ++k) {
    term = a.transpose() * term * a;
    p += term;
    if (term.norm() < 1e-16 * p.norm()) break;
  }
  return p;
}

// Dense uniform grid over [0, pi] (inclusive).
inline double hinf_grid(const Matrix& c, const Matrix& a, const Matrix& b, std::size_t points) {
  double best = 0.0;
  const double step = 3.14159265358979323846 / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) {
    best = std::max(best, frequency_gain(c, a, b, step * static_cast<double>(k)));
  }
  return best;
}

}  // namespace switchid::testing
