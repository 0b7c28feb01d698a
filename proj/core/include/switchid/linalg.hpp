#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>

namespace switchid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws ValidationError if any entry of `m` is NaN or infinite.
void require_finite(const Matrix& m, std::string_view name);

/// Throws ValidationError unless `m` is square.
void require_square(const Matrix& m, std::string_view name);

struct SingularTriple {
  Vector left;
  double value = 0.0;
  Vector right;
};

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& m);

/// Largest singular value.
double operator_norm(const Matrix& m);

/// Top singular triple (u, sigma, v) with u' M v = sigma_max.
///
/// Deterministic normalization: when the top singular value is repeated the
/// right vector is the projection of the lowest-index basis vector onto the
/// top right-singular subspace, which makes the first nonzero entry of v
/// positive. The zero matrix yields (e1, 0, e1).
SingularTriple top_singular_triple(const Matrix& m);

/// Solves A' P A - P + Q = 0 for symmetric PSD Q. Requires rho(A) < 1.
Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& q);

/// sup over the unit circle of sigma_max(C (zI - A)^{-1} B).
///
/// 4096-point uniform grid on [0, pi] followed by golden-section refinement
/// around the largest grid maxima. Relative accuracy ~1e-3 or better.
double hinf_norm(const Matrix& c, const Matrix& a, const Matrix& b);

/// sigma_max(C (e^{iw} I - A)^{-1} B) at a single frequency.
double frequency_gain(const Matrix& c, const Matrix& a, const Matrix& b, double omega);

/// sup_k ||A^k||. Requires rho(A) < 1.
double transient_bound(const Matrix& a);

struct ObservabilityMargin {
  // min over (realified, normalized) eigenvectors q of ||C q|| / ||q||
  double eigen = 0.0;
  // sigma_min([C; CA; ...; CA^{n-1}])
  double stacked = 0.0;
};

ObservabilityMargin observability_margin(const Matrix& c, const Matrix& a);

/// Upper block-triangular Toeplitz matrix with block (i, j) = C A^{j-i}, j >= i.
Matrix observability_toeplitz(const Matrix& c, const Matrix& a, std::size_t len);

/// A^k by repeated squaring.
Matrix matrix_power(const Matrix& a, std::size_t k);

}  // namespace switchid
