#include "switchid/linalg.hpp"

#include "switchid/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace switchid {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;

constexpr std::size_t kHinfGridPoints = 4096;
constexpr int kHinfRefineCandidates = 3;
constexpr int kGoldenIterations = 80;

void require_stable(const Matrix& a, std::string_view what) {
  const double rho = spectral_radius(a);
  if (!(rho < 1.0)) {
    throw UnstableError(std::string(what) + ": spectral radius " + std::to_string(rho) +
                        " is not below 1");
  }
}

double golden_section_max(const Matrix& c, const Matrix& a, const Matrix& b, double lo,
                          double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = frequency_gain(c, a, b, x1);
  double f2 = frequency_gain(c, a, b, x2);
  for (int it = 0; it < kGoldenIterations; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = frequency_gain(c, a, b, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = frequency_gain(c, a, b, x1);
    }
  }
  return std::max(f1, f2);
}

}  // namespace

void require_finite(const Matrix& m, std::string_view name) {
  if (!m.allFinite()) {
    throw ValidationError(std::string(name) + " contains non-finite entries");
  }
}

void require_square(const Matrix& m, std::string_view name) {
  if (m.rows() != m.cols()) {
    throw ValidationError(std::string(name) + " must be square, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

double spectral_radius(const Matrix& m) {
  require_square(m, "spectral_radius input");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue solver did not converge");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

SingularTriple top_singular_triple(const Matrix& m) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  SingularTriple out;
  out.left = Vector::Unit(rows, 0);
  out.right = Vector::Unit(cols, 0);
  if (m.size() == 0) return out;

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double sigma = sv(0);
  if (sigma == 0.0) return out;

  Eigen::Index tied = 1;
  while (tied < sv.size() && sv(tied) >= sigma * (1.0 - 1e-10)) ++tied;
  const Matrix basis = svd.matrixV().leftCols(tied);

  Vector v = svd.matrixV().col(0);
  for (Eigen::Index k = 0; k < cols; ++k) {
    Vector p = basis * basis.row(k).transpose();
    const double norm = p.norm();
    if (norm > 1e-8) {
      v = p / norm;
      break;
    }
  }
  const Vector mv = m * v;
  out.value = mv.norm();
  out.left = mv / out.value;
  out.right = v;
  return out;
}

Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& q) {
  require_square(a, "A");
  require_square(q, "Q");
  require_finite(a, "A");
  require_finite(q, "Q");
  if (a.rows() != q.rows()) throw ValidationError("A and Q dimensions differ");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, q.cwiseAbs().maxCoeff())) {
    throw ValidationError("Q must be symmetric");
  }
  require_stable(a, "solve_discrete_lyapunov");

  // (I - A' kron A') vec(P) = vec(Q), column-major vec.
  const Eigen::Index n = a.rows();
  const Eigen::Index n2 = n * n;
  const Matrix at = a.transpose();
  Matrix lhs = Matrix::Identity(n2, n2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      lhs.block(i * n, j * n, n, n) -= at(i, j) * at;
    }
  }
  const Vector rhs = Eigen::Map<const Vector>(q.data(), n2);
  const Vector sol = lhs.partialPivLu().solve(rhs);
  Matrix p = Eigen::Map<const Matrix>(sol.data(), n, n);
  return 0.5 * (p + p.transpose());
}

double frequency_gain(const Matrix& c, const Matrix& a, const Matrix& b, double omega) {
  const Eigen::Index n = a.rows();
  const std::complex<double> z = std::polar(1.0, omega);
  ComplexMatrix resolvent = -a.cast<std::complex<double>>();
  resolvent.diagonal().array() += z;
  const ComplexMatrix x = resolvent.partialPivLu().solve(b.cast<std::complex<double>>());
  const ComplexMatrix h = c.cast<std::complex<double>>() * x;
  if (h.size() == 0 || n == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(h);
  return svd.singularValues()(0);
}

double hinf_norm(const Matrix& c, const Matrix& a, const Matrix& b) {
  require_square(a, "A");
  if (c.cols() != a.rows() || b.rows() != a.rows()) {
    throw ValidationError("hinf_norm: non-conformant (C, A, B)");
  }
  require_stable(a, "hinf_norm");

  const double step = std::numbers::pi / static_cast<double>(kHinfGridPoints - 1);
  std::vector<double> gains(kHinfGridPoints);
  for (std::size_t k = 0; k < kHinfGridPoints; ++k) {
    gains[k] = frequency_gain(c, a, b, step * static_cast<double>(k));
  }

  std::vector<std::size_t> peaks;
  for (std::size_t k = 0; k < kHinfGridPoints; ++k) {
    const bool left_ok = k == 0 || gains[k] >= gains[k - 1];
    const bool right_ok = k + 1 == kHinfGridPoints || gains[k] >= gains[k + 1];
    if (left_ok && right_ok) peaks.push_back(k);
  }
  std::sort(peaks.begin(), peaks.end(),
            [&](std::size_t l, std::size_t r) { return gains[l] > gains[r]; });

  double best = *std::max_element(gains.begin(), gains.end());
  const int refine = std::min<int>(kHinfRefineCandidates, static_cast<int>(peaks.size()));
  for (int p = 0; p < refine; ++p) {
    const std::size_t k = peaks[static_cast<std::size_t>(p)];
    const double lo = k == 0 ? 0.0 : step * static_cast<double>(k - 1);
    const double hi = k + 1 == kHinfGridPoints ? std::numbers::pi : step * static_cast<double>(k + 1);
    best = std::max(best, golden_section_max(c, a, b, lo, hi));
  }
  return best;
}

double transient_bound(const Matrix& a) {
  require_square(a, "A");
  const double rho = spectral_radius(a);
  if (!(rho < 1.0)) throw UnstableError("transient_bound: spectral radius is not below 1");

  const auto n = static_cast<std::size_t>(std::max<Eigen::Index>(a.rows(), 1));
  const auto cap = static_cast<std::size_t>(std::ceil(10.0 * static_cast<double>(n) / (1.0 - rho)));

  double best = 1.0;
  double previous = 1.0;
  std::size_t decaying = 0;
  Matrix power = Matrix::Identity(a.rows(), a.cols());
  for (std::size_t k = 1; k <= cap; ++k) {
    power = power * a;
    const double norm = operator_norm(power);
    best = std::max(best, norm);
    decaying = (norm < 1.0 && norm <= previous) ? decaying + 1 : 0;
    previous = norm;
    if (decaying >= n) return best;
  }
  throw NumericalError("transient_bound: no monotone decay within " + std::to_string(cap) +
                       " powers");
}

ObservabilityMargin observability_margin(const Matrix& c, const Matrix& a) {
  require_square(a, "A");
  if (c.cols() != a.rows()) throw ValidationError("observability_margin: C and A not conformant");
  const Eigen::Index n = a.rows();
  ObservabilityMargin out;
  if (n == 0) return out;

  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvector solver did not converge");

  const auto ratio = [&](const Vector& q) { return (c * q).norm() / q.norm(); };

  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    const Eigen::VectorXcd q = es.eigenvectors().col(k);
    const Vector x = q.real();
    const Vector y = q.imag();
    if (std::abs(lambda.imag()) <= 1e-12 * std::max(1.0, std::abs(lambda))) {
      margin = std::min(margin, ratio(x.norm() >= y.norm() ? x : y));
      continue;
    }
    // Canonical phase: rotate so Re and Im are orthogonal with ||Re|| >= ||Im||.
    const double theta = -0.5 * std::atan2(2.0 * x.dot(y), x.squaredNorm() - y.squaredNorm());
    const Vector re = x * std::cos(theta) - y * std::sin(theta);
    const Vector im = x * std::sin(theta) + y * std::cos(theta);
    const double scale = std::sqrt(q.squaredNorm());
    if (re.norm() > 1e-12 * scale) margin = std::min(margin, ratio(re));
    if (im.norm() > 1e-12 * scale) margin = std::min(margin, ratio(im));
  }
  out.eigen = margin;

  Matrix stacked(c.rows() * n, n);
  Matrix block = c;
  for (Eigen::Index k = 0; k < n; ++k) {
    stacked.middleRows(k * c.rows(), c.rows()) = block;
    block = block * a;
  }
  if (stacked.rows() < n) {
    out.stacked = 0.0;
  } else {
    Eigen::JacobiSVD<Matrix> svd(stacked);
    out.stacked = svd.singularValues()(n - 1);
  }
  return out;
}

Matrix observability_toeplitz(const Matrix& c, const Matrix& a, std::size_t len) {
  require_square(a, "A");
  if (c.cols() != a.rows()) throw ValidationError("observability_toeplitz: C and A not conformant");
  if (len == 0) throw ValidationError("observability_toeplitz: len must be positive");
  const Eigen::Index p = c.rows();
  const Eigen::Index n = a.rows();
  const auto l = static_cast<Eigen::Index>(len);
  Matrix t = Matrix::Zero(p * l, n * l);
  Matrix block = c;
  for (Eigen::Index d = 0; d < l; ++d) {
    for (Eigen::Index i = 0; i + d < l; ++i) {
      t.block(i * p, (i + d) * n, p, n) = block;
    }
    block = block * a;
  }
  return t;
}

Matrix matrix_power(const Matrix& a, std::size_t k) {
  require_square(a, "A");
  Matrix result = Matrix::Identity(a.rows(), a.cols());
  Matrix base = a;
  while (k > 0) {
    if (k & 1U) result = result * base;
    base = base * base;
    k >>= 1U;
  }
  return result;
}

}  // namespace switchid
