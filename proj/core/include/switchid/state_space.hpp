#pragma once

#include "switchid/linalg.hpp"

#include <cstddef>
#include <vector>

namespace switchid {

// x_{t+1} = A x_t + B u_t + w_t,  y_t = C x_t + eta_t
struct StateSpace {
  Matrix A;
  Matrix B;
  Matrix C;

  std::size_t state_dim() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(B.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(C.rows()); }

  // Throws ValidationError on non-conformant or non-finite matrices.
  void validate() const;
};

// Either static output feedback u = K y, or a dynamic controller
//   xk_{t+1} = AK xk_t + BK y_t,  u_t = CK xk_t + DK y_t.
struct Controller {
  enum class Kind { Static, Dynamic };

  Kind kind = Kind::Static;
  Matrix K;
  Matrix AK, BK, CK, DK;

  static Controller make_static(Matrix gain);
  static Controller make_dynamic(Matrix ak, Matrix bk, Matrix ck, Matrix dk);

  std::size_t state_dim() const;
  // Dimension of the measurement it consumes (d_y).
  std::size_t measurement_dim() const;
  // Dimension of the control it produces (d_u).
  std::size_t control_dim() const;

  void validate() const;
};

// Standard deviations of process, exploratory-input and measurement noise.
//
// Plain aggregate so simulations may use zero scales; anything fed to the
// theory-side calculators goes through checked()/validate(), which require
// strictly positive values.
struct NoiseSpec {
  double sigma_w = 1.0;
  double sigma_u = 1.0;
  double sigma_eta = 1.0;

  static NoiseSpec checked(double sigma_w, double sigma_u, double sigma_eta);
  void validate() const;
};

}  // namespace switchid
