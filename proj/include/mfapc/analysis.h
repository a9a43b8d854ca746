#pragma once

// Closed-loop analysis for a frozen PJM.
//
// Only the first input block of dU_Nu is applied, so the controller reduces to
// the M_u-dimensional channel K = g^T P with P = (~Psi_Nu^T ~Psi_Nu + lambda)^-1 ~Psi_Nu^T:
//
//   R(z^-1) du(k) = K H y*(k+1) - K E y(k) - kappa_Y(z^-1) dy(k),
//   R(z^-1)       = I + z^-1 kappa_U(z^-1),
//
// where kappa_Y = K ~Psi_Y T_y and kappa_U = K ~Psi_U T_u. Combined with
// (I - z^-1 phi_Ly) dy(k+1) = phi_Lu du(k) this gives
//
//   T = (I - z^-1 phi_Ly) Delta + z^-1 phi_Lu R^-1 (kappa_Y Delta + K E).
//
// R^-1 is cleared with the adjugate: T holds det(R) T, an M_y x M_y polynomial
// matrix. Its determinant is det(R)^M_y det T, which carries M_y - 1 spurious
// copies of the roots of det R, so the poles are instead taken from the joint
// (y, du) operator
//
//   S = [ (I - z^-1 phi_Ly) Delta      -phi_Lu ]
//       [ z^-1 (kappa_Y Delta + K E)    R      ],   det S = det(R) det T.

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfapc/controller_config.h"
#include "mfapc/edlm.h"
#include "mfapc/polynomial.h"

namespace mfapc {

struct ClosedLoop {
  PolyMatrix T{0, 0};             // det(R) * T(z^-1), M_y x M_y
  PolyMatrix system{0, 0};        // S, (M_y + M_u) square
  Polynomial denominator;   // det(R)
  PolyMatrix phi_ly{0, 0};        // phi_Ly(z^-1)
  PolyMatrix phi_lu{0, 0};        // phi_Lu(z^-1)
  PolyMatrix r{0, 0};             // R(z^-1)
  PolyMatrix kappa_y{0, 0};       // K ~Psi_Y T_y
  PolyMatrix k_ref{0, 0};         // K (K_I + K_P Delta), M_u x N*M_y; K_I = I, K_P = 0 unless PI
  PolyMatrix k_e{0, 0};           // k_ref E
  Eigen::MatrixXd gain;     // K = g^T P, M_u x N*M_y
  int horizon = 1;
  PreviewMode preview = PreviewMode::kPreview;

  // The unreduced rational T evaluated at a point z.
  Eigen::MatrixXcd evaluate_t(std::complex<double> z) const;
  // T - phi_Lu R^-1 k_ref H(z): the error transfer is T^-1 times this.
  Eigen::MatrixXcd evaluate_error_numerator(std::complex<double> z) const;
};

// The iterative variant is analyzed as the standard law (a frozen PJM makes
// every re-linearization identical).
ClosedLoop closed_loop_T(const Pjm& pjm, const ControllerConfig& cfg);

struct PoleReport {
  std::vector<std::complex<double>> roots;
  Polynomial characteristic;
  double max_modulus = 0.0;
  // Repeated roots on the unit circle come back perturbed by about sqrt(eps);
  // anything within kMarginalPole of it counts as marginal, not stable.
  static constexpr double kMarginalPole = 1e-6;
  bool stable() const { return max_modulus < 1.0 - kMarginalPole; }
};

// Roots of det T. Throws DegenerateError when det T vanishes identically.
PoleReport poles(const PolyMatrix& T);
// Closed-loop poles: roots of det S.
PoleReport poles(const ClosedLoop& loop);

enum class ReferenceKind { kStep, kRamp };

struct SteadyStateError {
  Eigen::VectorXd value;
  bool converged = true;
  bool diverges = false;  // the limit grows without bound (e.g. ramp + lambda > 0)
  double spread = 0.0;
  std::string warning;
};

// Final-value limit of the tracking error for y*(k) = level (step) or
// k * level (ramp); level defaults to ones. Evaluated numerically at
// z = 1 + eps, eps in {1e-3, 1e-4, 1e-5}, with Richardson extrapolation.
// Throws PreconditionError unless every pole lies strictly inside the unit circle.
SteadyStateError steady_state_error(const Pjm& pjm, const ControllerConfig& cfg,
                                    ReferenceKind kind,
                                    const Eigen::VectorXd& level = Eigen::VectorXd());

}  // namespace mfapc
