#pragma once

// N-step prediction model built from the pseudo-Jacobian:
//
//   Y_N(k+1) = E y(k) + ~Psi_Y dY_Ly(k) + ~Psi_U dU_Lu(k-1) + ~Psi_Nu dU_Nu(k).
//
// Row block j of Psi_Y, Psi_U and Psi_N is generated by the recursion
//
//   phi1_j   = phi_y C^{j-1}     + phi_y sum_{i=0}^{j-2} C^i D phi1_{j-1-i}
//   phi2_j   = phi_u A^j         + phi_y sum_{i=0}^{j-2} C^i D phi2_{j-1-i}
//   psi_{j,l} = phi_u A^{j-l} B  + phi_y sum_{i=0}^{j-l-1} C^i D psi_{j-1-i,l}
//
// and the tilde operators are their block prefix sums (left product by A_N).
// With a PJM sequence, row j uses the PJM predicted for time k+j-1.

#include <span>

#include <Eigen/Dense>

#include "mfapc/controller_config.h"
#include "mfapc/edlm.h"

namespace mfapc {

struct ShiftOperators {
  MatrixXd A;    // (Lu*Mu)^2 block down-shift
  MatrixXd B;    // (Lu*Mu) x Mu, [I; 0; ...]
  MatrixXd C;    // (Ly*My)^2 block down-shift
  MatrixXd D;    // (Ly*My) x My, [I; 0; ...]
  MatrixXd A_N;  // (N*My)^2 block lower-triangular ones
  MatrixXd E;    // (N*My) x My, stacked identities
};

ShiftOperators build_shift_operators(const Dims& dims, int horizon);
ShiftOperators build_shift_operators(const ControllerConfig& cfg);

struct PredictionOperators {
  Dims dims;
  int horizon = 1;
  int control_horizon = 1;

  MatrixXd psi_y;  // (N*My) x (Ly*My)
  MatrixXd psi_u;  // (N*My) x (Lu*Mu)
  MatrixXd psi_n;  // (N*My) x (N*Mu)

  MatrixXd psi_y_tilde;
  MatrixXd psi_u_tilde;
  MatrixXd psi_n_tilde;
  MatrixXd psi_nu_tilde;  // first N_u block columns of psi_n_tilde
  MatrixXd E;
};

// Frozen PJM over the whole horizon.
PredictionOperators build_prediction_operators(const Pjm& pjm, int horizon, int control_horizon);

// pjms[i] is the PJM at time k+i, i = 0..N-1.
PredictionOperators build_prediction_operators_tv(std::span<const Pjm> pjms, int horizon,
                                                  int control_horizon);

// Stacked Y_N(k+1).
VectorXd predict(const PredictionOperators& ops, const VectorXd& y_k, const VectorXd& d_y,
                 const VectorXd& d_u_prev, const VectorXd& d_u_future);

// E y: N stacked copies of y.
VectorXd stack_outputs(const VectorXd& y, int horizon);

}  // namespace mfapc
