#pragma once

// Receding-horizon control laws built on the N-step prediction model.
//
// The standard law minimizes
//
//   J = |Y*_N(k+1) - Y_N(k+1)|^2 + dU_Nu^T diag(lambda) dU_Nu
//
// in closed form,
//
//   dU_Nu = (~Psi_Nu^T ~Psi_Nu + lambda)^-1 ~Psi_Nu^T
//           [(Y* - E y(k)) - ~Psi_Y dY_Ly(k) - ~Psi_U dU_Lu(k-1)],
//
// and applies only the first block: u(k) = u(k-1) + dU_Nu[0].

#include <functional>

#include <Eigen/Dense>

#include "mfapc/controller_config.h"
#include "mfapc/edlm.h"
#include "mfapc/predictor.h"

namespace mfapc {

// Measured quantities the laws need at time k.
struct PastIncrements {
  VectorXd y_k;       // y(k)
  VectorXd y_prev;    // y(k-1)
  VectorXd u_prev;    // u(k-1)
  VectorXd d_y;       // dY_Ly(k)
  VectorXd d_u_prev;  // dU_Lu(k-1)
};

// Reads the increments at the newest output index of `hist`.
PastIncrements summarize(const HistoryWindow& hist, const Dims& dims);

struct ControlDecision {
  VectorXd u_k;
  VectorXd d_u_full;  // stacked dU_Nu(k)
  double cost = 0.0;  // J at d_u_full
  int rank = 0;       // numerical rank of the normal matrix
  double condition = 1.0;
  int iterations = 1;
  bool guard_triggered = false;  // iterative variant stopped on growth
};

double cost(const PredictionOperators& ops, const PastIncrements& past, const VectorXd& d_u,
            const VectorXd& y_star, const VectorXd& lambda_diag);

// x = (G^T G + diag(lambda))^-1 G^T r. Zero weights are allowed; a singular
// normal matrix then either throws SolverError or falls back to the
// minimum-norm least-squares solution, per `policy`.
struct RegularizedSolution {
  VectorXd x;
  int rank = 0;
  double condition = 1.0;
};
RegularizedSolution solve_regularized(const MatrixXd& gain, const VectorXd& residual,
                                      const VectorXd& lambda_diag, SingularPolicy policy);

// P = (G^T G + diag(lambda))^-1 G^T, with the same singular handling.
MatrixXd regularized_gain(const MatrixXd& gain, const VectorXd& lambda_diag,
                          SingularPolicy policy);

ControlDecision mfapc_control(const PredictionOperators& ops, const HistoryWindow& hist,
                              const VectorXd& y_star, const ControllerConfig& cfg);

// y_star = Y*_N(k+1), y_star_prev = Y*_N(k).
ControlDecision mfapc_control_pi(const PredictionOperators& ops, const HistoryWindow& hist,
                                 const VectorXd& y_star, const VectorXd& y_star_prev,
                                 const ControllerConfig& cfg);

// PJM at time t given samples up to t-1 (and predicted samples beyond k).
using JacobianProvider = std::function<Pjm(const HistoryWindow& hist, int t)>;

// Iterates: linearize along the trajectory predicted by the previous iterate,
// rebuild the time-varying operators, re-solve. Iterate 0 uses the PJM at the
// measured history for every horizon step.
ControlDecision mfapc_control_iterative(const JacobianProvider& jacobian,
                                        const HistoryWindow& hist, const VectorXd& y_star,
                                        const ControllerConfig& cfg);

// One-step law on the leading input block Phi_{Ly+1}.
ControlDecision mfac_control(const Pjm& pjm, const HistoryWindow& hist, const VectorXd& y_star_1,
                             double lambda,
                             SingularPolicy policy = SingularPolicy::kMinimumNorm);

// Expands an M_y x M_y gain to block-diagonal over the horizon; N*M_y square
// gains pass through.
MatrixXd expand_horizon_gain(const MatrixXd& gain, int outputs, int horizon);

}  // namespace mfapc
