#pragma once

// Online pseudo-Jacobian estimation by the corrected projection algorithm:
//
//   phi(k) = phi(k-1) + eta [dy(k) - phi(k-1) dH(k-1)] dH(k-1)^T (mu I + dH dH^T)^-1

#include <optional>
#include <variant>

#include "mfapc/edlm.h"

namespace mfapc {

struct EstimatorState {
  Pjm phi_hat;
  double eta = 1.0;
  double mu = 1.0;
  // Value restored by the norm-threshold reset.
  Pjm initial;
  std::optional<VectorXd> last_d_h;

  EstimatorState(Pjm init, double eta_, double mu_);
};

// Rank-one shortcut for the (mu I + dH dH^T)^-1 factor:
// dH^T (mu I + dH dH^T)^-1 = dH^T / (mu + |dH|^2).
enum class ProjectionSolve { kDirect, kRankOne };

EstimatorState projection_update(const EstimatorState& st, const VectorXd& y_k,
                                 const VectorXd& y_km1, const VectorXd& d_h_km1,
                                 ProjectionSolve mode = ProjectionSolve::kDirect);

struct ResetOff {};
// Restores any Phi_i block whose Frobenius norm falls to `threshold` or below.
struct ResetNormThreshold {
  double threshold = 1e-4;
};
using ResetPolicy = std::variant<ResetOff, ResetNormThreshold>;

EstimatorState maybe_reset(const EstimatorState& st, const ResetPolicy& policy);

}  // namespace mfapc
