#include "mfapc/estimator.h"

#include <string>

#include "mfapc/errors.h"

namespace mfapc {

EstimatorState::EstimatorState(Pjm init, double eta_, double mu_)
    : phi_hat(init), eta(eta_), mu(mu_), initial(std::move(init)) {
  if (!(eta > 0.0)) throw ConfigError("estimator step gain eta must be > 0");
  if (!(mu > 0.0)) throw ConfigError("estimator regularizer mu must be > 0");
}

EstimatorState projection_update(const EstimatorState& st, const VectorXd& y_k,
                                 const VectorXd& y_km1, const VectorXd& d_h_km1,
                                 ProjectionSolve mode) {
  const Dims& dims = st.phi_hat.dims();
  if (y_k.size() != dims.outputs || y_km1.size() != dims.outputs) {
    throw StructuralError("output samples do not match the estimator dimensions");
  }
  if (d_h_km1.size() != dims.regressor_size()) {
    throw StructuralError("dH has " + std::to_string(d_h_km1.size()) + " entries, expected " +
                          std::to_string(dims.regressor_size()));
  }
  if (!(st.mu > 0.0)) throw ConfigError("estimator regularizer mu must be > 0");

  const MatrixXd phi = st.phi_hat.stacked();
  const VectorXd innovation = (y_k - y_km1) - phi * d_h_km1;

  // gain_row = dH^T (mu I + dH dH^T)^-1, stored as a column.
  VectorXd gain_row;
  if (mode == ProjectionSolve::kRankOne) {
    gain_row = d_h_km1 / (st.mu + d_h_km1.squaredNorm());
  } else {
    MatrixXd m = d_h_km1 * d_h_km1.transpose();
    m.diagonal().array() += st.mu;
    gain_row = m.llt().solve(d_h_km1);
  }

  EstimatorState next = st;
  next.phi_hat = Pjm::FromStacked(dims, phi + st.eta * innovation * gain_row.transpose());
  next.last_d_h = d_h_km1;
  return next;
}

EstimatorState maybe_reset(const EstimatorState& st, const ResetPolicy& policy) {
  const auto* rule = std::get_if<ResetNormThreshold>(&policy);
  if (rule == nullptr) return st;
  EstimatorState next = st;
  const Dims& dims = st.phi_hat.dims();
  for (int i = 1; i <= dims.output_order + dims.input_order; ++i) {
    if (st.phi_hat.block(i).norm() <= rule->threshold) {
      next.phi_hat.set_block(i, st.initial.block(i));
    }
  }
  return next;
}

}  // namespace mfapc
