#include "mfapc/controller.h"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "mfapc/errors.h"

namespace mfapc {

void ControllerConfig::validate() const {
  try {
    dims.validate();
  } catch (const StructuralError& e) {
    throw ConfigError(e.what());
  }
  if (horizon < 1) throw ConfigError("prediction horizon N must be >= 1");
  if (control_horizon < 1 || control_horizon > horizon) {
    throw ConfigError("control horizon must satisfy 1 <= N_u <= N");
  }
  if (lambda.size() != 1 && lambda.size() != decision_size()) {
    throw ConfigError("lambda must be a scalar or have N_u*M_u = " +
                      std::to_string(decision_size()) + " entries");
  }
  if (!lambda.allFinite() || (lambda.array() < 0.0).any()) {
    throw ConfigError("lambda entries must be finite and >= 0");
  }
  if (const auto* pi = std::get_if<PiVariant>(&variant)) {
    for (const MatrixXd* g : {&pi->kp, &pi->ki}) {
      const bool generator = g->rows() == dims.outputs && g->cols() == dims.outputs;
      const bool full = g->rows() == prediction_size() && g->cols() == prediction_size();
      if (!generator && !full) {
        throw ConfigError("PI gains must be M_y x M_y or N*M_y x N*M_y");
      }
    }
  }
  if (const auto* it = std::get_if<IterativeVariant>(&variant)) {
    if (it->max_iters < 1) throw ConfigError("iterative variant needs max_iters >= 1");
  }
}

VectorXd ControllerConfig::lambda_diagonal() const {
  if (lambda.size() == 1) return VectorXd::Constant(decision_size(), lambda(0));
  return lambda;
}

ControllerConfig with_scalar_lambda(ControllerConfig cfg, double lambda) {
  cfg.lambda = VectorXd::Constant(1, lambda);
  return cfg;
}

std::string variant_name(const ControllerVariant& v) {
  if (std::holds_alternative<PiVariant>(v)) return "pi";
  if (std::holds_alternative<IterativeVariant>(v)) return "iterative";
  return "standard";
}

PastIncrements summarize(const HistoryWindow& hist, const Dims& dims) {
  const int k = hist.k();
  PastIncrements p;
  p.y_k = hist.y(k);
  p.y_prev = hist.y(k - 1);
  p.u_prev = hist.u(k - 1);
  p.d_y = hist.delta_y_stack(k, dims.output_order);
  p.d_u_prev = hist.delta_u_stack(k - 1, dims.input_order);
  return p;
}

double cost(const PredictionOperators& ops, const PastIncrements& past, const VectorXd& d_u,
            const VectorXd& y_star, const VectorXd& lambda_diag) {
  const VectorXd err = y_star - predict(ops, past.y_k, past.d_y, past.d_u_prev, d_u);
  return err.squaredNorm() + d_u.dot(lambda_diag.cwiseProduct(d_u));
}

RegularizedSolution solve_regularized(const MatrixXd& gain, const VectorXd& residual,
                                      const VectorXd& lambda_diag, SingularPolicy policy) {
  const Eigen::Index n = gain.cols();
  if (lambda_diag.size() != n) throw StructuralError("lambda size does not match the gain");
  MatrixXd normal = gain.transpose() * gain;
  normal.diagonal() += lambda_diag;
  const VectorXd rhs = gain.transpose() * residual;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  const double tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                     std::max(max_ev, std::numeric_limits<double>::min());

  RegularizedSolution out;
  out.rank = static_cast<int>((eig.eigenvalues().array() > tol).count());
  out.condition = min_ev > 0.0 ? max_ev / min_ev : std::numeric_limits<double>::infinity();

  if (min_ev > tol) {
    out.x = normal.llt().solve(rhs);
    return out;
  }
  if (policy == SingularPolicy::kRaise) {
    std::ostringstream msg;
    msg << "normal matrix is singular (rank " << out.rank << " of " << n
        << ", condition estimate " << out.condition << "); increase lambda";
    throw SolverError(msg.str(), out.condition);
  }
  // Minimum-norm solution of [G; sqrt(lambda)] x ~ [r; 0].
  MatrixXd augmented(gain.rows() + n, n);
  augmented << gain, MatrixXd(lambda_diag.cwiseSqrt().asDiagonal());
  VectorXd target = VectorXd::Zero(gain.rows() + n);
  target.head(gain.rows()) = residual;
  out.x = augmented.completeOrthogonalDecomposition().solve(target);
  return out;
}

MatrixXd regularized_gain(const MatrixXd& gain, const VectorXd& lambda_diag,
                          SingularPolicy policy) {
  const Eigen::Index m = gain.rows();
  MatrixXd out(gain.cols(), m);
  for (Eigen::Index j = 0; j < m; ++j) {
    out.col(j) = solve_regularized(gain, VectorXd::Unit(m, j), lambda_diag, policy).x;
  }
  return out;
}

namespace {

void SubtractHistoryTerms(const PredictionOperators& ops, const PastIncrements& past,
                          VectorXd& bracket) {
  if (ops.dims.output_order > 0) bracket -= ops.psi_y_tilde * past.d_y;
  bracket -= ops.psi_u_tilde * past.d_u_prev;
}

void CheckShapes(const PredictionOperators& ops, const VectorXd& y_star,
                 const ControllerConfig& cfg) {
  cfg.validate();
  if (!(ops.dims == cfg.dims) || ops.horizon != cfg.horizon ||
      ops.control_horizon != cfg.control_horizon) {
    throw StructuralError("prediction operators do not match the controller configuration");
  }
  if (y_star.size() != cfg.prediction_size()) {
    throw StructuralError("reference preview has " + std::to_string(y_star.size()) +
                          " entries, expected N*M_y = " + std::to_string(cfg.prediction_size()));
  }
}

ControlDecision Decide(const PredictionOperators& ops, const PastIncrements& past,
                       const VectorXd& bracket, const VectorXd& y_star,
                       const ControllerConfig& cfg) {
  const VectorXd lambda = cfg.lambda_diagonal();
  RegularizedSolution sol = solve_regularized(ops.psi_nu_tilde, bracket, lambda, cfg.singular);
  ControlDecision d;
  d.d_u_full = std::move(sol.x);
  d.u_k = past.u_prev + d.d_u_full.head(cfg.dims.inputs);
  d.cost = cost(ops, past, d.d_u_full, y_star, lambda);
  d.rank = sol.rank;
  d.condition = sol.condition;
  return d;
}

}  // namespace

ControlDecision mfapc_control(const PredictionOperators& ops, const HistoryWindow& hist,
                              const VectorXd& y_star, const ControllerConfig& cfg) {
  CheckShapes(ops, y_star, cfg);
  const PastIncrements past = summarize(hist, cfg.dims);
  VectorXd bracket = y_star - stack_outputs(past.y_k, ops.horizon);
  SubtractHistoryTerms(ops, past, bracket);
  return Decide(ops, past, bracket, y_star, cfg);
}

MatrixXd expand_horizon_gain(const MatrixXd& gain, int outputs, int horizon) {
  if (gain.rows() == static_cast<Eigen::Index>(outputs) * horizon && gain.cols() == gain.rows()) {
    return gain;
  }
  if (gain.rows() != outputs || gain.cols() != outputs) {
    throw ConfigError("gain must be M_y x M_y or N*M_y x N*M_y");
  }
  MatrixXd out = MatrixXd::Zero(outputs * horizon, outputs * horizon);
  for (int i = 0; i < horizon; ++i) out.block(i * outputs, i * outputs, outputs, outputs) = gain;
  return out;
}

ControlDecision mfapc_control_pi(const PredictionOperators& ops, const HistoryWindow& hist,
                                 const VectorXd& y_star, const VectorXd& y_star_prev,
                                 const ControllerConfig& cfg) {
  CheckShapes(ops, y_star, cfg);
  if (y_star_prev.size() != y_star.size()) {
    throw StructuralError("previous reference preview has the wrong size");
  }
  const auto* pi = std::get_if<PiVariant>(&cfg.variant);
  if (pi == nullptr) throw ConfigError("mfapc_control_pi requires the PI variant");
  const MatrixXd kp = expand_horizon_gain(pi->kp, cfg.dims.outputs, cfg.horizon);
  const MatrixXd ki = expand_horizon_gain(pi->ki, cfg.dims.outputs, cfg.horizon);

  const PastIncrements past = summarize(hist, cfg.dims);
  const VectorXd err_now = y_star - stack_outputs(past.y_k, ops.horizon);
  const VectorXd err_prev = y_star_prev - stack_outputs(past.y_prev, ops.horizon);
  VectorXd bracket = ki * err_now + kp * (err_now - err_prev);
  SubtractHistoryTerms(ops, past, bracket);
  return Decide(ops, past, bracket, y_star, cfg);
}

ControlDecision mfapc_control_iterative(const JacobianProvider& jacobian,
                                        const HistoryWindow& hist, const VectorXd& y_star,
                                        const ControllerConfig& cfg) {
  const auto* it = std::get_if<IterativeVariant>(&cfg.variant);
  const int max_iters = it != nullptr ? it->max_iters : 1;
  if (max_iters < 1) throw ConfigError("iterative variant needs max_iters >= 1");

  const int k = hist.k();
  const int n = cfg.horizon;
  const int mu = cfg.dims.inputs;
  const int my = cfg.dims.outputs;
  const Pjm measured = jacobian(hist, k);
  std::vector<Pjm> pjms(static_cast<std::size_t>(n), measured);

  ControlDecision best;
  for (int i = 0; i < max_iters; ++i) {
    const PredictionOperators ops = build_prediction_operators_tv(pjms, n, cfg.control_horizon);
    ControlDecision d = mfapc_control(ops, hist, y_star, cfg);
    d.iterations = i + 1;
    if (i > 0 && d.d_u_full.norm() > 10.0 * best.d_u_full.norm() + 1e-12) {
      best.guard_triggered = true;
      return best;
    }
    best = d;
    if (i + 1 == max_iters) break;

    // Predicted trajectory of this iterate: inputs held after N_u, outputs
    // from the prediction model.
    const PastIncrements past = summarize(hist, cfg.dims);
    VectorXd d_u_horizon = VectorXd::Zero(static_cast<Eigen::Index>(n) * mu);
    d_u_horizon.head(d.d_u_full.size()) = d.d_u_full;
    const VectorXd y_pred = predict(ops, past.y_k, past.d_y, past.d_u_prev, d.d_u_full);

    HistoryWindow ext = hist;
    VectorXd u = past.u_prev;
    for (int j = 0; j < n; ++j) {
      u += d_u_horizon.segment(j * mu, mu);
      ext.push_input(u);
      ext.push_output(y_pred.segment(j * my, my));
    }
    for (int j = 1; j < n; ++j) pjms[static_cast<std::size_t>(j)] = jacobian(ext, k + j);
  }
  return best;
}

ControlDecision mfac_control(const Pjm& pjm, const HistoryWindow& hist, const VectorXd& y_star_1,
                             double lambda, SingularPolicy policy) {
  const Dims& dims = pjm.dims();
  if (y_star_1.size() != dims.outputs) {
    throw StructuralError("y*(k+1) has " + std::to_string(y_star_1.size()) +
                          " entries, expected " + std::to_string(dims.outputs));
  }
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  const PastIncrements past = summarize(hist, dims);
  const ShiftOperators s = build_shift_operators(dims, 1);

  // sum_{i=2}^{Lu} Phi_{Ly+i} du(k-i+1) is phi_u A dU_Lu(k-1).
  const MatrixXd lagged_inputs = pjm.phi_u() * s.A;
  const MatrixXd lead = pjm.phi_u() * s.B;

  VectorXd bracket = y_star_1 - past.y_k;
  if (dims.output_order > 0) bracket -= pjm.phi_y() * past.d_y;
  bracket -= lagged_inputs * past.d_u_prev;

  const VectorXd lambda_diag = VectorXd::Constant(dims.inputs, lambda);
  RegularizedSolution sol = solve_regularized(lead, bracket, lambda_diag, policy);
  ControlDecision d;
  d.d_u_full = std::move(sol.x);
  d.u_k = past.u_prev + d.d_u_full;
  const VectorXd err = bracket - lead * d.d_u_full;
  d.cost = err.squaredNorm() + lambda * d.d_u_full.squaredNorm();
  d.rank = sol.rank;
  d.condition = sol.condition;
  return d;
}

}  // namespace mfapc
