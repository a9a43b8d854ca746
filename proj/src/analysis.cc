#include "mfapc/analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

#include "mfapc/controller.h"
#include "mfapc/errors.h"
#include "mfapc/predictor.h"

namespace mfapc {
namespace {

using Complex = std::complex<double>;

// sum_i blocks[i] w^i, where blocks are the consecutive `width`-column slices of m.
PolyMatrix ColumnBlocksAsPolynomial(const MatrixXd& m, int width) {
  if (width == 0 || m.cols() == 0) return PolyMatrix(static_cast<int>(m.rows()), width);
  std::vector<MatrixXd> coeffs;
  for (Eigen::Index c = 0; c < m.cols(); c += width) coeffs.push_back(m.middleCols(c, width));
  return PolyMatrix(static_cast<int>(m.rows()), width, std::move(coeffs));
}

Eigen::MatrixXcd Inverse(const Eigen::MatrixXcd& m) { return m.fullPivLu().inverse(); }

// H(z): [I; zI; ...; z^{N-1} I] with preview, N stacked identities otherwise.
Eigen::MatrixXcd PreviewMatrix(int outputs, int horizon, PreviewMode mode, Complex z) {
  Eigen::MatrixXcd h(static_cast<Eigen::Index>(outputs) * horizon, outputs);
  Complex p = 1.0;
  for (int j = 0; j < horizon; ++j) {
    h.middleRows(static_cast<Eigen::Index>(j) * outputs, outputs) =
        p * Eigen::MatrixXcd::Identity(outputs, outputs);
    if (mode == PreviewMode::kPreview) p *= z;
  }
  return h;
}

}  // namespace

Eigen::MatrixXcd ClosedLoop::evaluate_t(Complex z) const {
  const Complex w = 1.0 / z;
  const int my = phi_ly.rows();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(my, my);
  const Complex delta = 1.0 - w;
  const Eigen::MatrixXcd plant = (id - w * phi_ly.evaluate(w)) * delta;
  const Eigen::MatrixXcd feedback = kappa_y.evaluate(w) * delta + k_e.evaluate(w);
  return plant + w * phi_lu.evaluate(w) * Inverse(r.evaluate(w)) * feedback;
}

Eigen::MatrixXcd ClosedLoop::evaluate_error_numerator(Complex z) const {
  const Complex w = 1.0 / z;
  const int my = phi_ly.rows();
  const Eigen::MatrixXcd h = PreviewMatrix(my, horizon, preview, z);
  return evaluate_t(z) - phi_lu.evaluate(w) * Inverse(r.evaluate(w)) * k_ref.evaluate(w) * h;
}

ClosedLoop closed_loop_T(const Pjm& pjm, const ControllerConfig& cfg) {
  cfg.validate();
  if (!(pjm.dims() == cfg.dims)) throw StructuralError("PJM dimensions differ from the config");
  const Dims& d = cfg.dims;
  const int my = d.outputs;
  const int mu = d.inputs;
  const int n = cfg.horizon;

  const PredictionOperators ops = build_prediction_operators(pjm, n, cfg.control_horizon);
  const MatrixXd p = regularized_gain(ops.psi_nu_tilde, cfg.lambda_diagonal(), cfg.singular);

  ClosedLoop out;
  out.horizon = n;
  out.preview = cfg.preview;
  out.gain = p.topRows(mu);

  // Reference shaping: K_I e + K_P (e - e_prev) for the PI variant.
  PolyMatrix shaping = PolyMatrix::Identity(n * my);
  if (const auto* pi = std::get_if<PiVariant>(&cfg.variant)) {
    const MatrixXd ki = expand_horizon_gain(pi->ki, my, n);
    const MatrixXd kp = expand_horizon_gain(pi->kp, my, n);
    shaping = PolyMatrix::Constant(ki) + PolyMatrix::Constant(kp) * Polynomial::Difference();
  }
  out.k_ref = PolyMatrix::Constant(out.gain) * shaping;
  out.k_e = out.k_ref * PolyMatrix::Constant(ops.E);

  out.kappa_y = ColumnBlocksAsPolynomial(out.gain * ops.psi_y_tilde, my);
  const PolyMatrix kappa_u = ColumnBlocksAsPolynomial(out.gain * ops.psi_u_tilde, mu);
  out.r = PolyMatrix::Identity(mu) + kappa_u.shifted(1);
  if (out.kappa_y.rows() == 0 || d.output_order == 0) out.kappa_y = PolyMatrix(mu, my);

  out.phi_ly = d.output_order > 0 ? ColumnBlocksAsPolynomial(pjm.phi_y(), my) : PolyMatrix(my, my);
  out.phi_lu = ColumnBlocksAsPolynomial(pjm.phi_u(), mu);

  out.denominator = determinant(out.r);
  const PolyMatrix feedback = out.kappa_y * Polynomial::Difference() + out.k_e;
  out.T = (PolyMatrix::Identity(my) - out.phi_ly.shifted(1)) *
              (out.denominator * Polynomial::Difference()) +
          (out.phi_lu * adjugate(out.r) * feedback).shifted(1);

  const PolyMatrix plant =
      (PolyMatrix::Identity(my) - out.phi_ly.shifted(1)) * Polynomial::Difference();
  const PolyMatrix back = feedback.shifted(1);
  std::vector<MatrixXd> coeffs;
  const int degree = std::max({plant.degree(), out.phi_lu.degree(), back.degree(), out.r.degree()});
  for (int i = 0; i <= degree; ++i) {
    MatrixXd c = MatrixXd::Zero(my + mu, my + mu);
    const auto at = [i](const PolyMatrix& m) {
      return i <= m.degree() ? m.coeffs()[static_cast<std::size_t>(i)]
                             : MatrixXd::Zero(m.rows(), m.cols());
    };
    c.topLeftCorner(my, my) = at(plant);
    c.topRightCorner(my, mu) = -at(out.phi_lu);
    c.bottomLeftCorner(mu, my) = at(back);
    c.bottomRightCorner(mu, mu) = at(out.r);
    coeffs.push_back(std::move(c));
  }
  out.system = PolyMatrix(my + mu, my + mu, std::move(coeffs));
  return out;
}

PoleReport poles(const PolyMatrix& T) {
  if (T.rows() != T.cols()) throw StructuralError("poles need a square polynomial matrix");
  PoleReport out;
  out.characteristic = determinant(T);
  if (out.characteristic.is_zero()) throw DegenerateError("det T vanishes identically");
  out.roots = roots_in_z(out.characteristic);
  for (const auto& r : out.roots) out.max_modulus = std::max(out.max_modulus, std::abs(r));
  return out;
}

PoleReport poles(const ClosedLoop& loop) { return poles(loop.system); }

SteadyStateError steady_state_error(const Pjm& pjm, const ControllerConfig& cfg,
                                    ReferenceKind kind, const Eigen::VectorXd& level) {
  const ClosedLoop loop = closed_loop_T(pjm, cfg);
  const PoleReport pr = poles(loop);
  if (!pr.stable()) {
    throw PreconditionError("closed loop is not stable (max |pole| = " +
                            std::to_string(pr.max_modulus) + ")");
  }
  const int my = cfg.dims.outputs;
  Eigen::VectorXd v = level.size() == 0 ? Eigen::VectorXd::Ones(my) : level;
  if (v.size() != my) throw StructuralError("reference level has the wrong size");

  // (z - 1) E(z) for a step is T^-1 Nm v z; a ramp divides that by (z - 1).
  const auto step_limit = [&](double eps) {
    const Complex z = 1.0 + eps;
    const Eigen::MatrixXcd t = loop.evaluate_t(z);
    const Eigen::VectorXcd e = t.fullPivLu().solve(loop.evaluate_error_numerator(z) *
                                                   v.cast<Complex>()) * z;
    return Eigen::VectorXd(e.real());
  };
  const auto richardson = [](const Eigen::VectorXd& e1, const Eigen::VectorXd& e2,
                             const Eigen::VectorXd& e3, double* spread) {
    const Eigen::VectorXd r1 = (10.0 * e2 - e1) / 9.0;
    const Eigen::VectorXd r2 = (10.0 * e3 - e2) / 9.0;
    const Eigen::VectorXd fin = (100.0 * r2 - r1) / 99.0;
    *spread = (fin - r2).lpNorm<Eigen::Infinity>();
    return fin;
  };

  const double eps[3] = {1e-3, 1e-4, 1e-5};
  Eigen::VectorXd s[3];
  for (int i = 0; i < 3; ++i) s[i] = step_limit(eps[i]);

  SteadyStateError out;
  double spread = 0.0;
  const Eigen::VectorXd step = richardson(s[0], s[1], s[2], &spread);
  if (kind == ReferenceKind::kStep) {
    out.value = step;
  } else {
    // The ramp limit is finite only when the step error vanishes.
    const double scale = std::max(1.0, v.lpNorm<Eigen::Infinity>());
    if (step.lpNorm<Eigen::Infinity>() > 1e-7 * scale) {
      out.diverges = true;
      out.converged = false;
      out.value = Eigen::VectorXd::Constant(my, std::numeric_limits<double>::infinity());
      out.warning = "ramp error grows without bound";
      out.spread = spread;
      return out;
    }
    Eigen::VectorXd g[3];
    for (int i = 0; i < 3; ++i) g[i] = (s[i] - step) / eps[i];
    out.value = richardson(g[0], g[1], g[2], &spread);
  }
  out.spread = spread;
  if (spread > 1e-6) {
    out.converged = false;
    out.warning = "extrapolation did not settle (spread " + std::to_string(spread) + ")";
  }
  return out;
}

}  // namespace mfapc
