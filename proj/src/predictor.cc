#include "mfapc/predictor.h"

#include <cassert>
#include <string>
#include <vector>

#include "mfapc/errors.h"

namespace mfapc {

namespace {

MatrixXd BlockDownShift(int blocks, int width) {
  MatrixXd out = MatrixXd::Zero(blocks * width, blocks * width);
  for (int i = 1; i < blocks; ++i) {
    out.block(i * width, (i - 1) * width, width, width).setIdentity();
  }
  return out;
}

MatrixXd LeadingInjection(int blocks, int width) {
  MatrixXd out = MatrixXd::Zero(blocks * width, width);
  if (blocks > 0) out.topRows(width).setIdentity();
  return out;
}

// powers[i] = m^i for i = 0..count.
std::vector<MatrixXd> Powers(const MatrixXd& m, int count) {
  std::vector<MatrixXd> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  out.push_back(MatrixXd::Identity(m.rows(), m.cols()));
  for (int i = 1; i <= count; ++i) out.push_back(out.back() * m);
  return out;
}

// Row-block prefix sums; the block-row form of the product with A_N.
MatrixXd PrefixSum(const MatrixXd& m, int row_block) {
  MatrixXd out = m;
  for (Eigen::Index r = row_block; r < m.rows(); r += row_block) {
    out.middleRows(r, row_block) += out.middleRows(r - row_block, row_block);
  }
  return out;
}

}  // namespace

ShiftOperators build_shift_operators(const Dims& dims, int horizon) {
  dims.validate();
  if (horizon < 1) throw ConfigError("prediction horizon N must be >= 1");
  ShiftOperators s;
  s.A = BlockDownShift(dims.input_order, dims.inputs);
  s.B = LeadingInjection(dims.input_order, dims.inputs);
  s.C = BlockDownShift(dims.output_order, dims.outputs);
  s.D = LeadingInjection(dims.output_order, dims.outputs);
  s.A_N = MatrixXd::Zero(horizon * dims.outputs, horizon * dims.outputs);
  s.E = MatrixXd::Zero(horizon * dims.outputs, dims.outputs);
  for (int i = 0; i < horizon; ++i) {
    for (int j = 0; j <= i; ++j) {
      s.A_N.block(i * dims.outputs, j * dims.outputs, dims.outputs, dims.outputs).setIdentity();
    }
    s.E.middleRows(i * dims.outputs, dims.outputs).setIdentity();
  }
  return s;
}

ShiftOperators build_shift_operators(const ControllerConfig& cfg) {
  return build_shift_operators(cfg.dims, cfg.horizon);
}

PredictionOperators build_prediction_operators(const Pjm& pjm, int horizon, int control_horizon) {
  if (horizon < 1) throw ConfigError("prediction horizon N must be >= 1");
  std::vector<Pjm> frozen(static_cast<std::size_t>(horizon), pjm);
  return build_prediction_operators_tv(frozen, horizon, control_horizon);
}

PredictionOperators build_prediction_operators_tv(std::span<const Pjm> pjms, int horizon,
                                                  int control_horizon) {
  if (horizon < 1) throw ConfigError("prediction horizon N must be >= 1");
  if (control_horizon < 1 || control_horizon > horizon) {
    throw ConfigError("control horizon must satisfy 1 <= N_u <= N (got N_u=" +
                      std::to_string(control_horizon) + ", N=" + std::to_string(horizon) + ")");
  }
  if (pjms.size() != static_cast<std::size_t>(horizon)) {
    throw StructuralError("expected " + std::to_string(horizon) + " PJMs, got " +
                          std::to_string(pjms.size()));
  }
  const Dims dims = pjms.front().dims();
  for (const Pjm& p : pjms) {
    if (!(p.dims() == dims)) throw StructuralError("PJM sequence has inconsistent dimensions");
  }

  const int my = dims.outputs;
  const int mu = dims.inputs;
  const bool has_output_terms = dims.output_order > 0;
  const ShiftOperators s = build_shift_operators(dims, horizon);
  const std::vector<MatrixXd> a_pow = Powers(s.A, horizon);
  const std::vector<MatrixXd> c_pow = Powers(s.C, horizon);

  // C^i D, the injection into the i-th block of dY.
  std::vector<MatrixXd> c_pow_d;
  if (has_output_terms) {
    for (int i = 0; i < horizon; ++i) c_pow_d.push_back(c_pow[i] * s.D);
  }

  PredictionOperators ops;
  ops.dims = dims;
  ops.horizon = horizon;
  ops.control_horizon = control_horizon;
  ops.psi_y = MatrixXd::Zero(horizon * my, dims.output_width());
  ops.psi_u = MatrixXd::Zero(horizon * my, dims.input_width());
  ops.psi_n = MatrixXd::Zero(horizon * my, horizon * mu);

  for (int r = 0; r < horizon; ++r) {
    const MatrixXd& phi_y = pjms[r].phi_y();
    const MatrixXd& phi_u = pjms[r].phi_u();

    // Row r is Delta y(k+r+1); powers are A^{r+1} and A^{r-l} with l <= r, so
    // no negative exponent is ever requested.
    MatrixXd phi2 = phi_u * a_pow[r + 1];
    if (has_output_terms) {
      MatrixXd phi1 = phi_y * c_pow[r];
      MatrixXd carry_y = MatrixXd::Zero(dims.output_width(), dims.output_width());
      MatrixXd carry_u = MatrixXd::Zero(dims.output_width(), dims.input_width());
      for (int i = 0; i <= r - 1; ++i) {
        carry_y += c_pow_d[i] * ops.psi_y.middleRows((r - 1 - i) * my, my);
        carry_u += c_pow_d[i] * ops.psi_u.middleRows((r - 1 - i) * my, my);
      }
      phi1 += phi_y * carry_y;
      phi2 += phi_y * carry_u;
      ops.psi_y.middleRows(r * my, my) = phi1;
    }
    ops.psi_u.middleRows(r * my, my) = phi2;

    for (int l = 0; l <= r; ++l) {
      assert(r - l >= 0);
      MatrixXd psi = phi_u * a_pow[r - l] * s.B;
      if (has_output_terms && r - l - 1 >= 0) {
        MatrixXd carry = MatrixXd::Zero(dims.output_width(), mu);
        for (int i = 0; i <= r - l - 1; ++i) {
          carry += c_pow_d[i] * ops.psi_n.block((r - 1 - i) * my, l * mu, my, mu);
        }
        psi += phi_y * carry;
      }
      ops.psi_n.block(r * my, l * mu, my, mu) = psi;
    }
  }

  ops.psi_y_tilde = PrefixSum(ops.psi_y, my);
  ops.psi_u_tilde = PrefixSum(ops.psi_u, my);
  ops.psi_n_tilde = PrefixSum(ops.psi_n, my);
  ops.psi_nu_tilde = ops.psi_n_tilde.leftCols(control_horizon * mu);
  ops.E = s.E;
  return ops;
}

VectorXd stack_outputs(const VectorXd& y, int horizon) { return y.replicate(horizon, 1); }

VectorXd predict(const PredictionOperators& ops, const VectorXd& y_k, const VectorXd& d_y,
                 const VectorXd& d_u_prev, const VectorXd& d_u_future) {
  const Dims& d = ops.dims;
  if (y_k.size() != d.outputs || d_y.size() != d.output_width() ||
      d_u_prev.size() != d.input_width() ||
      d_u_future.size() != ops.control_horizon * d.inputs) {
    throw StructuralError("prediction inputs do not match operator dimensions");
  }
  VectorXd out = stack_outputs(y_k, ops.horizon);
  if (d.output_order > 0) out += ops.psi_y_tilde * d_y;
  out += ops.psi_u_tilde * d_u_prev;
  out += ops.psi_nu_tilde * d_u_future;
  return out;
}

}  // namespace mfapc
