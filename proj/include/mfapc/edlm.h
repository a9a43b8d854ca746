#pragma once

// Equivalent dynamic linearization data model:
//
//   y(k+1) = y(k) + phi_L^T(k) dH(k),
//   dH(k)  = [dy(k); ...; dy(k-Ly+1); du(k); ...; du(k-Lu+1)],
//
// with the pseudo-Jacobian phi_L^T(k) = [Phi_1 ... Phi_Ly | Phi_Ly+1 ... Phi_Ly+Lu].

#include <deque>
#include <optional>

#include <Eigen/Dense>

namespace mfapc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Sizes shared by every object in one control loop.
struct Dims {
  int outputs = 1;       // M_y
  int inputs = 1;        // M_u
  int output_order = 0;  // L_y >= 0
  int input_order = 1;   // L_u >= 1

  int output_width() const { return output_order * outputs; }
  int input_width() const { return input_order * inputs; }
  int regressor_size() const { return output_width() + input_width(); }

  // Throws StructuralError unless M_y, M_u, L_u >= 1 and L_y >= 0.
  void validate() const;
  bool operator==(const Dims&) const = default;
};

// Pseudo-Jacobian matrix, kept as its output block [Phi_1 .. Phi_Ly] and
// input block [Phi_Ly+1 .. Phi_Ly+Lu].
class Pjm {
 public:
  Pjm(const Dims& dims, MatrixXd phi_y, MatrixXd phi_u);

  static Pjm Zero(const Dims& dims);
  static Pjm Constant(const Dims& dims, double value);
  // Splits an M_y x (Ly*My + Lu*Mu) matrix into the two blocks.
  static Pjm FromStacked(const Dims& dims, const MatrixXd& stacked);

  const Dims& dims() const { return dims_; }
  const MatrixXd& phi_y() const { return phi_y_; }
  const MatrixXd& phi_u() const { return phi_u_; }
  MatrixXd stacked() const;

  // Phi_i, 1-based over the full block row (1..Ly are output blocks).
  MatrixXd block(int i) const;
  void set_block(int i, const MatrixXd& value);

  // Leading input block Phi_{Ly+1}.
  MatrixXd leading_input_block() const { return block(dims_.output_order + 1); }

  // Returns a copy padded with zero blocks up to the requested orders.
  // Throws ConfigError when an order would have to shrink.
  Pjm WithOrders(int output_order, int input_order) const;

  bool operator==(const Pjm& other) const;

 private:
  Dims dims_;
  MatrixXd phi_y_;
  MatrixXd phi_u_;
};

// Rolling record of measured outputs and applied inputs. Samples before the
// first recorded index are padded: y(t) = y(start) and u(t) = 0, so every
// increment stack is defined from the first step on.
class HistoryWindow {
 public:
  HistoryWindow(int outputs, int inputs, int start_k = 1);

  void push_output(const VectorXd& y);
  void push_input(const VectorXd& u);
  // Overwrites an already recorded sample.
  void set_input(int t, const VectorXd& u);

  // Drops samples so that at most `capacity` outputs/inputs are retained.
  // 0 keeps everything.
  void set_capacity(std::size_t capacity);

  int outputs() const { return outputs_; }
  int inputs() const { return inputs_; }
  int start() const { return start_; }
  // Index of the newest output sample, start-1 when empty.
  int k() const { return start_ + static_cast<int>(trimmed_y_ + y_.size()) - 1; }
  // Index of the newest input sample, start-1 when empty.
  int last_input_k() const { return start_ + static_cast<int>(trimmed_u_ + u_.size()) - 1; }

  VectorXd y(int t) const;
  VectorXd u(int t) const;
  VectorXd delta_y(int t) const { return y(t) - y(t - 1); }
  VectorXd delta_u(int t) const { return u(t) - u(t - 1); }

  // [dy(t); ...; dy(t-count+1)]
  VectorXd delta_y_stack(int t, int count) const;
  // [du(t); ...; du(t-count+1)]
  VectorXd delta_u_stack(int t, int count) const;
  // dH(t) for the given pseudo orders.
  VectorXd delta_h(int t, int output_order, int input_order) const;

 private:
  int outputs_;
  int inputs_;
  int start_;
  std::size_t capacity_ = 0;
  std::size_t trimmed_y_ = 0;
  std::size_t trimmed_u_ = 0;
  std::optional<VectorXd> first_y_;
  std::deque<VectorXd> y_;
  std::deque<VectorXd> u_;
};

// Input/output delay structure d_ij >= 1. Reported only; no control path
// reads it.
struct DelayMatrix {
  Eigen::MatrixXi steps;
};

// dH(k) at the newest index of `hist`; requires u(k) to be recorded.
VectorXd build_delta_h(const HistoryWindow& hist, int output_order, int input_order);

// y(k+1) = y(k) + [phi_y | phi_u] dH(k).
VectorXd edlm_step(const Pjm& pjm, const VectorXd& delta_h, const VectorXd& y_k);

class PlantModel;
class PlantDef;

// Stacked true Jacobians of the plant map, evaluated at the arguments of
// f(varphi(k-1)) taken from `hist` at its newest index k. The linearization
// remainder terms are taken as zero.
Pjm analytic_pjm(const PlantModel& plant, const HistoryWindow& hist);
Pjm analytic_pjm(const PlantDef& plant, const HistoryWindow& hist);

}  // namespace mfapc
