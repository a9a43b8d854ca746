#include "mfapc/edlm.h"

#include <string>

#include "mfapc/errors.h"

namespace mfapc {

namespace {

std::string SizeText(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace

void Dims::validate() const {
  if (outputs < 1 || inputs < 1) {
    throw StructuralError("output and input dimensions must be >= 1");
  }
  if (output_order < 0 || input_order < 1) {
    throw StructuralError("pseudo orders require L_y >= 0 and L_u >= 1");
  }
}

Pjm::Pjm(const Dims& dims, MatrixXd phi_y, MatrixXd phi_u)
    : dims_(dims), phi_y_(std::move(phi_y)), phi_u_(std::move(phi_u)) {
  dims_.validate();
  if (phi_y_.rows() != dims_.outputs || phi_y_.cols() != dims_.output_width()) {
    throw StructuralError("phi_y is " + SizeText(phi_y_.rows(), phi_y_.cols()) + ", expected " +
                          SizeText(dims_.outputs, dims_.output_width()));
  }
  if (phi_u_.rows() != dims_.outputs || phi_u_.cols() != dims_.input_width()) {
    throw StructuralError("phi_u is " + SizeText(phi_u_.rows(), phi_u_.cols()) + ", expected " +
                          SizeText(dims_.outputs, dims_.input_width()));
  }
  if (!phi_y_.allFinite() || !phi_u_.allFinite()) {
    throw StructuralError("pseudo-Jacobian has non-finite entries");
  }
}

Pjm Pjm::Zero(const Dims& dims) { return Constant(dims, 0.0); }

Pjm Pjm::Constant(const Dims& dims, double value) {
  dims.validate();
  return Pjm(dims, MatrixXd::Constant(dims.outputs, dims.output_width(), value),
             MatrixXd::Constant(dims.outputs, dims.input_width(), value));
}

Pjm Pjm::FromStacked(const Dims& dims, const MatrixXd& stacked) {
  dims.validate();
  if (stacked.rows() != dims.outputs || stacked.cols() != dims.regressor_size()) {
    throw StructuralError("stacked pseudo-Jacobian is " + SizeText(stacked.rows(), stacked.cols()) +
                          ", expected " + SizeText(dims.outputs, dims.regressor_size()));
  }
  return Pjm(dims, stacked.leftCols(dims.output_width()), stacked.rightCols(dims.input_width()));
}

MatrixXd Pjm::stacked() const {
  MatrixXd out(dims_.outputs, dims_.regressor_size());
  out << phi_y_, phi_u_;
  return out;
}

MatrixXd Pjm::block(int i) const {
  const int ly = dims_.output_order;
  if (i < 1 || i > ly + dims_.input_order) {
    throw StructuralError("block index " + std::to_string(i) + " out of range");
  }
  if (i <= ly) return phi_y_.middleCols((i - 1) * dims_.outputs, dims_.outputs);
  return phi_u_.middleCols((i - ly - 1) * dims_.inputs, dims_.inputs);
}

void Pjm::set_block(int i, const MatrixXd& value) {
  const int ly = dims_.output_order;
  if (i < 1 || i > ly + dims_.input_order) {
    throw StructuralError("block index " + std::to_string(i) + " out of range");
  }
  const int width = i <= ly ? dims_.outputs : dims_.inputs;
  if (value.rows() != dims_.outputs || value.cols() != width) {
    throw StructuralError("block " + std::to_string(i) + " has wrong size " +
                          SizeText(value.rows(), value.cols()));
  }
  if (i <= ly) {
    phi_y_.middleCols((i - 1) * dims_.outputs, dims_.outputs) = value;
  } else {
    phi_u_.middleCols((i - ly - 1) * dims_.inputs, dims_.inputs) = value;
  }
}

Pjm Pjm::WithOrders(int output_order, int input_order) const {
  if (output_order < dims_.output_order || input_order < dims_.input_order) {
    throw ConfigError("pseudo orders (" + std::to_string(output_order) + ", " +
                      std::to_string(input_order) + ") are below the plant's (" +
                      std::to_string(dims_.output_order) + ", " +
                      std::to_string(dims_.input_order) + ")");
  }
  Dims d = dims_;
  d.output_order = output_order;
  d.input_order = input_order;
  Pjm out = Zero(d);
  out.phi_y_.leftCols(dims_.output_width()) = phi_y_;
  out.phi_u_.leftCols(dims_.input_width()) = phi_u_;
  return out;
}

bool Pjm::operator==(const Pjm& other) const {
  return dims_ == other.dims_ && phi_y_ == other.phi_y_ && phi_u_ == other.phi_u_;
}

HistoryWindow::HistoryWindow(int outputs, int inputs, int start_k)
    : outputs_(outputs), inputs_(inputs), start_(start_k) {
  if (outputs < 1 || inputs < 1) {
    throw StructuralError("history dimensions must be >= 1");
  }
}

void HistoryWindow::push_output(const VectorXd& y) {
  if (y.size() != outputs_) {
    throw StructuralError("output sample has " + std::to_string(y.size()) +
                          " entries, expected " + std::to_string(outputs_));
  }
  if (!first_y_) first_y_ = y;
  y_.push_back(y);
  if (capacity_ != 0 && y_.size() > capacity_) {
    y_.pop_front();
    ++trimmed_y_;
  }
}

void HistoryWindow::push_input(const VectorXd& u) {
  if (u.size() != inputs_) {
    throw StructuralError("input sample has " + std::to_string(u.size()) + " entries, expected " +
                          std::to_string(inputs_));
  }
  u_.push_back(u);
  if (capacity_ != 0 && u_.size() > capacity_) {
    u_.pop_front();
    ++trimmed_u_;
  }
}

void HistoryWindow::set_input(int t, const VectorXd& u) {
  if (u.size() != inputs_) throw StructuralError("input sample has wrong size");
  const long idx = static_cast<long>(t) - start_ - static_cast<long>(trimmed_u_);
  if (idx < 0 || idx >= static_cast<long>(u_.size())) {
    throw StructuralError("input u(" + std::to_string(t) + ") is not in the window");
  }
  u_[static_cast<std::size_t>(idx)] = u;
}

void HistoryWindow::set_capacity(std::size_t capacity) {
  capacity_ = capacity;
  if (capacity_ == 0) return;
  while (y_.size() > capacity_) {
    y_.pop_front();
    ++trimmed_y_;
  }
  while (u_.size() > capacity_) {
    u_.pop_front();
    ++trimmed_u_;
  }
}

VectorXd HistoryWindow::y(int t) const {
  if (!first_y_) throw StructuralError("history holds no output samples");
  if (t < start_) return *first_y_;
  const long idx = static_cast<long>(t) - start_ - static_cast<long>(trimmed_y_);
  if (idx < 0) throw StructuralError("output y(" + std::to_string(t) + ") was trimmed");
  if (idx >= static_cast<long>(y_.size())) {
    throw StructuralError("output y(" + std::to_string(t) + ") is not recorded yet");
  }
  return y_[static_cast<std::size_t>(idx)];
}

VectorXd HistoryWindow::u(int t) const {
  if (t < start_) return VectorXd::Zero(inputs_);
  const long idx = static_cast<long>(t) - start_ - static_cast<long>(trimmed_u_);
  if (idx < 0) throw StructuralError("input u(" + std::to_string(t) + ") was trimmed");
  if (idx >= static_cast<long>(u_.size())) {
    throw StructuralError("input u(" + std::to_string(t) + ") is not recorded yet");
  }
  return u_[static_cast<std::size_t>(idx)];
}

VectorXd HistoryWindow::delta_y_stack(int t, int count) const {
  VectorXd out(static_cast<Eigen::Index>(count) * outputs_);
  for (int i = 0; i < count; ++i) out.segment(i * outputs_, outputs_) = delta_y(t - i);
  return out;
}

VectorXd HistoryWindow::delta_u_stack(int t, int count) const {
  VectorXd out(static_cast<Eigen::Index>(count) * inputs_);
  for (int i = 0; i < count; ++i) out.segment(i * inputs_, inputs_) = delta_u(t - i);
  return out;
}

VectorXd HistoryWindow::delta_h(int t, int output_order, int input_order) const {
  if (output_order < 0 || input_order < 1) {
    throw StructuralError("pseudo orders require L_y >= 0 and L_u >= 1");
  }
  VectorXd out(static_cast<Eigen::Index>(output_order) * outputs_ +
               static_cast<Eigen::Index>(input_order) * inputs_);
  out << delta_y_stack(t, output_order), delta_u_stack(t, input_order);
  return out;
}

VectorXd build_delta_h(const HistoryWindow& hist, int output_order, int input_order) {
  return hist.delta_h(hist.k(), output_order, input_order);
}

VectorXd edlm_step(const Pjm& pjm, const VectorXd& delta_h, const VectorXd& y_k) {
  const Dims& d = pjm.dims();
  if (delta_h.size() != d.regressor_size()) {
    throw StructuralError("dH has " + std::to_string(delta_h.size()) + " entries, expected " +
                          std::to_string(d.regressor_size()));
  }
  if (y_k.size() != d.outputs) {
    throw StructuralError("y(k) has " + std::to_string(y_k.size()) + " entries, expected " +
                          std::to_string(d.outputs));
  }
  return y_k + pjm.phi_y() * delta_h.head(d.output_width()) +
         pjm.phi_u() * delta_h.tail(d.input_width());
}

}  // namespace mfapc
