#include "mfapc/plants.h"

#include <cmath>
#include <limits>

#include "mfapc/errors.h"

namespace mfapc {

Pjm PlantModel::derivative(const HistoryWindow&, int) const {
  throw UnsupportedError("plant '" + name() + "' has no analytic Jacobian");
}

LinearPlantModel::LinearPlantModel(std::string name, std::vector<MatrixXd> output_coeffs,
                                   std::vector<MatrixXd> input_coeffs,
                                   std::optional<DelayMatrix> delays)
    : name_(std::move(name)),
      a_(std::move(output_coeffs)),
      b_(std::move(input_coeffs)),
      delays_(std::move(delays)) {
  if (b_.empty()) throw ConfigError("linear plant needs at least one input coefficient");
  outputs_ = static_cast<int>(b_.front().rows());
  inputs_ = static_cast<int>(b_.front().cols());
  for (const auto& a : a_) {
    if (a.rows() != outputs_ || a.cols() != outputs_) {
      throw ConfigError("output coefficient matrices must be square M_y x M_y");
    }
  }
  for (const auto& b : b_) {
    if (b.rows() != outputs_ || b.cols() != inputs_) {
      throw ConfigError("input coefficient matrices must all be M_y x M_u");
    }
  }
}

VectorXd LinearPlantModel::evaluate(const HistoryWindow& hist, int t) const {
  VectorXd y = VectorXd::Zero(outputs_);
  for (std::size_t i = 0; i < a_.size(); ++i) y += a_[i] * hist.y(t - static_cast<int>(i));
  for (std::size_t j = 0; j < b_.size(); ++j) y += b_[j] * hist.u(t - static_cast<int>(j));
  return y;
}

Pjm LinearPlantModel::derivative(const HistoryWindow&, int) const {
  Pjm out = Pjm::Zero(natural_dims());
  int block = 1;
  for (const auto& a : a_) out.set_block(block++, a);
  for (const auto& b : b_) out.set_block(block++, b);
  return out;
}

VectorXd NonlinearEx2Model::evaluate(const HistoryWindow& hist, int t) const {
  const VectorXd y = hist.y(t);
  const VectorXd u = hist.u(t);
  const VectorXd u_prev = hist.u(t - 1);
  const double y1 = y(0), y2 = y(1), u1 = u(0), u2 = u(1);

  VectorXd next(2);
  next(0) = -0.1 * y1 * y1 * y1 + 0.1 * y2 * y2 + 0.7 * u_prev(0) + 0.5 * u_prev(1) +
            0.2 * u1 * u1 * u1 + std::cos(u1 * u1) + 0.1 * u2 * u2 * u2 +
            0.5 * std::sin(u2 * u2);
  next(1) = -0.1 * y1 * y1 + 0.2 * y2 * y2 * y2 + 0.6 * u_prev(0) + 0.8 * u_prev(1) +
            0.1 * u1 * u1 * u1 * u1 + 0.2 * std::sin(u1) + 0.1 * u2 * u2 + 0.9 * u2;
  return next;
}

Pjm NonlinearEx2Model::derivative(const HistoryWindow& hist, int t) const {
  const VectorXd y = hist.y(t);
  const VectorXd u = hist.u(t);
  const double y1 = y(0), y2 = y(1), u1 = u(0), u2 = u(1);

  MatrixXd dy(2, 2);
  dy << -0.3 * y1 * y1, 0.2 * y2,
        -0.2 * y1, 0.6 * y2 * y2;
  MatrixXd du(2, 2);
  du << 0.6 * u1 * u1 - 2.0 * u1 * std::sin(u1 * u1), 0.3 * u2 * u2 + u2 * std::cos(u2 * u2),
        0.4 * u1 * u1 * u1 + 0.2 * std::cos(u1), 0.2 * u2 + 0.9;
  MatrixXd du_prev(2, 2);
  du_prev << 0.7, 0.5,
             0.6, 0.8;

  Pjm out = Pjm::Zero(natural_dims());
  out.set_block(1, dy);
  out.set_block(2, du);
  out.set_block(3, du_prev);
  return out;
}

std::shared_ptr<const LinearPlantModel> make_ex11_model() {
  MatrixXd a0(2, 2), b0(2, 2), b1(2, 2);
  a0 << -1.0, 2.0,
        -1.0, 1.4;
  b0 << 1.3, 0.0,
        1.0, 0.0;
  b1 << 0.7, 0.5,
        0.6, 0.8;
  DelayMatrix d;
  d.steps.resize(2, 2);
  d.steps << 1, 2,
             1, 2;
  return std::make_shared<LinearPlantModel>("ex11", std::vector<MatrixXd>{a0},
                                            std::vector<MatrixXd>{b0, b1}, d);
}

std::shared_ptr<const LinearPlantModel> make_ex12_model() {
  MatrixXd a0(2, 2), b1(2, 3);
  a0 << -1.0, 1.0,
        -1.0, 1.0;
  b1 << 0.7, 0.2, 0.4,
        0.6, 0.8, 0.4;
  DelayMatrix d;
  d.steps = Eigen::MatrixXi::Constant(2, 3, 2);
  return std::make_shared<LinearPlantModel>("ex12", std::vector<MatrixXd>{a0},
                                            std::vector<MatrixXd>{MatrixXd::Zero(2, 3), b1}, d);
}

std::shared_ptr<const NonlinearEx2Model> make_ex2_model() {
  return std::make_shared<NonlinearEx2Model>();
}

Pjm analytic_pjm(const PlantModel& plant, const HistoryWindow& hist) {
  return plant.derivative(hist, hist.k() - 1);
}

Pjm analytic_pjm(const PlantDef& plant, const HistoryWindow& hist) {
  return analytic_pjm(plant.model(), hist);
}

PlantDef::PlantDef(std::shared_ptr<const PlantModel> model, int start_k)
    : model_(std::move(model)), hist_(model_->outputs(), model_->inputs(), start_k) {}

void PlantDef::seed(const std::vector<VectorXd>& outputs, const std::vector<VectorXd>& inputs) {
  for (const auto& y : outputs) hist_.push_output(y);
  for (const auto& u : inputs) hist_.push_input(u);
}

void PlantDef::set_disturbance(const VectorXd& w, int start_k) {
  if (w.size() != model_->outputs()) {
    throw StructuralError("disturbance has " + std::to_string(w.size()) + " entries, expected " +
                          std::to_string(model_->outputs()));
  }
  disturbance_ = w;
  disturbance_start_ = start_k;
}

VectorXd plant_step(PlantDef& p, const VectorXd& u_k) {
  const int k = p.hist_.k();
  if (p.hist_.last_input_k() != k - 1) {
    throw StructuralError("plant expects u(" + std::to_string(k) + ") next");
  }
  p.hist_.push_input(u_k);
  VectorXd next = p.model_->evaluate(p.hist_, k);
  if (p.disturbance_ && k + 1 >= p.disturbance_start_) next += *p.disturbance_;
  p.hist_.push_output(next);
  return next;
}

int ReferenceDef::outputs() const {
  if (const auto* sq = std::get_if<SquareWaveReference>(&kind)) return sq->outputs;
  if (std::holds_alternative<MixedEx2Reference>(kind)) return 2;
  const auto& table = std::get<ReferenceTable>(kind);
  return table.entries.empty() ? 0 : static_cast<int>(table.entries.front().second.size());
}

std::string ReferenceDef::name() const {
  if (std::holds_alternative<SquareWaveReference>(kind)) return "square";
  if (std::holds_alternative<MixedEx2Reference>(kind)) return "mixed_ex2";
  return "table";
}

namespace {

double SquareSign(double k, double period) {
  return std::fmod(std::round(k / period), 2.0) == 0.0 ? 1.0 : -1.0;
}

// Identifies the piece of the reference active at k.
long SegmentKey(const ReferenceDef& r, int k) {
  if (const auto* sq = std::get_if<SquareWaveReference>(&r.kind)) {
    return static_cast<long>(std::round(k / sq->period));
  }
  if (std::holds_alternative<MixedEx2Reference>(r.kind)) {
    return k <= 400 ? std::numeric_limits<long>::min() : static_cast<long>(std::round(k / 50.0));
  }
  const auto& entries = std::get<ReferenceTable>(r.kind).entries;
  long active = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].first <= k) active = static_cast<long>(i);
  }
  return active;
}

}  // namespace

VectorXd reference(const ReferenceDef& r, int k) {
  if (const auto* sq = std::get_if<SquareWaveReference>(&r.kind)) {
    return VectorXd::Constant(sq->outputs, sq->amplitude * SquareSign(k, sq->period));
  }
  if (std::holds_alternative<MixedEx2Reference>(r.kind)) {
    VectorXd out(2);
    if (k <= 400) {
      const double kd = k;
      out(0) = 5.0 * std::sin(kd / 40.0) + 2.0 * std::cos(kd / 20.0);
      out(1) = 2.0 * std::sin(kd / 10.0) + 5.0 * std::sin(kd / 30.0);
    } else {
      out.setConstant(SquareSign(k, 50.0));
    }
    return out;
  }
  const auto& entries = std::get<ReferenceTable>(r.kind).entries;
  if (entries.empty()) throw ConfigError("reference table is empty");
  return entries[static_cast<std::size_t>(SegmentKey(r, k))].second;
}

VectorXd reference_preview(const ReferenceDef& r, int k, int horizon) {
  const int m = r.outputs();
  VectorXd out(static_cast<Eigen::Index>(horizon) * m);
  for (int i = 0; i < horizon; ++i) out.segment(i * m, m) = reference(r, k + 1 + i);
  return out;
}

std::vector<std::pair<int, int>> reference_segments(const ReferenceDef& r, int k_first,
                                                    int k_last) {
  std::vector<std::pair<int, int>> out;
  if (k_last < k_first) return out;
  int begin = k_first;
  long key = SegmentKey(r, k_first);
  for (int k = k_first + 1; k <= k_last; ++k) {
    const long next = SegmentKey(r, k);
    if (next != key) {
      out.emplace_back(begin, k - 1);
      begin = k;
      key = next;
    }
  }
  out.emplace_back(begin, k_last);
  return out;
}

}  // namespace mfapc
