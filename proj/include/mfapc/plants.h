#pragma once

// Benchmark plants, reference trajectories and the stateful plant simulator.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mfapc/edlm.h"

namespace mfapc {

// y(k+1) = f(y(k), ..., y(k-n_y), u(k), ..., u(k-n_u)).
class PlantModel {
 public:
  virtual ~PlantModel() = default;

  virtual std::string name() const = 0;
  virtual int outputs() const = 0;
  virtual int inputs() const = 0;
  // n_y + 1 and n_u + 1: the pseudo orders for which the analytic PJM is exact.
  virtual int output_lags() const = 0;
  virtual int input_lags() const = 0;

  // f(varphi(t)) with samples read from `hist` (padding rules apply).
  virtual VectorXd evaluate(const HistoryWindow& hist, int t) const = 0;

  virtual bool has_jacobian() const { return false; }
  // Partial derivatives of f at varphi(t), laid out as a Pjm with orders
  // (output_lags, input_lags). Throws UnsupportedError by default.
  virtual Pjm derivative(const HistoryWindow& hist, int t) const;

  virtual std::optional<DelayMatrix> delays() const { return std::nullopt; }

  Dims natural_dims() const { return {outputs(), inputs(), output_lags(), input_lags()}; }
};

// y(k+1) = sum_i A_i y(k-i) + sum_j B_j u(k-j).
class LinearPlantModel : public PlantModel {
 public:
  LinearPlantModel(std::string name, std::vector<MatrixXd> output_coeffs,
                   std::vector<MatrixXd> input_coeffs,
                   std::optional<DelayMatrix> delays = std::nullopt);

  std::string name() const override { return name_; }
  int outputs() const override { return outputs_; }
  int inputs() const override { return inputs_; }
  int output_lags() const override { return static_cast<int>(a_.size()); }
  int input_lags() const override { return static_cast<int>(b_.size()); }

  VectorXd evaluate(const HistoryWindow& hist, int t) const override;
  bool has_jacobian() const override { return true; }
  Pjm derivative(const HistoryWindow& hist, int t) const override;
  std::optional<DelayMatrix> delays() const override { return delays_; }

  const std::vector<MatrixXd>& output_coeffs() const { return a_; }
  const std::vector<MatrixXd>& input_coeffs() const { return b_; }

 private:
  std::string name_;
  int outputs_;
  int inputs_;
  std::vector<MatrixXd> a_;
  std::vector<MatrixXd> b_;
  std::optional<DelayMatrix> delays_;
};

// Two-input two-output plant with cubic output terms and trigonometric input
// terms; depends on y(k), u(k) and u(k-1).
class NonlinearEx2Model : public PlantModel {
 public:
  std::string name() const override { return "ex2"; }
  int outputs() const override { return 2; }
  int inputs() const override { return 2; }
  int output_lags() const override { return 1; }
  int input_lags() const override { return 2; }

  VectorXd evaluate(const HistoryWindow& hist, int t) const override;
  bool has_jacobian() const override { return true; }
  Pjm derivative(const HistoryWindow& hist, int t) const override;
};

std::shared_ptr<const LinearPlantModel> make_ex11_model();
std::shared_ptr<const LinearPlantModel> make_ex12_model();
std::shared_ptr<const NonlinearEx2Model> make_ex2_model();

// Stateful simulator: a model, its recorded samples, and an optional constant
// output disturbance added to y(k+1) from `disturbance_start` on.
class PlantDef {
 public:
  PlantDef(std::shared_ptr<const PlantModel> model, int start_k = 1);

  // Seeds outputs y(start), y(start+1), ... and inputs u(start), ...
  void seed(const std::vector<VectorXd>& outputs, const std::vector<VectorXd>& inputs);
  void set_disturbance(const VectorXd& w, int start_k);

  const PlantModel& model() const { return *model_; }
  std::shared_ptr<const PlantModel> model_ptr() const { return model_; }
  const HistoryWindow& history() const { return hist_; }
  int k() const { return hist_.k(); }
  VectorXd output() const { return hist_.y(hist_.k()); }

 private:
  friend VectorXd plant_step(PlantDef& p, const VectorXd& u_k);

  std::shared_ptr<const PlantModel> model_;
  HistoryWindow hist_;
  std::optional<VectorXd> disturbance_;
  int disturbance_start_ = 0;
};

// Records u(k), evaluates y(k+1) (plus the disturbance) and records it.
VectorXd plant_step(PlantDef& p, const VectorXd& u_k);

// Piecewise-constant user reference: each entry holds from its start index on.
struct ReferenceTable {
  std::vector<std::pair<int, VectorXd>> entries;
};

struct SquareWaveReference {
  double amplitude = 3.0;
  double period = 50.0;  // sign flips when round(k / period) changes
  int outputs = 2;
};

// Sinusoids for k <= 400, unit square wave afterwards.
struct MixedEx2Reference {};

struct ReferenceDef {
  std::variant<SquareWaveReference, MixedEx2Reference, ReferenceTable> kind;

  int outputs() const;
  std::string name() const;
};

// Half-away-from-zero rounding, as std::round.
VectorXd reference(const ReferenceDef& r, int k);

// Stacked [y*(k+1); ...; y*(k+horizon)].
VectorXd reference_preview(const ReferenceDef& r, int k, int horizon);

// Maximal index intervals [first, last] within [k_first, k_last] over which the
// reference follows one piece (constant level, sinusoid section, table row).
std::vector<std::pair<int, int>> reference_segments(const ReferenceDef& r, int k_first, int k_last);

}  // namespace mfapc
