#pragma once

// Closed-loop experiment runner. Each step k (from run.start_k on):
//
//   1. measure y(k)
//   2. estimated source, k > start_k: projection update on (y(k), y(k-1), dH(k-1))
//   3. obtain the PJM (analytic, estimate, or frozen) and build the operators
//   4. solve for u(k)
//   5. record the row for k
//   6. advance the plant to y(k+1)

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mfapc/controller_config.h"
#include "mfapc/edlm.h"
#include "mfapc/errors.h"
#include "mfapc/estimator.h"
#include "mfapc/plants.h"

namespace mfapc {

struct PlantSpec {
  std::string kind = "ex11";  // ex11 | ex12 | ex2 | linear | random
  // linear: y(k+1) = sum_i a[i] y(k-i) + sum_j b[j] u(k-j)
  std::vector<MatrixXd> a;
  std::vector<MatrixXd> b;
  // random: a stable random linear plant drawn from `seed`
  int outputs = 2;
  int inputs = 2;
  std::uint64_t seed = 0;

  std::optional<VectorXd> disturbance;
  int disturbance_start = 1;
  // Seed samples from k = 1 on.
  std::vector<VectorXd> y_init;
  std::vector<VectorXd> u_init;
};

enum class ControlLaw { kMfapc, kMfac };

enum class PjmSourceKind { kAnalytic, kEstimated, kFrozen };

struct PjmSource {
  PjmSourceKind kind = PjmSourceKind::kAnalytic;
  double eta = 1.5;
  double mu = 1.0;
  // Initial estimate; a 1x1 matrix fills every entry.
  MatrixXd init = MatrixXd::Constant(1, 1, 0.01);
  ResetPolicy reset = ResetOff{};
  ProjectionSolve solve = ProjectionSolve::kDirect;
  // Frozen: either a fixed matrix, or the estimate held from freeze_at on.
  std::optional<MatrixXd> matrix;
  std::optional<int> freeze_at;
};

struct ReferenceSpec {
  std::string kind = "square";  // square | mixed_ex2 | table
  double amplitude = 3.0;
  double period = 50.0;
  ReferenceTable table;
};

struct RunSpec {
  int steps = 298;
  int start_k = 3;
  bool analysis = false;
  double divergence_bound = 1e8;
};

struct ExperimentConfig {
  std::string name = "experiment";
  PlantSpec plant;
  ControlLaw law = ControlLaw::kMfapc;
  ControllerConfig controller;
  PjmSource pjm;
  ReferenceSpec reference;
  RunSpec run;

  // Throws ConfigError.
  void validate() const;
};

struct TraceRow {
  int k = 0;
  VectorXd y;
  VectorXd u;
  VectorXd y_star;
  VectorXd e;
  double cost = 0.0;
  VectorXd phi;  // stacked PJM, row-major
  std::optional<double> max_pole;
};

struct SimTrace {
  std::string name;
  int outputs = 0;
  int inputs = 0;
  std::vector<TraceRow> rows;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int step, SimTrace partial)
      : Error(what), step_(step), partial_(std::move(partial)) {}
  int step() const { return step_; }
  const SimTrace& partial() const { return partial_; }

 private:
  int step_;
  SimTrace partial_;
};

std::shared_ptr<const PlantModel> make_plant_model(const PlantSpec& spec);
ReferenceDef make_reference(const ReferenceSpec& spec, int outputs);

// Deterministic given cfg. Throws DivergenceError on a non-finite or
// out-of-bound output and SolverError (with the step in the message).
SimTrace run_experiment(const ExperimentConfig& cfg);

// The PJM the controller used at the last recorded step.
Pjm final_pjm(const SimTrace& trace, const Dims& dims);

void export_csv(const SimTrace& trace, const std::filesystem::path& path);
std::string format_csv(const SimTrace& trace);
SimTrace parse_csv(const std::string& text);

struct SegmentStats {
  int first = 0;
  int last = 0;
  double rms = 0.0;
  double steady = 0.0;  // mean of |e(k)|_inf over the last 10 steps
};

struct TraceSummary {
  std::vector<SegmentStats> segments;
  double rms = 0.0;
  double final_steady = 0.0;
  bool diverged = false;
  std::optional<int> diverged_at;
  std::optional<double> max_pole;
};

TraceSummary summarize_trace(const SimTrace& trace, const ReferenceDef& reference);
std::string format_summary(const TraceSummary& s);

struct SweepResult {
  double value = 0.0;
  std::string status;  // ok | diverged | solver error
  std::string detail;
  SimTrace trace;
  TraceSummary summary;
};

// Runs one experiment per lambda value on separate threads.
std::vector<SweepResult> sweep_lambda(const ExperimentConfig& base,
                                      const std::vector<double>& values);
std::string format_sweep_table(const std::vector<SweepResult>& results);

}  // namespace mfapc
