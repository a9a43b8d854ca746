#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

#include "mfapc/edlm.h"

namespace mfapc {

struct StandardVariant {};

// Replaces the integrator term with K_I e + K_P (e - e_prev). Gains are either
// M_y x M_y generators (expanded block-diagonally over the horizon) or full
// N*M_y square matrices.
struct PiVariant {
  MatrixXd kp;
  MatrixXd ki;
};

// Re-linearizes along the predicted trajectory before applying u(k).
struct IterativeVariant {
  int max_iters = 3;
};

using ControllerVariant = std::variant<StandardVariant, PiVariant, IterativeVariant>;

// How y*(k+1..k+N) is supplied: the true future reference, or y*(k+1) held.
enum class PreviewMode { kPreview, kHold };

// What to do when lambda = 0 leaves the normal matrix singular: return the
// minimum-norm least-squares solution (the lambda -> 0+ limit) or throw.
enum class SingularPolicy { kMinimumNorm, kRaise };

struct ControllerConfig {
  Dims dims;
  int horizon = 1;          // N
  int control_horizon = 1;  // N_u
  // Either one value (expanded to lambda * I) or the N_u*M_u diagonal.
  VectorXd lambda = VectorXd::Zero(1);
  ControllerVariant variant = StandardVariant{};
  PreviewMode preview = PreviewMode::kPreview;
  SingularPolicy singular = SingularPolicy::kMinimumNorm;

  // Throws ConfigError on bad horizons, weights or gain sizes.
  void validate() const;
  VectorXd lambda_diagonal() const;
  int decision_size() const { return control_horizon * dims.inputs; }
  int prediction_size() const { return horizon * dims.outputs; }
};

ControllerConfig with_scalar_lambda(ControllerConfig cfg, double lambda);

std::string variant_name(const ControllerVariant& v);

}  // namespace mfapc
