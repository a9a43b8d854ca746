#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mfapc/controller.h"
#include "mfapc/errors.h"
#include "mfapc/plants.h"
#include "mfapc/predictor.h"

namespace mfapc {
namespace {

MatrixXd Random(int rows, int cols, std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

Pjm RandomPjm(const Dims& d, std::mt19937& rng, double scale = 0.5) {
  return Pjm(d, scale * Random(d.outputs, d.output_order * d.outputs, rng),
             scale * Random(d.outputs, d.input_order * d.inputs, rng));
}

// y(1..steps) and u(1..steps-1): ready for a decision at k = steps.
HistoryWindow RandomHistory(const Dims& d, int steps, std::mt19937& rng) {
  HistoryWindow h(d.outputs, d.inputs);
  for (int t = 1; t <= steps; ++t) {
    h.push_output(Random(d.outputs, 1, rng));
    if (t < steps) h.push_input(Random(d.inputs, 1, rng));
  }
  return h;
}

// Applies u(k+j) = u(k+j-1) + du_j and steps the EDLM with pjms[j].
VectorXd IteratedEdlm(const std::vector<Pjm>& pjms, HistoryWindow h, const VectorXd& du,
                      int control_horizon) {
  const Dims& d = pjms.front().dims();
  const int n = static_cast<int>(pjms.size());
  VectorXd out(n * d.outputs);
  VectorXd u = h.u(h.k() - 1);
  for (int j = 0; j < n; ++j) {
    if (j < control_horizon) u += du.segment(j * d.inputs, d.inputs);
    h.push_input(u);
    const VectorXd y = edlm_step(pjms[static_cast<std::size_t>(j)],
                                 build_delta_h(h, d.output_order, d.input_order), h.y(h.k()));
    h.push_output(y);
    out.segment(j * d.outputs, d.outputs) = y;
  }
  return out;
}

VectorXd PredictFrom(const PredictionOperators& ops, const HistoryWindow& h, const VectorXd& du) {
  const PastIncrements p = summarize(h, ops.dims);
  return predict(ops, p.y_k, p.d_y, p.d_u_prev, du);
}

double RelErr(const VectorXd& a, const VectorXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

double MaxAbs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

MatrixXd Power(const MatrixXd& m, int p) {
  MatrixXd r = MatrixXd::Identity(m.rows(), m.cols());
  for (int i = 0; i < p; ++i) r = r * m;
  return r;
}

TEST(ShiftOperators, InputShiftIsNilpotent) {
  const ShiftOperators s = build_shift_operators(Dims{2, 2, 1, 2}, 2);
  MatrixXd expected = MatrixXd::Zero(4, 4);
  expected.block(2, 0, 2, 2).setIdentity();
  EXPECT_EQ(s.A, expected);
  EXPECT_TRUE((s.A * s.A).isZero(0.0));
}

TEST(ShiftOperators, NilpotencyForSeveralOrders) {
  for (int ly = 1; ly <= 3; ++ly) {
    for (int lu = 1; lu <= 4; ++lu) {
      const ShiftOperators s = build_shift_operators(Dims{2, 3, ly, lu}, 3);
      EXPECT_TRUE(Power(s.A, lu).isZero(0.0));
      EXPECT_TRUE(Power(s.C, ly).isZero(0.0));
      if (lu > 1) EXPECT_FALSE(Power(s.A, lu - 1).isZero(0.0));
    }
  }
}

TEST(ShiftOperators, HorizonSumAndStack) {
  const ShiftOperators s = build_shift_operators(Dims{2, 2, 1, 2}, 2);
  MatrixXd an(4, 4);
  an << 1, 0, 0, 0,
        0, 1, 0, 0,
        1, 0, 1, 0,
        0, 1, 0, 1;
  EXPECT_EQ(s.A_N, an);
  const VectorXd v = (VectorXd(2) << 3, -4).finished();
  EXPECT_EQ(s.E * v, (VectorXd(4) << 3, -4, 3, -4).finished());
  EXPECT_EQ(s.B, (MatrixXd(4, 2) << 1, 0, 0, 1, 0, 0, 0, 0).finished());
}

TEST(ShiftOperators, ZeroOutputOrderGivesEmptyBlocks) {
  const ShiftOperators s = build_shift_operators(Dims{2, 2, 0, 2}, 3);
  EXPECT_EQ(s.C.size(), 0);
  EXPECT_EQ(s.D.rows(), 0);
}

TEST(PredictionOperators, SingleStepIsLeadingInputBlock) {
  std::mt19937 rng(1);
  for (int ly = 0; ly <= 2; ++ly) {
    const Pjm p = RandomPjm(Dims{2, 3, ly, 2}, rng);
    const PredictionOperators ops = build_prediction_operators(p, 1, 1);
    EXPECT_EQ(ops.psi_nu_tilde, p.leading_input_block());
  }
}

TEST(PredictionOperators, PrefixSumRelation) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Dims d{2, 2, trial % 3, 1 + trial % 3};
    const int n = 1 + trial % 5;
    const PredictionOperators ops = build_prediction_operators(RandomPjm(d, rng), n, n);
    const MatrixXd an = build_shift_operators(d, n).A_N;
    EXPECT_LE(MaxAbs(ops.psi_y_tilde - an * ops.psi_y), 1e-14);
    EXPECT_LE(MaxAbs(ops.psi_u_tilde - an * ops.psi_u), 1e-14);
    EXPECT_LE(MaxAbs(ops.psi_n_tilde - an * ops.psi_n), 1e-14);
  }
}

// Row recursions written out with explicit matrix powers.
TEST(PredictionOperators, RowRecursionOracle) {
  std::mt19937 rng(3);
  const Dims d{2, 2, 1, 2};
  const int n = 3;
  const Pjm pjm = RandomPjm(d, rng);
  const ShiftOperators s = build_shift_operators(d, n);
  const MatrixXd& py = pjm.phi_y();
  const MatrixXd& pu = pjm.phi_u();
  std::vector<MatrixXd> phi1, phi2;
  std::vector<std::vector<MatrixXd>> psi(n + 1, std::vector<MatrixXd>(n + 1));
  for (int j = 1; j <= n; ++j) {
    MatrixXd a = py * Power(s.C, j - 1);
    MatrixXd b = pu * Power(s.A, j);
    for (int i = 0; i <= j - 2; ++i) {
      a += py * Power(s.C, i) * s.D * phi1[static_cast<std::size_t>(j - 2 - i)];
      b += py * Power(s.C, i) * s.D * phi2[static_cast<std::size_t>(j - 2 - i)];
    }
    phi1.push_back(a);
    phi2.push_back(b);
    for (int l = 1; l <= j; ++l) {
      MatrixXd c = pu * Power(s.A, j - l) * s.B;
      for (int i = 0; i <= j - l - 1; ++i) c += py * Power(s.C, i) * s.D * psi[j - 1 - i][l];
      psi[j][l] = c;
    }
  }
  const PredictionOperators ops = build_prediction_operators(pjm, n, n);
  for (int j = 1; j <= n; ++j) {
    const int r = (j - 1) * d.outputs;
    EXPECT_LE((ops.psi_y.middleRows(r, 2) - phi1[static_cast<std::size_t>(j - 1)]).norm(), 1e-14);
    EXPECT_LE((ops.psi_u.middleRows(r, 2) - phi2[static_cast<std::size_t>(j - 1)]).norm(), 1e-14);
    for (int l = 1; l <= n; ++l) {
      const MatrixXd blk = ops.psi_n.block(r, (l - 1) * d.inputs, 2, 2);
      if (l <= j) {
        EXPECT_LE((blk - psi[j][l]).norm(), 1e-14);
      } else {
        EXPECT_TRUE(blk.isZero(0.0));
      }
    }
  }
}

TEST(PredictionOperators, ControlHorizonBlockLowerTriangular) {
  std::mt19937 rng(4);
  const Dims d{2, 3, 2, 3};
  const PredictionOperators ops = build_prediction_operators(RandomPjm(d, rng), 5, 4);
  ASSERT_EQ(ops.psi_nu_tilde.cols(), 4 * 3);
  EXPECT_EQ(ops.psi_nu_tilde, ops.psi_n_tilde.leftCols(12));
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 4; ++j)
      EXPECT_TRUE(ops.psi_nu_tilde.block(i * 2, j * 3, 2, 3).isZero(0.0));
}

TEST(PredictionOperators, LastInputBlockColumnOfPsiUIsZero) {
  std::mt19937 rng(5);
  for (int lu = 2; lu <= 4; ++lu) {
    const Dims d{2, 2, 1, lu};
    const PredictionOperators ops = build_prediction_operators(RandomPjm(d, rng), 4, 2);
    EXPECT_TRUE(ops.psi_u.rightCols(d.inputs).isZero(0.0)) << "Lu = " << lu;
  }
}

TEST(PredictionOperators, HorizonViolationsAreConfigErrors) {
  const Pjm p = Pjm::Constant(Dims{2, 2, 1, 2}, 0.1);
  EXPECT_THROW(build_prediction_operators(p, 2, 3), ConfigError);
  EXPECT_THROW(build_prediction_operators(p, 0, 0), ConfigError);
  EXPECT_THROW(build_prediction_operators(p, 2, 0), ConfigError);
}

TEST(PredictionOperators, TimeVaryingConstantSequenceIsBitIdentical) {
  std::mt19937 rng(6);
  const Pjm p = RandomPjm(Dims{2, 2, 2, 3}, rng);
  const std::vector<Pjm> seq(4, p);
  const PredictionOperators a = build_prediction_operators(p, 4, 3);
  const PredictionOperators b = build_prediction_operators_tv(seq, 4, 3);
  EXPECT_EQ(a.psi_y_tilde, b.psi_y_tilde);
  EXPECT_EQ(a.psi_u_tilde, b.psi_u_tilde);
  EXPECT_EQ(a.psi_nu_tilde, b.psi_nu_tilde);
}

TEST(PredictionOperators, TimeVaryingRejectsMixedDims) {
  const std::vector<Pjm> seq = {Pjm::Zero(Dims{2, 2, 1, 2}), Pjm::Zero(Dims{2, 2, 1, 1})};
  EXPECT_THROW(build_prediction_operators_tv(seq, 2, 2), StructuralError);
  EXPECT_THROW(build_prediction_operators_tv(std::span<const Pjm>(seq.data(), 1), 2, 2),
               StructuralError);
}

// N = 2, Ly = 1, Lu = 1: second row of ~Psi_Nu by hand,
// y(k+2) - y(k+1) = phi_y(k+1) dy(k+1) + phi_u(k+1) du(k+1)
// with dy(k+1) = phi_u(k) du(k) + ...
TEST(PredictionOperators, TimeVaryingSecondRowHandExpansion) {
  std::mt19937 rng(7);
  const Dims d{2, 2, 1, 1};
  const Pjm p0 = RandomPjm(d, rng);
  const Pjm p1(d, 2.0 * p0.phi_y(), 2.0 * p0.phi_u());
  const std::vector<Pjm> seq = {p0, p1};
  const PredictionOperators ops = build_prediction_operators_tv(seq, 2, 2);
  const MatrixXd psi21 = p1.phi_y() * p0.phi_u();
  const MatrixXd psi22 = p1.phi_u();
  EXPECT_LE((ops.psi_n.block(2, 0, 2, 2) - psi21).norm(), 1e-14);
  EXPECT_LE((ops.psi_n.block(2, 2, 2, 2) - psi22).norm(), 1e-14);
  EXPECT_LE((ops.psi_y.block(2, 0, 2, 2) - p1.phi_y() * p0.phi_y()).norm(), 1e-14);
}

TEST(Predict, ZeroIncrementsHoldOutput) {
  const Pjm p = Pjm::Constant(Dims{2, 2, 1, 2}, 0.3);
  const PredictionOperators ops = build_prediction_operators(p, 3, 2);
  const VectorXd y = (VectorXd(2) << 1.5, -0.5).finished();
  const VectorXd out = predict(ops, y, VectorXd::Zero(2), VectorXd::Zero(4), VectorXd::Zero(4));
  EXPECT_EQ(out, stack_outputs(y, 3));
}

TEST(Predict, RejectsWrongSizes) {
  const PredictionOperators ops = build_prediction_operators(Pjm::Zero(Dims{2, 2, 1, 2}), 2, 2);
  EXPECT_THROW(predict(ops, VectorXd::Zero(2), VectorXd::Zero(3), VectorXd::Zero(4),
                       VectorXd::Zero(4)),
               StructuralError);
  EXPECT_THROW(predict(ops, VectorXd::Zero(2), VectorXd::Zero(2), VectorXd::Zero(4),
                       VectorXd::Zero(2)),
               StructuralError);
}

TEST(Predict, Example11MatchesIteratedEdlm) {
  std::mt19937 rng(8);
  const Dims d{2, 2, 1, 2};
  PlantDef plant(make_ex11_model());
  plant.seed({VectorXd::Zero(2)}, {});
  const Pjm pjm = analytic_pjm(plant, plant.history());
  const HistoryWindow h = RandomHistory(d, 6, rng);
  for (int n : {2, 4}) {
    const VectorXd du = Random(n * 2, 1, rng);
    const PredictionOperators ops = build_prediction_operators(pjm, n, n);
    const std::vector<Pjm> seq(static_cast<std::size_t>(n), pjm);
    EXPECT_LE(RelErr(PredictFrom(ops, h, du), IteratedEdlm(seq, h, du, n)), 1e-12);
  }
}

TEST(Predict, RandomFrozenPjmsMatchIteratedEdlm) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Dims d{2, 2, trial % 3, 1 + (trial / 3) % 3};
    const int n = 1 + trial % 8;
    const int nu = 1 + trial % n;
    const Pjm pjm = RandomPjm(d, rng);
    const HistoryWindow h = RandomHistory(d, 6, rng);
    const VectorXd du = Random(nu * 2, 1, rng);
    const PredictionOperators ops = build_prediction_operators(pjm, n, nu);
    const std::vector<Pjm> seq(static_cast<std::size_t>(n), pjm);
    EXPECT_LE(RelErr(PredictFrom(ops, h, du), IteratedEdlm(seq, h, du, nu)), 1e-12)
        << "trial " << trial;
  }
}

TEST(Predict, RandomTimeVaryingPjmsMatchIteratedEdlm) {
  std::mt19937 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Dims d{2, 3, trial % 3, 1 + trial % 3};
    const int n = 1 + trial % 6;
    std::vector<Pjm> seq;
    for (int i = 0; i < n; ++i) seq.push_back(RandomPjm(d, rng));
    const HistoryWindow h = RandomHistory(d, 6, rng);
    const VectorXd du = Random(n * 3, 1, rng);
    const PredictionOperators ops = build_prediction_operators_tv(seq, n, n);
    EXPECT_LE(RelErr(PredictFrom(ops, h, du), IteratedEdlm(seq, h, du, n)), 1e-12)
        << "trial " << trial;
  }
}

TEST(Predict, Example2AnalyticPjmsAlongTrajectory) {
  std::mt19937 rng(11);
  const auto model = make_ex2_model();
  PlantDef plant(model);
  plant.seed({VectorXd::Zero(2), VectorXd::Zero(2)}, {VectorXd::Zero(2)});
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 5; ++t) plant_step(plant, (VectorXd(2) << u(rng), u(rng)).finished());
  // Future inputs, then PJMs read off the simulated trajectory.
  const int n = 3;
  const VectorXd du = 0.2 * Random(n * 2, 1, rng);
  PlantDef future = plant;
  std::vector<Pjm> seq;
  VectorXd input = plant.history().u(plant.k() - 1);
  for (int j = 0; j < n; ++j) {
    input += du.segment(j * 2, 2);
    HistoryWindow probe = future.history();
    probe.push_input(input);
    seq.push_back(model->derivative(probe, future.k()));
    plant_step(future, input);
  }
  const PredictionOperators ops = build_prediction_operators_tv(seq, n, n);
  EXPECT_LE(RelErr(PredictFrom(ops, plant.history(), du), IteratedEdlm(seq, plant.history(), du, n)),
            1e-12);
}

TEST(Predict, ControlHorizonTruncation) {
  std::mt19937 rng(12);
  const Dims d{2, 2, 1, 2};
  const Pjm pjm = RandomPjm(d, rng);
  const HistoryWindow h = RandomHistory(d, 5, rng);
  const VectorXd du1 = Random(2, 1, rng);
  VectorXd padded = VectorXd::Zero(8);
  padded.head(2) = du1;
  const VectorXd a = PredictFrom(build_prediction_operators(pjm, 4, 1), h, du1);
  const VectorXd b = PredictFrom(build_prediction_operators(pjm, 4, 4), h, padded);
  EXPECT_LE((a - b).norm(), 1e-14 * (1.0 + a.norm()));
}

}  // namespace
}  // namespace mfapc
