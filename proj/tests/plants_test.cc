#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mfapc/errors.h"
#include "mfapc/plants.h"

namespace mfapc {
namespace {

VectorXd Vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Seeds y(1) = y_k, u(1) = u_prev, then applies u(2) = u_k.
VectorXd OneStep(std::shared_ptr<const PlantModel> m, const VectorXd& y_k, const VectorXd& u_prev,
                 const VectorXd& u_k) {
  PlantDef p(std::move(m), 1);
  p.seed({y_k, y_k}, {u_prev});
  return plant_step(p, u_k);
}

TEST(PlantStep, Ex11ZeroEquilibrium) {
  PlantDef p(make_ex11_model());
  p.seed({Vec({0, 0})}, {});
  EXPECT_EQ(plant_step(p, Vec({0, 0})), Vec({0, 0}));
}

TEST(PlantStep, Ex11HandEvaluated) {
  const VectorXd y = OneStep(make_ex11_model(), Vec({1, 1}), Vec({0, 0}), Vec({1, 0}));
  EXPECT_NEAR(y(0), 2.3, 1e-15);
  EXPECT_NEAR(y(1), 1.4, 1e-15);
}

TEST(PlantStep, Ex2AtZero) {
  PlantDef p(make_ex2_model());
  p.seed({Vec({0, 0})}, {});
  EXPECT_EQ(plant_step(p, Vec({0, 0})), Vec({1, 0}));
}

TEST(PlantStep, Ex2DirectFormula) {
  const double y1 = 0.4, y2 = -0.7, u1 = 0.9, u2 = -1.3, p1 = 0.2, p2 = 0.5;
  const VectorXd y = OneStep(make_ex2_model(), Vec({y1, y2}), Vec({p1, p2}), Vec({u1, u2}));
  const double r1 = -0.1 * std::pow(y1, 3) + 0.1 * y2 * y2 + 0.7 * p1 + 0.5 * p2 +
                    0.2 * std::pow(u1, 3) + std::cos(u1 * u1) + 0.1 * std::pow(u2, 3) +
                    0.5 * std::sin(u2 * u2);
  const double r2 = -0.1 * y1 * y1 + 0.2 * std::pow(y2, 3) + 0.6 * p1 + 0.8 * p2 +
                    0.1 * std::pow(u1, 4) + 0.2 * std::sin(u1) + 0.1 * u2 * u2 + 0.9 * u2;
  EXPECT_NEAR(y(0), r1, 1e-14);
  EXPECT_NEAR(y(1), r2, 1e-14);
}

TEST(PlantStep, RequiresInputsInOrder) {
  PlantDef p(make_ex11_model());
  p.seed({Vec({0, 0}), Vec({0, 0})}, {});
  EXPECT_THROW(plant_step(p, Vec({0, 0})), StructuralError);
}

TEST(PlantStep, LinearSuperposition) {
  std::mt19937 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto model = make_ex12_model();
  PlantDef a(model), b(model), ab(model);
  for (auto* p : {&a, &b, &ab}) p->seed({Vec({0, 0})}, {});
  for (int k = 0; k < 40; ++k) {
    const VectorXd ua = Vec({n(rng), n(rng), n(rng)});
    const VectorXd ub = Vec({n(rng), n(rng), n(rng)});
    const VectorXd ya = plant_step(a, ua);
    const VectorXd yb = plant_step(b, ub);
    const VectorXd yab = plant_step(ab, ua + ub);
    EXPECT_LE((yab - ya - yb).norm(), 1e-12 * (1.0 + yab.norm()));
  }
}

TEST(PlantStep, DisturbanceIsAdditiveAndReferenceFree) {
  const auto model = make_ex11_model();
  PlantDef clean(model), loaded(model);
  clean.seed({Vec({0, 0})}, {});
  loaded.seed({Vec({0, 0})}, {});
  loaded.set_disturbance(Vec({5, 10}), 2);
  std::mt19937 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<VectorXd> diff;
  for (int k = 0; k < 20; ++k) {
    const VectorXd u = Vec({n(rng), n(rng)});
    diff.push_back(plant_step(loaded, u) - plant_step(clean, u));
  }
  // A second input sequence yields the same difference trajectory.
  PlantDef clean2(model), loaded2(model);
  clean2.seed({Vec({0, 0})}, {});
  loaded2.seed({Vec({0, 0})}, {});
  loaded2.set_disturbance(Vec({5, 10}), 2);
  for (int k = 0; k < 20; ++k) {
    const VectorXd u = Vec({3.0 * k, -1.0});
    const VectorXd d = plant_step(loaded2, u) - plant_step(clean2, u);
    EXPECT_LE((d - diff[static_cast<std::size_t>(k)]).norm(), 1e-9 * (1.0 + d.norm()));
  }
  EXPECT_EQ(diff.front(), Vec({5, 10}));
}

TEST(PlantStep, DisturbanceSizeChecked) {
  PlantDef p(make_ex11_model());
  EXPECT_THROW(p.set_disturbance(Vec({1, 2, 3}), 1), StructuralError);
}

TEST(AnalyticPjm, Ex11IsConstantTruePjm) {
  const auto model = make_ex11_model();
  PlantDef p(model);
  p.seed({Vec({0, 0})}, {});
  std::mt19937 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  const Pjm first = analytic_pjm(p, p.history());
  for (int k = 0; k < 10; ++k) {
    plant_step(p, Vec({n(rng), n(rng)}));
    EXPECT_EQ(analytic_pjm(p, p.history()), first);
  }
  EXPECT_EQ(first.block(1), model->output_coeffs()[0]);
  EXPECT_EQ(first.block(2), model->input_coeffs()[0]);
  EXPECT_EQ(first.block(3), model->input_coeffs()[1]);
}

TEST(AnalyticPjm, Ex12LeadingInputBlockIsExactlyZero) {
  PlantDef p(make_ex12_model());
  p.seed({Vec({0.3, -2})}, {});
  EXPECT_TRUE(analytic_pjm(p, p.history()).leading_input_block().isZero(0.0));
}

TEST(AnalyticPjm, Ex2AtZero) {
  PlantDef p(make_ex2_model());
  p.seed({Vec({0, 0}), Vec({0, 0})}, {Vec({0, 0})});
  const Pjm pjm = analytic_pjm(p, p.history());
  EXPECT_TRUE(pjm.block(1).isZero(0.0));
  EXPECT_EQ(pjm.block(2), (MatrixXd(2, 2) << 0, 0, 0.2, 0.9).finished());
  EXPECT_EQ(pjm.block(3), (MatrixXd(2, 2) << 0.7, 0.5, 0.6, 0.8).finished());
}

TEST(AnalyticPjm, Ex2MatchesCentralDifferences) {
  const auto model = make_ex2_model();
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> point = {dist(rng), dist(rng), dist(rng),
                                       dist(rng), dist(rng), dist(rng)};
    // Arguments of f: y(t), u(t), u(t-1) with t = 2.
    const auto f = [&](const std::vector<double>& x) {
      HistoryWindow w(2, 2, 1);
      w.push_output(Vec({x[0], x[1]}));
      w.push_output(Vec({x[0], x[1]}));
      w.push_input(Vec({x[4], x[5]}));
      w.push_input(Vec({x[2], x[3]}));
      return model->evaluate(w, 2);
    };
    HistoryWindow w(2, 2, 1);
    w.push_output(Vec({point[0], point[1]}));
    w.push_output(Vec({point[0], point[1]}));
    w.push_input(Vec({point[4], point[5]}));
    w.push_input(Vec({point[2], point[3]}));
    const MatrixXd jac = model->derivative(w, 2).stacked();
    for (int j = 0; j < 6; ++j) {
      std::vector<double> plus = point, minus = point;
      plus[static_cast<std::size_t>(j)] += h;
      minus[static_cast<std::size_t>(j)] -= h;
      const VectorXd fd = (f(plus) - f(minus)) / (2.0 * h);
      for (int r = 0; r < 2; ++r) EXPECT_NEAR(jac(r, j), fd(r), 1e-6) << "column " << j;
    }
  }
}

TEST(AnalyticPjm, DeterministicForIdenticalHistories) {
  PlantDef a(make_ex2_model()), b(make_ex2_model());
  for (auto* p : {&a, &b}) {
    p->seed({Vec({0.1, 0.2})}, {});
    plant_step(*p, Vec({0.3, -0.4}));
    plant_step(*p, Vec({0.5, 0.1}));
  }
  EXPECT_EQ(analytic_pjm(a, a.history()), analytic_pjm(b, b.history()));
}

TEST(Reference, SquareWaveRounding) {
  const ReferenceDef r{SquareWaveReference{}};
  EXPECT_EQ(reference(r, 1), Vec({3, 3}));
  EXPECT_EQ(reference(r, 24), Vec({3, 3}));
  EXPECT_EQ(reference(r, 25), Vec({-3, -3}));  // round(0.5) = 1
  EXPECT_EQ(reference(r, 26), Vec({-3, -3}));
  EXPECT_EQ(reference(r, 75), Vec({3, 3}));
}

TEST(Reference, MixedEx2Boundary) {
  const ReferenceDef r{MixedEx2Reference{}};
  const VectorXd at400 = reference(r, 400);
  EXPECT_NEAR(at400(0), 5.0 * std::sin(10.0) + 2.0 * std::cos(20.0), 1e-15);
  EXPECT_NEAR(at400(1), 2.0 * std::sin(40.0) + 5.0 * std::sin(400.0 / 30.0), 1e-15);
  EXPECT_EQ(reference(r, 401), Vec({1, 1}));  // round(8.02) = 8
  EXPECT_EQ(reference(r, 425), Vec({-1, -1}));
}

TEST(Reference, PreviewStacksFutureValues) {
  const ReferenceDef r{SquareWaveReference{}};
  EXPECT_EQ(reference_preview(r, 23, 3), Vec({3, 3, -3, -3, -3, -3}));
}

TEST(Reference, TableHoldsFromEachStart) {
  ReferenceTable t;
  t.entries = {{1, Vec({0.5})}, {10, Vec({-1})}};
  const ReferenceDef r{t};
  EXPECT_EQ(reference(r, 9), Vec({0.5}));
  EXPECT_EQ(reference(r, 10), Vec({-1}));
  EXPECT_EQ(reference_segments(r, 3, 20).size(), 2u);
}

TEST(Reference, SegmentsOfSquareWave) {
  const ReferenceDef r{SquareWaveReference{}};
  const auto segs = reference_segments(r, 3, 300);
  ASSERT_EQ(segs.size(), 7u);
  EXPECT_EQ(segs[0], std::make_pair(3, 24));
  EXPECT_EQ(segs[1], std::make_pair(25, 74));
  EXPECT_EQ(segs.back(), std::make_pair(275, 300));
}

}  // namespace
}  // namespace mfapc
