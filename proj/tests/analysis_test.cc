#include <algorithm>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "mfapc/analysis.h"
#include "mfapc/config.h"
#include "mfapc/errors.h"
#include "mfapc/harness.h"
#include "mfapc/plants.h"
#include "mfapc/polynomial.h"

namespace mfapc {
namespace {

using cd = std::complex<double>;

std::vector<cd> Sorted(std::vector<cd> r) {
  std::sort(r.begin(), r.end(), [](cd a, cd b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return r;
}

// Every root of `a` has a partner in `b` within tol, and the counts agree.
void ExpectSameRoots(const std::vector<cd>& a, const std::vector<cd>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  std::vector<bool> used(b.size(), false);
  for (cd x : a) {
    std::size_t best = b.size();
    double dist = tol;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!used[j] && std::abs(x - b[j]) <= dist) {
        dist = std::abs(x - b[j]);
        best = j;
      }
    }
    ASSERT_LT(best, b.size()) << "no partner for " << x;
    used[best] = true;
  }
}

Pjm Ex11Pjm() {
  PlantDef p(make_ex11_model());
  p.seed({VectorXd::Zero(2)}, {});
  return analytic_pjm(p, p.history());
}

ControllerConfig Ex11Controller(double lambda) {
  return with_scalar_lambda(builtin_config("ex11").controller, lambda);
}

PolyMatrix RandomPolyMatrix(int n, int degree, std::mt19937& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<MatrixXd> c;
  for (int i = 0; i <= degree; ++i) {
    MatrixXd m(n, n);
    for (int r = 0; r < n; ++r)
      for (int s = 0; s < n; ++s) m(r, s) = d(rng);
    c.push_back(m);
  }
  return PolyMatrix(n, n, c);
}

TEST(Polynomial, ArithmeticAndEvaluation) {
  const Polynomial a({1.0, 2.0});
  const Polynomial b({-1.0, 0.0, 3.0});
  const Polynomial p = a * b;
  EXPECT_EQ(p.coeffs(), (std::vector<double>{-1.0, -2.0, 3.0, 6.0}));
  EXPECT_EQ((a - a).degree(), -1);
  EXPECT_EQ(a.shifted(2).coeffs(), (std::vector<double>{0.0, 0.0, 1.0, 2.0}));
  const cd w(0.3, -0.7);
  EXPECT_LE(std::abs(p.evaluate(w) - a.evaluate(w) * b.evaluate(w)), 1e-14);
}

TEST(Determinant, MatchesPointEvaluation) {
  std::mt19937 rng(1);
  for (int n = 1; n <= 4; ++n) {
    const PolyMatrix m = RandomPolyMatrix(n, 2, rng);
    const Polynomial det = determinant(m);
    for (cd w : {cd(0.4, 0.1), cd(-1.2, 0.5), cd(2.0, 0.0)}) {
      const cd direct = m.evaluate(w).determinant();
      EXPECT_LE(std::abs(det.evaluate(w) - direct), 1e-10 * (1.0 + std::abs(direct))) << n;
    }
  }
}

TEST(Determinant, AdjugateIdentity) {
  std::mt19937 rng(2);
  const PolyMatrix m = RandomPolyMatrix(3, 1, rng);
  const PolyMatrix prod = m * adjugate(m);
  const Polynomial det = determinant(m);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Polynomial expected = i == j ? det : Polynomial();
      const Polynomial diff = prod.entry(i, j) - expected;
      for (double c : diff.coeffs()) EXPECT_NEAR(c, 0.0, 1e-10);
    }
  }
}

TEST(Poles, DifferenceOperatorHasUnitRoots) {
  const PoleReport r = poles(PolyMatrix::Scalar(Polynomial::Difference(), 2));
  ASSERT_EQ(r.roots.size(), 2u);
  for (cd z : r.roots) EXPECT_LE(std::abs(z - 1.0), 1e-12);
  EXPECT_FALSE(r.stable());
}

TEST(Poles, FirstOrderLag) {
  const PoleReport r = poles(PolyMatrix::Scalar(Polynomial({1.0, -0.5}), 2));
  ASSERT_EQ(r.roots.size(), 2u);
  for (cd z : r.roots) EXPECT_LE(std::abs(z - 0.5), 1e-12);
  EXPECT_NEAR(r.max_modulus, 0.5, 1e-12);
  EXPECT_TRUE(r.stable());
}

TEST(Poles, CompanionRootsOfKnownPolynomial) {
  // (1 - 0.5w)(1 + 0.25w)(1 - 0.9w + 0.81w^2 * 0): roots 0.5, -0.25
  const Polynomial p = Polynomial({1.0, -0.5}) * Polynomial({1.0, 0.25});
  ExpectSameRoots(Sorted(roots_in_z(p)), Sorted({cd(-0.25, 0.0), cd(0.5, 0.0)}), 1e-12);
  // Roots at infinity are dropped: w * (1 - 0.5 w) has a single finite root in z.
  EXPECT_EQ(roots_in_z(Polynomial({0.0, 1.0, -0.5})).size(), 1u);
}

TEST(Poles, InvariantUnderScaling) {
  std::mt19937 rng(3);
  const PolyMatrix t = RandomPolyMatrix(2, 2, rng);
  ExpectSameRoots(Sorted(poles(t).roots), Sorted(poles(t * -3.7).roots), 1e-8);
}

TEST(Poles, ProductIsUnionOfFactors) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const PolyMatrix a = RandomPolyMatrix(2, 1, rng);
    const PolyMatrix b = RandomPolyMatrix(2, 1, rng);
    std::vector<cd> both = poles(a).roots;
    const std::vector<cd> rb = poles(b).roots;
    both.insert(both.end(), rb.begin(), rb.end());
    ExpectSameRoots(Sorted(poles(a * b).roots), Sorted(both), 1e-6);
  }
}

TEST(Poles, IdenticallyZeroDeterminantIsDegenerate) {
  PolyMatrix m(2, 2);
  m.set_entry(0, 0, Polynomial({1.0, 2.0}));
  m.set_entry(0, 1, Polynomial({1.0, 2.0}));
  m.set_entry(1, 0, Polynomial({3.0}));
  m.set_entry(1, 1, Polynomial({3.0}));
  EXPECT_THROW(poles(m), DegenerateError);
}

TEST(ClosedLoop, ZeroPjmIsPureIntegrator) {
  const ControllerConfig cfg = Ex11Controller(0.1);
  const ClosedLoop loop = closed_loop_T(Pjm::Zero(cfg.dims), cfg);
  const PoleReport r = poles(loop);
  ASSERT_FALSE(r.roots.empty());
  for (cd z : r.roots) EXPECT_LE(std::abs(z - 1.0), 1e-9);
  for (const auto& c : poles(loop.T).roots) EXPECT_LE(std::abs(c - 1.0), 1e-9);
  EXPECT_THROW(steady_state_error(Pjm::Zero(cfg.dims), cfg, ReferenceKind::kStep),
               PreconditionError);
}

TEST(ClosedLoop, ScalarOneStepHandFormula) {
  for (double phi : {0.5, 2.0, -1.3}) {
    for (double lambda : {0.0, 0.1, 4.0}) {
      ControllerConfig cfg;
      cfg.dims = Dims{1, 1, 0, 1};
      cfg.lambda = VectorXd::Constant(1, lambda);
      const Pjm pjm(cfg.dims, MatrixXd(1, 0), MatrixXd::Constant(1, 1, phi));
      const ClosedLoop loop = closed_loop_T(pjm, cfg);
      // T = 1 - w + w phi^2 / (phi^2 + lambda)
      const double g = phi * phi / (phi * phi + lambda);
      ASSERT_EQ(loop.T.rows(), 1);
      const Polynomial t = loop.T.entry(0, 0);
      EXPECT_NEAR(t[0], 1.0, 1e-14);
      EXPECT_NEAR(t[1], -1.0 + g, 1e-14);
      EXPECT_EQ(t.degree(), lambda == 0.0 ? 0 : 1);
      const PoleReport r = poles(loop);
      if (lambda > 0.0) {
        ASSERT_EQ(r.roots.size(), 1u);
        EXPECT_NEAR(r.roots[0].real(), 1.0 - g, 1e-12);
      }
    }
  }
}

TEST(ClosedLoop, Example11IsStable) {
  const PoleReport r = poles(closed_loop_T(Ex11Pjm(), Ex11Controller(1e-4)));
  EXPECT_LT(r.max_modulus, 1.0);
  EXPECT_FALSE(r.roots.empty());
}

TEST(SteadyState, ZeroLambdaStepErrorVanishes) {
  const SteadyStateError e =
      steady_state_error(Ex11Pjm(), Ex11Controller(0.0), ReferenceKind::kStep);
  EXPECT_LE(e.value.lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_TRUE(e.converged);
}

// Step reference from k = 1, EDLM == plant for ex11.
SimTrace StepRun(double lambda, const VectorXd& level, int steps) {
  ExperimentConfig cfg = builtin_config("ex11");
  cfg.controller = with_scalar_lambda(cfg.controller, lambda);
  cfg.reference.kind = "table";
  cfg.reference.table.entries = {{1, level}};
  cfg.run.steps = steps;
  return run_experiment(cfg);
}

TEST(SteadyState, Example11MatchesLongSimulation) {
  const VectorXd level = VectorXd::Constant(2, 3.0);
  const SteadyStateError e =
      steady_state_error(Ex11Pjm(), Ex11Controller(1e-4), ReferenceKind::kStep, level);
  EXPECT_LE(e.value.lpNorm<Eigen::Infinity>(), 1e-3);
  const SimTrace t = StepRun(1e-4, level, 498);
  EXPECT_LE((t.rows.back().e - e.value).lpNorm<Eigen::Infinity>(), 1e-3);
}

TEST(SteadyState, AnalysisAgreesWithSimulationOverLambdaGrid) {
  const VectorXd level = VectorXd::Constant(2, 3.0);
  const Pjm pjm = Ex11Pjm();
  for (double lambda : {0.0, 1e-4, 1e-2, 1.0, 100.0}) {
    const ControllerConfig cfg = Ex11Controller(lambda);
    const PoleReport r = poles(closed_loop_T(pjm, cfg));
    const SimTrace t = StepRun(lambda, level, 498);
    // Decay of the error over the tail follows the dominant pole.
    double early = 0.0, late = 0.0;
    for (std::size_t i = 300; i < 350; ++i) early = std::max(early, (t.rows[i].e - t.rows.back().e).norm());
    for (std::size_t i = 446; i < t.rows.size(); ++i) late = std::max(late, t.rows[i].e.norm());
    EXPECT_TRUE(r.stable()) << lambda;
    EXPECT_TRUE(std::isfinite(late)) << lambda;
    const SteadyStateError e = steady_state_error(pjm, cfg, ReferenceKind::kStep, level);
    // Remaining transient after k = 500 is at most |pole|^500 times the start.
    const double transient = 10.0 * std::pow(r.max_modulus, 450.0) * level.norm();
    EXPECT_LE((t.rows.back().e - e.value).lpNorm<Eigen::Infinity>(), 1e-3 + transient)
        << "lambda " << lambda << " max pole " << r.max_modulus;
  }
}

// An integrator gain of 3 overshoots the near-deadbeat loop.
TEST(SteadyState, UnstableDesignIsDetectedByBothViews) {
  ControllerConfig cfg = Ex11Controller(1e-4);
  cfg.variant = PiVariant{MatrixXd::Zero(2, 2), 3.0 * MatrixXd::Identity(2, 2)};
  const PoleReport r = poles(closed_loop_T(Ex11Pjm(), cfg));
  EXPECT_GT(r.max_modulus, 1.0);
  EXPECT_THROW(steady_state_error(Ex11Pjm(), cfg, ReferenceKind::kStep), PreconditionError);

  ExperimentConfig ex = builtin_config("ex11");
  ex.controller = cfg;
  ex.run.steps = 498;
  bool diverged = false;
  try {
    diverged = run_experiment(ex).rows.back().e.norm() > 1e3;
  } catch (const DivergenceError&) {
    diverged = true;
  }
  EXPECT_TRUE(diverged);
}

TEST(SteadyState, RampWithIntegralActionIsFiniteOrFlagged) {
  const SteadyStateError e =
      steady_state_error(Ex11Pjm(), Ex11Controller(1e-2), ReferenceKind::kRamp);
  if (!e.diverges) {
    EXPECT_TRUE(e.value.allFinite());
  } else {
    EXPECT_TRUE(std::isinf(e.value(0)));
  }
}

}  // namespace
}  // namespace mfapc
