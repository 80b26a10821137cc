// Brute-force checks of the two-grid cycle: the linear error-propagation
// matrix and the terminal convergence order of the Delta-corrected solver.

#include "chaos_mgrit/mgrit.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <vector>

namespace cm = chaos_mgrit;

namespace {

using V1 = cm::State<1>;

struct LinearTwoGrid {
  static constexpr std::size_t kSteps = 16;
  cm::LinearScalarSystem sys{-1.0};
  cm::MgritConfig cfg;
  double t_final = 1.6;

  explicit LinearTwoGrid(bool theta) {
    cfg.num_levels = 2;
    cfg.use_theta = theta;
  }

  cm::Mgrit<cm::LinearScalarSystem> solver() const {
    return {sys, cfg, cm::TimeHierarchy(2, 2, t_final, kSteps), V1(1.0)};
  }

  Eigen::VectorXd cycle(const Eigen::VectorXd& v) const {
    auto s = solver();
    std::vector<V1> x(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) x[i] = V1(v[i]);
    s.set_fine_solution(x);
    s.v_cycle();
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = s.level(0).v[i][0];
    return out;
  }

  // Columns are cycle(e_j) - cycle(0): the cycle is affine in v.
  Eigen::MatrixXd iteration_matrix() const {
    const Eigen::Index n = kSteps + 1;
    const Eigen::VectorXd base = cycle(Eigen::VectorXd::Zero(n));
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index j = 0; j < n; ++j) m.col(j) = cycle(Eigen::VectorXd::Unit(n, j)) - base;
    return m;
  }

  Eigen::VectorXd exact() const {
    Eigen::VectorXd u(kSteps + 1);
    u[0] = 1.0;
    const double h = t_final / kSteps;
    for (std::size_t i = 0; i < kSteps; ++i) u[i + 1] = u[i] * (1.0 - h);
    return u;
  }
};

}  // namespace

TEST(LinearIterationMatrix, ReproducesTheCycle) {
  for (bool theta : {false, true}) {
    const LinearTwoGrid p(theta);
    const Eigen::MatrixXd m = p.iteration_matrix();
    const Eigen::VectorXd base = p.cycle(Eigen::VectorXd::Zero(m.rows()));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d;
    for (int k = 0; k < 5; ++k) {
      Eigen::VectorXd v(m.rows());
      for (auto& x : v) x = d(rng);
      EXPECT_LE((p.cycle(v) - (m * v + base)).cwiseAbs().maxCoeff(), 1e-13);
    }
  }
}

TEST(LinearIterationMatrix, ExactSolutionIsItsFixedPoint) {
  const LinearTwoGrid p(false);
  const Eigen::VectorXd u = p.exact();
  EXPECT_LE((p.cycle(u) - u).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LinearIterationMatrix, SpectralRadiusBelowOneAndNilpotent) {
  for (bool theta : {false, true}) {
    const LinearTwoGrid p(theta);
    const Eigen::MatrixXd m = p.iteration_matrix();
    const double rho = m.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_LT(rho, 1.0);
    // Error propagation at C-points is strictly lower triangular, so the
    // two-grid cycle terminates after at most n_t / m + 1 iterations.
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m.rows(), m.cols());
    for (std::size_t k = 0; k <= LinearTwoGrid::kSteps / 2; ++k) power = m * power;
    EXPECT_LE(power.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LinearIterationMatrix, ObservedErrorContractionIsBoundedByTheMatrix) {
  for (bool theta : {false, true}) {
    const LinearTwoGrid p(theta);
    const Eigen::MatrixXd m = p.iteration_matrix();
    const double norm2 = m.operatorNorm();
    const Eigen::VectorXd u = p.exact();
    auto s = p.solver();
    s.set_initial_guess();
    Eigen::VectorXd v(u.size());
    auto error = [&] {
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = s.level(0).v[i][0];
      return v - u;
    };
    Eigen::VectorXd e = error();
    for (int k = 0; k < 5; ++k) {
      s.v_cycle();
      const Eigen::VectorXd next = error();
      EXPECT_LE((next - m * e).cwiseAbs().maxCoeff(), 1e-13);
      EXPECT_LE(next.norm(), norm2 * e.norm() + 1e-14);
      e = next;
    }
  }
}

TEST(LinearIterationMatrix, SolverTerminatesWithinNilpotencyIndex) {
  for (bool theta : {false, true}) {
    const LinearTwoGrid p(theta);
    auto s = p.solver();
    const auto rep = s.solve();
    EXPECT_EQ(rep.status, cm::SolveStatus::Converged);
    EXPECT_LE(rep.iterations, static_cast<int>(LinearTwoGrid::kSteps / 2 + 1));
  }
}

// The last reduction that starts below 1e-2 and ends above the rounding
// floor (1e-11 here) must satisfy r_{k+1} <= r_k^1.5. Earlier pairs below
// 1e-2 may still be in a plateau (the basin is reached late), and later
// pairs only measure rounding, so neither is used.
TEST(DeltaCorrection, TerminalConvergenceIsSuperlinear) {
  const cm::LorenzSystem sys;
  int checked = 0;
  for (double tf : {2.0, 4.0, 6.0, 8.0}) {
    for (bool theta : {false, true}) {
      cm::MgritConfig c;
      c.use_delta = true;
      c.use_theta = theta;
      const auto n = static_cast<std::size_t>(2048 * tf);
      const auto res = cm::solve(sys, c, cm::State<3>(1, 1, 1), tf * std::log(10.0) / 0.9, n);
      ASSERT_EQ(res.report.status, cm::SolveStatus::Converged);
      const auto& h = res.report.residual_history;
      double exponent = NAN;
      for (std::size_t k = 0; k + 1 < h.size(); ++k)
        if (h[k] < 1e-2 && h[k + 1] > 1e-11) exponent = std::log(h[k + 1]) / std::log(h[k]);
      if (std::isnan(exponent)) continue;
      ++checked;
      EXPECT_GE(exponent, 1.5) << "tf=" << tf << " theta=" << theta;
    }
  }
  EXPECT_GE(checked, 6);
}

TEST(DeltaCorrection, FittedOrderOnTheLongHorizon) {
  const cm::LorenzSystem sys;
  cm::MgritConfig c;
  c.use_delta = c.use_theta = true;
  const auto res = cm::solve(sys, c, cm::State<3>(1, 1, 1), 8.0 * std::log(10.0) / 0.9, 8192);
  ASSERT_EQ(res.report.status, cm::SolveStatus::Converged);
  EXPECT_GE(cm::testing::fitted_order(res.report.residual_history, 3), 1.5);
}

TEST(FittedOrder, RecoversKnownOrders) {
  const std::vector<double> quad{1e-1, 1e-2, 1e-4, 1e-8};
  EXPECT_NEAR(cm::testing::fitted_order(quad, 2), 2.0, 1e-12);
  const std::vector<double> lin{1.0, 0.5, 0.25, 0.125};
  EXPECT_NEAR(cm::testing::fitted_order(lin, 3), 1.0, 1e-12);
}
