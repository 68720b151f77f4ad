#include <gtest/gtest.h>

#include <cmath>

#include "ncscale/generators.hpp"
#include "ncscale/ncrank.hpp"
#include "ncscale/random.hpp"
#include "ncscale/scaling_engine.hpp"

using namespace ncscale;

namespace {

MatrixTuple random_tuple(Rng& rng, int n, int m) {
  std::vector<ComplexMatrix> mats;
  for (int k = 0; k < m; ++k) mats.push_back(random_gaussian(rng, n, n));
  return MatrixTuple(std::move(mats));
}

void expect_monotone_f(const FlowTrace& t) {
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    EXPECT_LE(t.records[i].f_value, t.records[i - 1].f_value + 1e-12)
        << "step " << t.records[i].step;
  }
}

}  // namespace

TEST(FlowConfig, Validation) {
  FlowConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = FlowConfig{};
  c.mm_tau = -1;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = FlowConfig{};
  c.smoothing_p = 1.5;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(Sinkhorn, IdentityIsAlreadyScaled) {
  const FlowTrace t = run_sinkhorn(make_identity(3).tuple, FlowConfig{});
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_EQ(t.stop, StopReason::kConverged);
  EXPECT_EQ(t.records[0].residual_l1, 0.0);
}

TEST(Sinkhorn, RightMarginalExactAfterEachStep) {
  Rng rng(1);
  const MatrixTuple a = random_tuple(rng, 4, 3);
  FlowConfig cfg;
  cfg.max_iters = 30;
  cfg.tolerance = 0.0;
  const FlowTrace t = run_sinkhorn(a, cfg);
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    const ResidualReport r =
        residual(a, t.records[i].scaling, PermInvariantNorm::l1());
    EXPECT_LT(r.right, 1e-10);
    EXPECT_NEAR(r.left, r.sum, 1e-10);
  }
}

TEST(Sinkhorn, ConvergesOnScalableInstances) {
  Rng rng(2);
  for (int s = 0; s < 5; ++s) {
    const MatrixTuple a = random_tuple(rng, 3, 3);
    const FlowTrace t = run_sinkhorn(a, FlowConfig{});
    EXPECT_EQ(t.stop, StopReason::kConverged);
    EXPECT_LT(t.records.back().residual_l1, 1e-6);
  }
}

TEST(Sinkhorn, RequiresTwoSidedSupport) {
  EXPECT_THROW(run_sinkhorn(make_e1().tuple, FlowConfig{}), NotFullSupport);
}

TEST(Sinkhorn, RejectsOneSidedSupport) {
  // (E11, E21): rows span C^2 but only the first column is used.
  ComplexMatrix a1 = ComplexMatrix::Zero(2, 2);
  ComplexMatrix a2 = ComplexMatrix::Zero(2, 2);
  a1(0, 0) = 1.0;
  a2(1, 0) = 1.0;
  try {
    run_sinkhorn(MatrixTuple({a1, a2}), FlowConfig{});
    FAIL();
  } catch (const NotFullSupport& e) {
    EXPECT_EQ(e.left_rank(), 2);
    EXPECT_EQ(e.right_rank(), 1);
  }
}

TEST(GradientDescent, MonotoneAndConverging) {
  Rng rng(3);
  const MatrixTuple a = random_tuple(rng, 3, 3);
  FlowConfig cfg;
  cfg.step_size = 0.5;
  const FlowTrace t = run_gradient_descent(a, PDPoint::identity(3), cfg);
  expect_monotone_f(t);
  EXPECT_EQ(t.stop, StopReason::kConverged);
  EXPECT_LT(t.records.back().residual_l1, 1e-6);
}

TEST(MinimizingMovement, MonotoneAndConverging) {
  Rng rng(4);
  const MatrixTuple a = random_tuple(rng, 3, 2);
  FlowConfig cfg;
  cfg.max_iters = 300;
  const FlowTrace t = run_minimizing_movement(a, PDPoint::identity(3), cfg);
  expect_monotone_f(t);
  EXPECT_LT(t.best_by_residual().residual_l1, 1e-4);
}

TEST(E4Flows, LowerBoundNeverViolated) {
  const MatrixTuple a = make_e4().tuple;
  FlowConfig cfg;
  cfg.max_iters = 300;
  for (const FlowTrace& t :
       {run_gradient_descent(a, PDPoint::identity(3), cfg),
        run_minimizing_movement(a, PDPoint::identity(3), cfg),
        run_sinkhorn(a, cfg)}) {
    ASSERT_FALSE(t.records.empty());
    for (const auto& r : t.records) EXPECT_GE(r.residual_l1, 2.0 - 1e-8);
  }
}

TEST(E4Flows, CorankStopsAreGraceful) {
  const MatrixTuple a = make_e4().tuple;
  FlowConfig cfg;
  cfg.max_iters = 2000;
  const FlowTrace t = run_gradient_descent(a, PDPoint::identity(3), cfg);
  EXPECT_NE(t.stop, StopReason::kConverged);
  EXPECT_FALSE(t.message.empty());
  expect_monotone_f(t);
}

TEST(E4Flows, MinimizingMovementSlopeNonincreasing) {
  const MatrixTuple a = make_e4().tuple;
  FlowConfig cfg;
  cfg.max_iters = 500;
  const FlowTrace t = run_minimizing_movement(a, PDPoint::identity(3), cfg);
  expect_monotone_f(t);
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    EXPECT_LE(t.records[i].slope, t.records[i - 1].slope + 1e-3);
  }
  EXPECT_GE(t.min_slope(), 2.0 - 1e-8);
  EXPECT_LE(t.min_slope(), 2.1);
}

TEST(E4Flows, DirectionRecoversShrunkSubspace) {
  const MatrixTuple a = make_e4().tuple;
  FlowConfig cfg;
  cfg.max_iters = 500;
  const FlowTrace t = run_minimizing_movement(a, PDPoint::identity(3), cfg);
  const auto dir = tail_direction(t, cfg.direction_window);
  ASSERT_TRUE(dir.has_value());
  const RealVector ev = herm_eig(*dir).eigenvalues;
  // Pattern (alpha, alpha, -beta) up to the discretization.
  EXPECT_GT(ev(1), 0.0);
  EXPECT_LT(ev(2), 0.0);
  EXPECT_LT(ev(0) - ev(1), 0.5 * (ev(1) - ev(2)));
  const auto flags = round_direction(*dir, cfg.round_tol);
  ASSERT_FALSE(flags.empty());
  ASSERT_EQ(flags.front().dim(), 2);
  EXPECT_LT(max_principal_angle(flags.front().basis(),
                                Subspace::coordinate(3, {0, 1}).basis()),
            1e-2);
}

TEST(E4Flows, EnergyIdentityDiagnostic) {
  const MatrixTuple a = make_e4().tuple;
  FlowConfig cfg;
  cfg.step_size = 1e-2;
  cfg.max_iters = 200;
  const FlowTrace t = run_gradient_descent(a, PDPoint::identity(3), cfg);
  ASSERT_GT(t.records.size(), 100u);
  double energy = 0.0;
  for (std::size_t i = 0; i + 1 < 100; ++i) {
    energy += t.records[i].slope_d2 * t.records[i].slope_d2 * cfg.step_size;
  }
  const double drop = t.records[0].f_value - t.records[99].f_value;
  EXPECT_NEAR(drop, energy, 0.2 * energy);
}

TEST(Traces, Deterministic) {
  const MatrixTuple a = make_e4().tuple;
  FlowConfig cfg;
  cfg.max_iters = 50;
  const FlowTrace t1 = run_minimizing_movement(a, PDPoint::identity(3), cfg);
  const FlowTrace t2 = run_minimizing_movement(a, PDPoint::identity(3), cfg);
  ASSERT_EQ(t1.records.size(), t2.records.size());
  for (std::size_t i = 0; i < t1.records.size(); ++i) {
    EXPECT_EQ(t1.records[i].f_value, t2.records[i].f_value);
    EXPECT_EQ(t1.records[i].slope, t2.records[i].slope);
  }
}

TEST(Traces, DirectionOnlyAwayFromStart) {
  Rng rng(5);
  const MatrixTuple a = random_tuple(rng, 3, 2);
  const FlowTrace t = run_gradient_descent(a, PDPoint::identity(3), FlowConfig{});
  EXPECT_FALSE(t.records.front().direction.has_value());
}
