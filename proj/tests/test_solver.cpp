#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "nlobs/error.hpp"
#include "nlobs/solver.hpp"

using namespace nlobs;

namespace {

ObstacleInstance chi_instance(std::size_t n, double s = 0.4, double p = 2.0) {
    const std::function<double(double)> h = [](double) { return 1.0; };
    return ObstacleInstance::build(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, n),
                                   KernelSpec(FractionalOrder(s, p), 1.0, Coefficient{}), ExteriorData(ConstantData{0.0}),
                                   &h);
}

ObstacleInstance parabola_instance(std::size_t n, double p = 2.0, double lift = 0.0) {
    const std::function<double(double)> h = [lift](double x) { return 0.5 - x * x + lift; };
    return ObstacleInstance::build(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, n),
                                   KernelSpec(FractionalOrder(0.6, p), 1.0, Coefficient{}), ExteriorData(ConstantData{0.0}),
                                   &h);
}

bool nonincreasing(const std::vector<double>& trace) {
    for (std::size_t k = 1; k < trace.size(); ++k)
        if (trace[k] > trace[k - 1] + 1e-12 * std::fabs(trace[k - 1])) return false;
    return true;
}

}  // namespace

TEST(Solve, CharacteristicFunctionIsTheSolution) {
    const auto inst = chi_instance(64);
    const auto r = solve(inst);
    ASSERT_TRUE(r.converged);
    for (std::size_t i = 0; i < 64; ++i)
        EXPECT_NEAR(r.u[i], inst.geometry().interior(i) ? 1.0 : 0.0, 1e-8);
    EXPECT_TRUE(check_supersolution(inst, r.u).is_supersolution);
    const auto c = contact_set_and_free_residual(inst, r.u, default_contact_tol(inst));
    EXPECT_EQ(c.contact_count, inst.geometry().interior_cells().size());
    EXPECT_EQ(c.max_free_residual, 0.0);
}

TEST(Solve, ConstantDataGivesConstantSolution) {
    const std::function<double(double)> h = [](double x) { return 0.3 - x * x; };
    const auto inst = ObstacleInstance::build(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, 40),
                                              KernelSpec(FractionalOrder(0.3, 1.7), 1.0, Coefficient{}),
                                              ExteriorData(ConstantData{0.5}), &h);
    SolveConfig cfg;
    cfg.initial = random_feasible(inst, 3);
    const auto r = solve(inst, cfg);
    ASSERT_TRUE(r.converged);
    for (std::size_t i = 0; i < 40; ++i) EXPECT_NEAR(r.u[i], 0.5, 1e-7);
}

TEST(Solve, ParabolaContactSplitAndComplementarity) {
    for (double p : {1.5, 2.0, 3.0}) {
        const auto inst = parabola_instance(64, p);
        const auto r = solve(inst);
        ASSERT_TRUE(r.converged) << p;
        EXPECT_TRUE(nonincreasing(r.energy_trace)) << p;
        for (std::size_t i : inst.geometry().interior_cells()) {
            EXPECT_GE(r.u[i], inst.obstacle(i));
            EXPECT_GE(r.residual[i], -1e-8);
        }
        const auto c = contact_set_and_free_residual(inst, r.u, default_contact_tol(inst));
        EXPECT_GT(c.contact_count, 0u);
        EXPECT_LT(c.contact_count, inst.geometry().interior_cells().size());
        EXPECT_LE(c.max_free_residual, 1e-8);
        EXPECT_TRUE(check_supersolution(inst, r.u).is_supersolution);
    }
}

TEST(Solve, ScalarSolversAgree) {
    const auto inst = parabola_instance(48, 1.6);
    SolveConfig a, b;
    a.scalar_solver = ScalarSolver::Bisection;
    b.scalar_solver = ScalarSolver::SafeguardedNewton;
    const auto ra = solve(inst, a), rb = solve(inst, b);
    ASSERT_TRUE(ra.converged && rb.converged);
    for (std::size_t i = 0; i < 48; ++i) EXPECT_NEAR(ra.u[i], rb.u[i], 1e-7);
}

TEST(Solve, RejectsInfeasibleStart) {
    const auto inst = chi_instance(32);
    SolveConfig cfg;
    cfg.initial = GridFunction::zeros(inst.geometry_ptr());
    EXPECT_THROW(solve(inst, cfg), ContractError);
    cfg.initial.reset();
    cfg.tol = 0.0;
    EXPECT_THROW(solve(inst, cfg), ConfigError);
}

TEST(Solve, NonConvergedRunIsReported) {
    const auto inst = parabola_instance(48);
    SolveConfig cfg;
    cfg.max_sweeps = 1;
    const auto r = solve(inst, cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.sweeps, 1);
    EXPECT_GT(r.complementarity_norm, cfg.tol);
}

TEST(Supersolution, PerturbationBelowSolutionIsDetected) {
    const auto inst = parabola_instance(64, 2.0, 0.2);
    const auto r = solve(inst);
    ASSERT_TRUE(r.converged);
    // Lower a free cell: its own residual turns negative.
    const auto c = contact_set_and_free_residual(inst, r.u, default_contact_tol(inst));
    std::size_t free_cell = 0;
    for (std::size_t i : inst.geometry().interior_cells())
        if (!c.contact[i]) {
            free_cell = i;
            break;
        }
    ASSERT_NE(free_cell, 0u);
    GridFunction v = r.u;
    v[free_cell] -= 0.05;
    EXPECT_FALSE(check_supersolution(inst, v).is_supersolution);
    // A large constant above all data is a supersolution.
    const auto big = check_supersolution(inst, GridFunction::constant(inst.geometry_ptr(), 0.0));
    EXPECT_TRUE(big.is_supersolution);
}

TEST(Uniqueness, RandomStartsAgree) {
    const auto inst = parabola_instance(48);
    const auto rep = verify_uniqueness(inst, SolveConfig{}, 4, 11);
    EXPECT_EQ(rep.non_converged, 0);
    EXPECT_LE(rep.max_pairwise_sup_diff, 1e-6);
    EXPECT_EQ(verify_uniqueness(inst, SolveConfig{}, 1, 11).max_pairwise_sup_diff, 0.0);
}

TEST(Comparison, LiftedObstacleSolutionDominates) {
    const auto base = parabola_instance(48);
    const auto u = solve(base).u;
    for (double lift : {0.05, 0.3}) {
        const auto lifted = parabola_instance(48, 2.0, lift);
        const auto v = solve(lifted).u;
        // v solves a problem with a higher obstacle: a feasible supersolution for the base problem.
        const auto rep = verify_smallest_supersolution(base, u, v);
        EXPECT_TRUE(rep.holds) << rep.max_violation;
    }
    EXPECT_EQ(verify_smallest_supersolution(base, u, u).max_violation, 0.0);
    EXPECT_THROW(verify_smallest_supersolution(base, u, base.default_initial()), ContractError);
}

TEST(DirichletMode, InactiveObstacleMatchesDirichletSolve) {
    const Geometry geom = build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, 48);
    const KernelSpec spec(FractionalOrder(0.35, 2.5), 1.0, Coefficient{});
    const ExteriorData g(TableData{{-2.0, 2.0}, {1.0, -1.0}});
    const auto dir = ObstacleInstance::build(geom, spec, g, nullptr);
    const auto ud = solve(dir);
    ASSERT_TRUE(ud.converged);
    double lowest = 1e300;
    for (std::size_t i : geom.interior_cells()) lowest = std::min(lowest, ud.u[i]);
    const std::function<double(double)> h = [lowest](double) { return lowest - 0.5; };
    const auto obs = ObstacleInstance::build(geom, spec, g, &h);
    const auto uo = solve(obs);
    ASSERT_TRUE(uo.converged);
    for (std::size_t i = 0; i < 48; ++i) EXPECT_NEAR(ud.u[i], uo.u[i], 1e-7);
    EXPECT_THROW(contact_set_and_free_residual(dir, ud.u, 1e-6), ContractError);
    const auto c = contact_set_and_free_residual(obs, uo.u, default_contact_tol(obs));
    EXPECT_EQ(c.contact_count, 0u);
}
