#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "nlobs/analysis.hpp"
#include "nlobs/error.hpp"
#include "nlobs/random.hpp"

using namespace nlobs;

namespace {

const std::function<double(double)> kParabola = [](double x) { return 0.5 - x * x; };

ObstacleInstance parabola(std::size_t n, double far = 0.0) {
    // far > 0 raises g beyond |x| = 1.5 so that the truncations near x = 1 are active.
    const ExteriorData g = far == 0.0 ? ExteriorData(ConstantData{0.0})
                                      : ExteriorData(TableData{{-1.55, -1.5, 1.5, 1.55}, {far, 0.0, 0.0, far}});
    return ObstacleInstance::build(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, n),
                                   KernelSpec(FractionalOrder(0.6, 2.0), 1.0, Coefficient{}), g, &kParabola);
}

ObstacleInstance halfspace(std::size_t n) {
    return ObstacleInstance::build(build_geometry(IntervalUnion({{0, 1}}), {-0.5, 1.5}, n),
                                   KernelSpec(FractionalOrder(0.5, 2.0), 1.0, Coefficient{}),
                                   ExteriorData(PowerPlusData{0.5}), nullptr);
}

ObstacleInstance chi(std::size_t n) {
    const std::function<double(double)> one = [](double) { return 1.0; };
    return ObstacleInstance::build(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, n),
                                   KernelSpec(FractionalOrder(0.4, 2.0), 1.0, Coefficient{}),
                                   ExteriorData(ConstantData{0.0}), &one);
}

std::vector<double> geometric(double start, double factor, int count) {
    std::vector<double> r;
    for (int k = 0; k < count; ++k) r.push_back(start * std::pow(factor, -k));
    return r;
}

}  // namespace

TEST(LogLogFit, RecoversExactPowerLaw) {
    const std::vector<double> r = {0.5, 0.25, 0.1, 0.05, 0.01};
    std::vector<double> v;
    for (double x : r) v.push_back(3.0 * std::pow(x, 0.7));
    const auto fit = fit_loglog(r, v);
    EXPECT_NEAR(fit.slope, 0.7, 1e-13);
    EXPECT_NEAR(fit.constant, 3.0, 1e-12);
    EXPECT_NEAR(fit.residual, 0.0, 1e-13);
    const std::vector<double> three = {1, 2, 3}, vals = {1, 2, 3};
    EXPECT_THROW(fit_loglog(three, vals), InsufficientDataError);
    // Nonpositive values do not count towards the four pairs.
    const std::vector<double> r4 = {1, 2, 3, 4}, v4 = {1, 2, 0, 4};
    EXPECT_THROW(fit_loglog(r4, v4), InsufficientDataError);
}

TEST(Oscillation, NonincreasingOverNestedBalls) {
    const auto geom = std::make_shared<const Geometry>(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, 200));
    SampleStream rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const auto u = GridFunction::sample(geom, [&](double) { return rng.uniform(-1, 1); });
        const double x0 = rng.uniform(-1, 1);
        double prev = 1e300;
        for (double rho : geometric(1.0, 1.3, 20)) {
            const auto osc = oscillation(u, x0, rho);
            if (!osc) break;
            EXPECT_LE(*osc, prev);
            prev = *osc;
        }
    }
    EXPECT_FALSE(oscillation(GridFunction::zeros(geom), 0.0, 1e-4).has_value());
}

TEST(InstanceHash, StableAndSensitive) {
    const auto a = parabola(32), b = parabola(32), c = parabola(32, 1.0), d = chi(32);
    EXPECT_EQ(instance_hash(a), instance_hash(b));
    EXPECT_EQ(instance_hash(a).size(), 64u);
    EXPECT_NE(instance_hash(a), instance_hash(c));
    EXPECT_NE(instance_hash(a), instance_hash(d));
}

TEST(SupBound, VanishingExcessFitsZeroConstant) {
    const auto inst = chi(64);
    const auto u = solve(inst).u;
    const double deltas[] = {1.0, 0.5, 0.1};
    const auto rep = probe_sup_bound(inst, u, 0.0, 0.9, 1.0, 1.0, deltas);
    EXPECT_TRUE(rep.passed);
    EXPECT_EQ(*rep.fitted_constant, 0.0);
    EXPECT_EQ(*rep.fitted_exponent, 0.0);
    for (const auto& row : rep.rows) EXPECT_EQ(row.measured, 0.0);
    EXPECT_THROW(probe_sup_bound(inst, u, 0.0, 0.9, 0.9, 1.0, deltas), ContractError);
    EXPECT_THROW(probe_sup_bound(inst, u, 0.0, 0.9, 1.0, 2.0, deltas), DomainError);
    EXPECT_THROW(probe_sup_bound(inst, u, 1.5, 0.9, 1.0, 1.0, deltas), DomainError);
}

TEST(SupBound, FittedConstantStableUnderRefinement) {
    const double deltas[] = {1.0, 0.5, 0.25, 0.125};
    std::vector<ProbeReport> reps;
    for (std::size_t n : {64u, 128u, 256u}) {
        const auto inst = parabola(n, 2.0);
        const auto r = solve(inst);
        ASSERT_TRUE(r.converged);
        reps.push_back(probe_sup_bound(inst, r.u, 0.75, 0.5, local_data_sup(inst, 0.75, 0.5), 1.0, deltas));
        EXPECT_TRUE(reps.back().passed);
        EXPECT_GT(*reps.back().fitted_constant, 0.0);
    }
    EXPECT_TRUE(constants_agree(reps[0], reps[1]));
    EXPECT_TRUE(constants_agree(reps[1], reps[2]));
    EXPECT_EQ(*reps[1].fitted_exponent, *reps[2].fitted_exponent);
}

TEST(InteriorOscillation, ConstantIsDegeneratePass) {
    const auto inst = ObstacleInstance::build(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, 64),
                                              KernelSpec(FractionalOrder(0.3, 2.0), 1.0, Coefficient{}),
                                              ExteriorData(ConstantData{0.4}), nullptr);
    const auto u = solve(inst).u;
    const auto rep = probe_interior_oscillation(inst, u, 0.0, 0.8, geometric(0.2, 1.5, 6));
    EXPECT_TRUE(rep.passed);
    EXPECT_FALSE(rep.fitted_exponent.has_value());
    EXPECT_NE(rep.notes.find("degenerate"), std::string::npos);
}

TEST(InteriorOscillation, SmoothRegionDecaysLinearly) {
    const auto inst = halfspace(256);
    const auto u = solve(inst).u;
    const auto rep = probe_interior_oscillation(inst, u, 0.5, 0.8, geometric(0.2, 1.5, 9));
    EXPECT_TRUE(rep.passed);
    EXPECT_GT(*rep.fitted_exponent, 0.8);
    EXPECT_LT(*rep.fitted_exponent, 1.3);
    for (std::size_t k = 1; k < rep.rows.size(); ++k) EXPECT_LE(rep.rows[k].measured, rep.rows[k - 1].measured);
    EXPECT_THROW(probe_interior_oscillation(inst, u, 0.5, 0.8, geometric(0.2, 1.5, 3)), InsufficientDataError);
    EXPECT_THROW(probe_interior_oscillation(inst, u, -0.2, 0.2, geometric(0.05, 1.5, 6)), DomainError);
}

TEST(InteriorOscillation, HolderObstacleExponentInherited) {
    // h = -|x|^{0.3} with g ≡ -1: the solution touches the cusp at 0.
    const std::function<double(double)> h = [](double x) { return -std::pow(std::fabs(x), 0.3); };
    const auto inst = ObstacleInstance::build(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, 256),
                                              KernelSpec(FractionalOrder(0.5, 2.0), 1.0, Coefficient{}),
                                              ExteriorData(ConstantData{-1.0}), &h);
    const auto r = solve(inst);
    ASSERT_TRUE(r.converged);
    const auto rep = probe_interior_oscillation(inst, r.u, 0.0, 0.8, geometric(0.2, 1.4, 10));
    EXPECT_TRUE(rep.passed);
    EXPECT_GE(*rep.fitted_exponent, 0.3 * (1.0 - 0.2));
}

TEST(BoundaryOscillation, HalfspaceExponentNearS) {
    for (std::size_t n : {256u, 512u}) {
        const auto inst = halfspace(n);
        const auto u = solve(inst).u;
        const auto radii = geometric(0.4, 1.5, 10);
        const auto rep = probe_boundary_oscillation(inst, u, 0.0, radii, measure_density(inst.geometry(), 0.0, radii));
        EXPECT_TRUE(rep.passed);
        EXPECT_NEAR(*rep.fitted_exponent, 0.5, 0.1) << n;
    }
}

TEST(BoundaryOscillation, CharacteristicSolutionDoesNotDecay) {
    const auto inst = chi(256);
    const auto u = solve(inst).u;
    const auto radii = geometric(0.5, 1.5, 8);
    const auto dens = measure_density(inst.geometry(), 1.0, radii);
    const auto rep = probe_boundary_oscillation(inst, u, 1.0, radii, dens);
    EXPECT_FALSE(rep.passed);
    EXPECT_LE(*rep.fitted_exponent, 0.0);
    EXPECT_NE(rep.notes.find("non-decay"), std::string::npos);
    EXPECT_THROW(probe_boundary_oscillation(inst, u, 0.5, radii, dens), DomainError);
    DensityReport empty = dens;
    empty.delta_omega = 0.0;
    EXPECT_THROW(probe_boundary_oscillation(inst, u, 1.0, radii, empty), ContractError);
}

TEST(BoundaryOscillation, ZeroSolutionIsDegeneratePass) {
    const std::function<double(double)> zero = [](double) { return 0.0; };
    const auto inst = ObstacleInstance::build(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, 128),
                                              KernelSpec(FractionalOrder(0.4, 2.0), 1.0, Coefficient{}),
                                              ExteriorData(ConstantData{0.0}), &zero);
    const auto u = solve(inst).u;
    const auto radii = geometric(0.5, 1.5, 6);
    const auto rep = probe_boundary_oscillation(inst, u, -1.0, radii, measure_density(inst.geometry(), -1.0, radii));
    EXPECT_TRUE(rep.passed);
    EXPECT_FALSE(rep.fitted_exponent.has_value());
}

TEST(Caccioppoli, TentCutoff) {
    EXPECT_EQ(tent_cutoff(1.0, 1.0, 0.4), 1.0);
    EXPECT_EQ(tent_cutoff(1.2, 1.0, 0.4), 1.0);
    EXPECT_NEAR(tent_cutoff(1.25, 1.0, 0.4), 0.5, 1e-15);
    EXPECT_EQ(tent_cutoff(0.7, 1.0, 0.4), 0.0);
}

TEST(Caccioppoli, ConstantBelowLevelGivesZeroTerms) {
    const auto inst = parabola(64);
    const auto u = GridFunction::constant(inst.geometry_ptr(), 0.0);
    const auto t = caccioppoli_terms(inst, u, 1.0, 0.5, 0.3, +1);
    EXPECT_EQ(t.lhs, 0.0);
    EXPECT_EQ(t.rhs_energy, 0.0);
    EXPECT_EQ(t.rhs_tail, 0.0);
    EXPECT_EQ(t.ratio, 0.0);
}

TEST(Caccioppoli, PlateauMatchesSetSums) {
    // w = 1 on S ⊂ {φ = 1}, 0 elsewhere, g = 0 outside: the tail term vanishes and
    //   LHS = 2 Σ_{i∈S, j∈B\S} w_ij,  RHS₁ = Σ_{i∈S} Σ_{j∈B} (1 - φ_j)^p w_ij.
    const auto inst = ObstacleInstance::build(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, 96),
                                              KernelSpec(FractionalOrder(0.3, 1.7), 1.0, Coefficient{}),
                                              ExteriorData(ConstantData{0.0}), nullptr);
    const Geometry& geom = inst.geometry();
    const double x0 = 1.0, r = 0.6, p = 1.7;
    const auto u = GridFunction::sample(inst.geometry_ptr(), [&](double x) { return std::fabs(x - x0) < r / 4 ? 1.0 : 0.0; });
    const auto t = caccioppoli_terms(inst, u, x0, r, 0.0, +1);

    const auto& W = inst.op().weights();
    std::vector<std::size_t> S, rest;
    for (std::size_t i : geom.cells_in_ball(x0, r)) (u[i] == 1.0 ? S : rest).push_back(i);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i : S) {
        for (std::size_t j : rest) lhs += 2.0 * W(i, j);
        for (std::size_t j : rest) rhs += std::pow(1.0 - tent_cutoff(geom.center(j), x0, r), p) * W(i, j);
    }
    EXPECT_NEAR(t.lhs, lhs, 1e-12 * lhs);
    EXPECT_NEAR(t.rhs_energy, rhs, 1e-12 * rhs);
    EXPECT_EQ(t.rhs_tail, 0.0);
}

TEST(Caccioppoli, TermsNonnegativeOnRandomStates) {
    const auto inst = parabola(64, 1.0);
    SampleStream rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        auto u = random_feasible(inst, rng.next_u64());
        for (int sign : {+1, -1}) {
            const auto t = caccioppoli_terms(inst, u, -1.0, 0.5, sign > 0 ? 0.3 : 0.0, sign);
            EXPECT_GE(t.lhs, 0.0);
            EXPECT_GE(t.rhs_energy, 0.0);
            EXPECT_GE(t.rhs_tail, 0.0);
        }
    }
}

TEST(Caccioppoli, RatioStableUnderRefinement) {
    std::vector<ProbeReport> reps;
    for (std::size_t n : {128u, 256u}) {
        const auto inst = parabola(n, 2.0);
        const auto u = solve(inst).u;
        reps.push_back(check_caccioppoli(inst, u, 1.0, 0.5, local_data_sup(inst, 1.0, 0.5), 0.0));
        EXPECT_TRUE(reps.back().passed);
        EXPECT_GT(*reps.back().fitted_constant, 0.0);
        EXPECT_EQ(reps.back().rows.size(), 2u);
    }
    EXPECT_TRUE(constants_agree(reps[0], reps[1]));
}

TEST(Caccioppoli, LevelPreconditions) {
    const auto inst = parabola(64);
    const auto u = solve(inst).u;
    EXPECT_THROW(check_caccioppoli(inst, u, 1.0, 0.5, 0.0, std::nullopt), ContractError);
    EXPECT_THROW(check_caccioppoli(inst, u, 1.0, 0.5, std::nullopt, 0.5), ContractError);
    EXPECT_THROW(check_caccioppoli(inst, u, 1.0, 0.5, std::nullopt, std::nullopt), InsufficientDataError);
    EXPECT_THROW(check_caccioppoli(inst, u, 0.5, 0.5, 1.0, std::nullopt), DomainError);
    const auto only_minus = check_caccioppoli(inst, u, 1.0, 0.5, std::nullopt, -0.5);
    EXPECT_EQ(only_minus.rows.size(), 1u);
}

TEST(DensityPoincare, Factor) {
    EXPECT_NEAR(density_poincare_factor(1.0, 2.0), 1.0, 1e-15);
    EXPECT_NEAR(density_poincare_factor(0.75, 2.0), 4.0, 1e-12);
    EXPECT_THROW(density_poincare_factor(0.0, 2.0), DomainError);
}

TEST(DensityPoincare, SingleCellMatchesDirectSums) {
    const auto inst = ObstacleInstance::build(build_geometry(IntervalUnion({{-1, -0.2}, {0.2, 1}}), {-2, 2}, 80),
                                              KernelSpec(FractionalOrder(0.4, 2.0), 1.0, Coefficient{}),
                                              ExteriorData(ConstantData{0.0}), nullptr);
    const Geometry& geom = inst.geometry();
    const auto ball = geom.cells_in_ball(0.2, 0.5);
    std::size_t cell = 0;
    for (std::size_t i : ball)
        if (geom.interior(i)) cell = i;
    std::vector<double> v(geom.n_cells(), 0.0);
    v[cell] = 1.0;
    const GridFunction f(inst.geometry_ptr(), v);
    const auto t = poincare_terms(inst.op().weights(), f, 0.2, 0.5, 2.0, 0.8);
    const double measure = static_cast<double>(ball.size()) * geom.cell_width();
    double pair = 0.0;
    for (std::size_t j : ball) pair += 2.0 * inst.op().weights()(cell, j);
    EXPECT_NEAR(t.lhs, geom.cell_width() / measure, 1e-15);
    EXPECT_NEAR(t.seminorm, std::pow(0.5, 0.8) * pair / measure, 1e-12 * t.seminorm);

    const std::vector<GridFunction> fs = {GridFunction::zeros(inst.geometry_ptr()), f};
    const double radii[] = {0.5};
    const auto rep = check_density_poincare(inst, fs, 0.2, 0.5, measure_density(geom, 0.2, radii));
    EXPECT_EQ(rep.rows[0].measured, 0.0);
    EXPECT_TRUE(rep.passed);
    EXPECT_GT(*rep.fitted_constant, 0.0);

    std::vector<double> bad(geom.n_cells(), 0.0);
    bad[geom.cells_in_ball(0.0, 0.05).front()] = 1.0;
    EXPECT_THROW(poincare_terms(inst.op().weights(), GridFunction(inst.geometry_ptr(), bad), 0.2, 0.5, 2.0, 0.8),
                 ContractError);
}

TEST(DensityPoincare, SuiteSupportedInsideAndStable) {
    std::vector<ProbeReport> reps;
    for (std::size_t n : {128u, 256u}) {
        const auto inst = ObstacleInstance::build(build_geometry(IntervalUnion({{-1, -0.2}, {0.2, 1}}), {-2, 2}, n),
                                                  KernelSpec(FractionalOrder(0.4, 2.0), 1.0, Coefficient{}),
                                                  ExteriorData(ConstantData{0.0}), nullptr);
        const auto fs = random_poincare_suite(inst.geometry_ptr(), 0.2, 0.5, 20, 7);
        ASSERT_EQ(fs.size(), 20u);
        for (const auto& f : fs)
            for (std::size_t i = 0; i < n; ++i) {
                const double x = inst.geometry().center(i);
                if (!inst.geometry().interior(i) || std::fabs(x - 0.2) >= 0.5) {
                    EXPECT_EQ(f[i], 0.0);
                }
            }
        const double radii[] = {0.5};
        reps.push_back(check_density_poincare(inst, fs, 0.2, 0.5, measure_density(inst.geometry(), 0.2, radii)));
    }
    EXPECT_TRUE(constants_agree(reps[0], reps[1]));
}

TEST(RefinementStudy, ExactFamiliesHaveZeroError) {
    const std::size_t levels[] = {16, 32, 64};
    const auto rep = refinement_study(chi, levels, RefinementReference::explicit_solution([](double x) {
                                          return std::fabs(x) < 1.0 ? 1.0 : 0.0;
                                      }));
    EXPECT_TRUE(rep.passed);
    for (const auto& row : rep.rows) EXPECT_LE(row.measured, 1e-8);
    const InstanceFamily constant = [](std::size_t n) {
        return ObstacleInstance::build(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, n),
                                       KernelSpec(FractionalOrder(0.3, 2.5), 1.0, Coefficient{}),
                                       ExteriorData(ConstantData{-0.7}), nullptr);
    };
    const auto self = refinement_study(constant, levels, RefinementReference::self());
    EXPECT_EQ(self.rows.size(), 2u);
    for (const auto& row : self.rows) EXPECT_LE(row.measured, 1e-8);
}

TEST(RefinementStudy, HalfspaceErrorsDecrease) {
    const std::size_t levels[] = {32, 64, 128, 256};
    const auto rep = refinement_study(halfspace, levels, RefinementReference::explicit_solution([](double x) {
                                          return std::sqrt(std::max(x, 0.0));
                                      }));
    EXPECT_TRUE(rep.passed) << rep.notes;
    ASSERT_TRUE(rep.fitted_exponent.has_value());
    EXPECT_GT(*rep.fitted_exponent, 0.3);
}

TEST(RefinementStudy, RejectsBadResolutions) {
    const std::size_t two[] = {16, 32};
    const std::size_t skew[] = {16, 24, 48};
    const auto ref = RefinementReference::self();
    EXPECT_THROW(refinement_study(chi, two, ref), ConfigError);
    EXPECT_THROW(refinement_study(chi, skew, ref), ConfigError);
}
