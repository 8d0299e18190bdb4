#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "nlobs/error.hpp"
#include "nlobs/quadrature.hpp"
#include "nlobs/random.hpp"
#include "nlobs/tail.hpp"

using namespace nlobs;

namespace {

std::shared_ptr<const Geometry> make_geom(std::size_t n) {
    return std::make_shared<const Geometry>(build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, n));
}

// ∫_{|y-z|>=r} T(g(y))^q |y-z|^{-1-sigma} dy through the numeric half-line engine.
double engine_integral(const ExteriorData& g, double q, double z, double r, double sigma) {
    const double radius = 1e4 * (std::fabs(z) + r);
    return exterior_half_line(g, TailTransform{}, q, z, sigma, z - r, -1, radius).value +
           exterior_half_line(g, TailTransform{}, q, z, sigma, z + r, +1, radius).value;
}

}  // namespace

TEST(Tail, ZeroFunctionHasZeroTail) {
    const FractionalOrder o(0.5, 2.0);
    EXPECT_EQ(tail_of_grid_function(GridFunction::zeros(make_geom(16)), true, 0.0, 0.5, o), 0.0);
    EXPECT_EQ(tail_of_exterior_data(ExteriorData(ConstantData{0.0}), 0.3, 1.0, o).value, 0.0);
}

TEST(Tail, SupportInsideBallGivesZero) {
    const auto geom = make_geom(32);
    const auto f = GridFunction::sample(geom, [](double x) { return std::fabs(x) < 0.5 ? 7.0 : 0.0; });
    EXPECT_EQ(tail_of_grid_function(f, true, 0.0, 0.75, FractionalOrder(0.3, 1.7)), 0.0);
}

TEST(Tail, UnitFunctionOnCollarExample) {
    const FractionalOrder o(0.5, 2.0);
    for (std::size_t n : {8u, 12u, 40u}) {
        const auto f = GridFunction::constant(make_geom(n), 1.0);
        EXPECT_NEAR(tail_of_grid_function(f, true, 0.0, 1.0, o), 1.0, 1e-14) << n;
    }
}

TEST(Tail, GridTailWithoutExteriorIsRejected) {
    const auto f = GridFunction::constant(make_geom(8), 1.0);
    EXPECT_THROW(tail_of_grid_function(f, false, 0.0, 1.0, FractionalOrder(0.5, 2.0)), ContractError);
    EXPECT_THROW(tail_of_grid_function(f, true, 0.0, 0.0, FractionalOrder(0.5, 2.0)), DomainError);
}

TEST(Tail, ConstantClosedFormAgreesWithNumericEngine) {
    for (double p : {1.4, 2.0, 3.0}) {
        for (double s : {0.2, 0.45, 0.8}) {
            const FractionalOrder o(s, p);
            const double q = p - 1.0, sigma = o.sp();
            const double c = -1.7;
            const auto closed = tail_of_exterior_data(ExteriorData(ConstantData{c}), 0.4, 0.9, o);
            EXPECT_NEAR(closed.value, std::fabs(c) * std::pow(2.0 / sigma, 1.0 / q), 1e-15 * closed.value);
            // A one-node table is constant everywhere but goes through quadrature.
            const auto numeric = tail_of_exterior_data(ExteriorData(TableData{{0.0}, {c}}), 0.4, 0.9, o);
            EXPECT_NEAR(numeric.value, closed.value, 1e-10 * closed.value) << p << " " << s;
            EXPECT_LE(numeric.remainder_bound, 1e-10 * numeric.value);
        }
    }
}

TEST(Tail, PowerPlusExample) {
    // p = 2 makes the outer exponent 1/(p-1) = 1: Tail = ∫_1^∞ x^{1/2} x^{-2} dx = 2.
    const auto t = tail_of_exterior_data(ExteriorData(PowerPlusData{0.5}), 0.0, 1.0, FractionalOrder(0.5, 2.0));
    EXPECT_NEAR(t.value, 2.0, 1e-15);
    // p = 3, s = 0.4: Tail^2 = ∫_1^∞ x^{0.2} x^{-2.2} dx = 1.
    const auto t3 = tail_of_exterior_data(ExteriorData(PowerPlusData{0.1}), 0.0, 1.0, FractionalOrder(0.4, 3.0));
    EXPECT_NEAR(t3.value, 1.0, 1e-15);
}

TEST(Tail, PowerPlusClosedFormsAgreeWithNumericEngine) {
    struct Case {
        double s, p, beta, z, r;
    };
    const Case cases[] = {
        {0.5, 2.0, 0.5, 0.0, 1.0},  {0.45, 1.8, 0.3, 0.0, 0.7}, {0.6, 3.0, 0.2, 0.0, 2.5},
        {0.5, 2.0, 0.5, -3.0, 1.0}, {0.45, 1.8, 0.3, -1.0, 0.4}, {0.6, 3.0, 0.2, -2.0, 2.0},
    };
    for (const auto& c : cases) {
        const FractionalOrder o(c.s, c.p);
        const ExteriorData g(PowerPlusData{c.beta});
        const double q = c.p - 1.0;
        const auto closed = tail_of_exterior_data(g, c.z, c.r, o);
        const double numeric = std::pow(std::pow(c.r, o.sp()) * engine_integral(g, q, c.z, c.r, o.sp()), 1.0 / q);
        EXPECT_NEAR(closed.value, numeric, 1e-10 * closed.value) << c.s << " " << c.p << " " << c.z;
    }
}

TEST(Tail, RejectsDataOutsideTailSpace) {
    // beta (p - 1) >= sp makes the far field diverge.
    const ExteriorData g(PowerPlusData{1.0});
    EXPECT_THROW(tail_of_exterior_data(g, 0.0, 1.0, FractionalOrder(0.5, 2.0)), DomainError);
    EXPECT_NO_THROW(tail_of_exterior_data(ExteriorData(PowerPlusData{0.49}), 0.0, 1.0, FractionalOrder(0.5, 2.0)));
}

TEST(Tail, IndicatorAgreesWithDirectIntegration) {
    // g = 2 on (1, 3): Tail^q = r^sigma 2^q ∫_{max(1,z+r)}^{3} (y-z)^{-1-sigma} dy for z + r < 3.
    const FractionalOrder o(0.4, 2.5);
    const double q = 1.5, sigma = o.sp(), z = 0.2, r = 0.5;
    const ExteriorData g(IndicatorData{IntervalUnion({{1.0, 3.0}}), 2.0});
    const auto t = tail_of_exterior_data(g, z, r, o);
    const double lo = std::max(1.0, z + r) - z, hi = 3.0 - z;
    const double expected = std::pow(std::pow(r, sigma) * std::pow(2.0, q) * (std::pow(lo, -sigma) - std::pow(hi, -sigma)) / sigma, 1.0 / q);
    EXPECT_NEAR(t.value, expected, 1e-11 * expected);
}

TEST(Tail, SplittingIdentityOnGridFunctions) {
    const auto geom = make_geom(257);
    SampleStream rng(3);
    for (double p : {1.5, 2.0, 3.2}) {
        const FractionalOrder o(0.35, p);
        const double q = p - 1.0, sigma = o.sp();
        const auto f = GridFunction::sample(geom, [&](double) { return rng.uniform(-2, 2); });
        for (auto [z, r, R] : {std::tuple{0.1, 0.3, 1.1}, std::tuple{-0.45, 0.013, 0.4}, std::tuple{0.0, 0.5, 3.0}}) {
            const double lhs = std::pow(tail_of_grid_function(f, true, z, r, o), q);
            const double annulus = grid_annulus_integral(f, TailTransform{}, z, r, R, sigma, q);
            const double rhs = std::pow(r, sigma) * annulus +
                               std::pow(r / R, sigma) * std::pow(tail_of_grid_function(f, true, z, R, o), q);
            EXPECT_NEAR(lhs, rhs, 1e-10 * lhs) << p << " " << z;
        }
    }
}

TEST(Tail, MonotoneAndHomogeneous) {
    const auto geom = make_geom(64);
    SampleStream rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        const FractionalOrder o(rng.uniform(0.1, 0.9), rng.uniform(1.2, 3.5));
        const auto f = GridFunction::sample(geom, [&](double) { return rng.uniform(-1, 1); });
        std::vector<double> b(f.values().begin(), f.values().end());
        for (double& v : b) v = (v < 0 ? -1 : 1) * (std::fabs(v) + rng.uniform(0, 0.5));
        const GridFunction fb(geom, b);
        const double z = rng.uniform(-1, 1), r = rng.uniform(0.05, 1.0);
        const double t = tail_of_grid_function(f, true, z, r, o);
        EXPECT_LE(t, tail_of_grid_function(fb, true, z, r, o));
        const double lambda = rng.uniform(-4, 4);
        std::vector<double> scaled(f.values().begin(), f.values().end());
        for (double& v : scaled) v *= lambda;
        EXPECT_NEAR(tail_of_grid_function(GridFunction(geom, scaled), true, z, r, o), std::fabs(lambda) * t,
                    1e-13 * std::fabs(lambda) * t + 1e-300);
    }
}

TEST(Tail, ExtendedTailCombinesGridAndExterior) {
    // f ≡ c on Ω' and g ≡ c outside: same as the constant tail.
    const FractionalOrder o(0.3, 2.2);
    const auto f = GridFunction::constant(make_geom(40), 0.8);
    const ExteriorData g(ConstantData{0.8});
    const auto t = tail_of_extended(f, g, TailTransform{}, 0.1, 0.6, o);
    const auto closed = tail_of_exterior_data(g, 0.1, 0.6, o);
    EXPECT_NEAR(t.value, closed.value, 1e-12 * closed.value);
    // The positive part of f - 1 vanishes everywhere.
    EXPECT_EQ(tail_of_extended(f, g, TailTransform{1.0, TailTransform::Part::Positive}, 0.1, 0.6, o).value, 0.0);
}

TEST(Tail, PowerFarSeriesMatchesQuadrature) {
    struct Case {
        double Y, z, sigma, beta, m, q;
        int j0;
    };
    const Case cases[] = {
        {4.0, 0.5, 0.9, 0.3, 0.2, 1.0, 0},  {4.0, -1.5, 0.9, 0.3, -0.6, 1.0, 0}, {10.0, 2.0, 0.8, 0.25, 0.8, 1.5, 0},
        {10.0, 2.0, 0.8, 0.25, 0.8, 2.5, 1}, {6.0, -2.9, 0.5, 0.2, -0.7, 2.0, 1},
    };
    for (const auto& c : cases) {
        const auto s = power_far_series(c.Y, c.z, c.sigma, c.beta, c.m, c.q, c.j0);
        // Substitute y = Y / t to map [Y, ∞) onto (0, 1].
        auto f = [&](double t) {
            if (t == 0.0) return 0.0;
            const double y = c.Y / t;
            double body = std::pow(1.0 - c.m * std::pow(y, -c.beta), c.q);
            if (c.j0 == 1) body -= 1.0;
            return std::pow(y, c.beta * c.q) * body * std::pow(y - c.z, -1.0 - c.sigma) * c.Y / (t * t);
        };
        const auto ref = quad::adaptive(f, 0.0, 1.0, 1e-12, 0.0, 20000);
        EXPECT_NEAR(s.value, ref.value, 1e-9 * std::fabs(ref.value)) << c.Y << " " << c.m << " " << c.j0;
        EXPECT_LE(s.remainder_bound, 1e-12 * std::fabs(s.value) + 1e-300);
    }
    EXPECT_THROW(power_far_series(1.0, 0.9, 0.5, 0.3, 0.0, 1.0, 0), DomainError);
    EXPECT_THROW(power_far_series(1.0, 0.0, 0.5, 0.3, 0.9, 1.0, 0), DomainError);
}
