#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nlobs/quadrature.hpp"

using namespace nlobs;

TEST(GaussLegendre, ExactForPolynomials) {
    for (std::size_t n : {1u, 2u, 5u, 8u, 13u}) {
        const auto r = quad::gauss_legendre(n);
        for (std::size_t deg = 0; deg < 2 * n; ++deg) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += r.weights[k] * std::pow(r.nodes[k], static_cast<double>(deg));
            const double exact = deg % 2 == 1 ? 0.0 : 2.0 / (deg + 1.0);
            EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " deg=" << deg;
        }
    }
}

TEST(Adaptive, EndpointSingularity) {
    const auto r = quad::adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-12);
    EXPECT_NEAR(r.value, 2.0, 1e-10);
    const auto s = quad::adaptive([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-14);
    EXPECT_NEAR(s.value, 2.0, 1e-14);
}

TEST(GradedPanels, CoverInOrderAndRespectBreaks) {
    const double breaks[] = {0.37, 12.0};
    const double sing[] = {3.0};
    const auto panels = quad::graded_panels(0.01, 100.0, 1.5, breaks, sing);
    ASSERT_FALSE(panels.empty());
    EXPECT_EQ(panels.front().lo, 0.0);
    EXPECT_EQ(panels.back().hi, 100.0);
    for (std::size_t k = 0; k + 1 < panels.size(); ++k) {
        EXPECT_EQ(panels[k].hi, panels[k + 1].lo);
        EXPECT_LT(panels[k].lo, panels[k].hi);
    }
    auto is_edge = [&](double x) {
        for (const auto& p : panels)
            if (p.lo == x || p.hi == x) return true;
        return false;
    };
    EXPECT_TRUE(is_edge(0.37));
    EXPECT_TRUE(is_edge(12.0));
    EXPECT_TRUE(is_edge(3.0));
    EXPECT_EQ(panels.front().hi, 0.01);
}

TEST(GradedPanels, CompositeRuleOnDecayingKernel) {
    // ∫_0^T (t + d)^{-1-s} dt in closed form.
    const double d = 1e-3, T = 4e4, s = 0.8;
    const auto& rule = quad::gauss_legendre8();
    double sum = 0.0;
    for (const auto& p : quad::graded_panels(d, T, 1.5)) {
        const double mid = 0.5 * (p.lo + p.hi), half = 0.5 * (p.hi - p.lo);
        for (std::size_t k = 0; k < 8; ++k) sum += half * rule.weights[k] * std::pow(mid + half * rule.nodes[k] + d, -1.0 - s);
    }
    const double exact = (std::pow(d, -s) - std::pow(T + d, -s)) / s;
    EXPECT_NEAR(sum, exact, 1e-11 * exact);
}
