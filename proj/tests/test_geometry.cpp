#include <gtest/gtest.h>

#include <cmath>

#include "nlobs/error.hpp"
#include "nlobs/geometry.hpp"

using namespace nlobs;

TEST(Geometry, EightCellExample) {
    const auto g = build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, 8);
    EXPECT_DOUBLE_EQ(g.cell_width(), 0.5);
    const double centers[] = {-1.75, -1.25, -0.75, -0.25, 0.25, 0.75, 1.25, 1.75};
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_DOUBLE_EQ(g.center(i), centers[i]);
        EXPECT_EQ(g.interior(i), std::fabs(centers[i]) < 1.0);
    }
    EXPECT_EQ(g.count(CellKind::Interior), 4u);
    EXPECT_EQ(g.count(CellKind::Collar), 4u);
    EXPECT_DOUBLE_EQ(g.boundary_gap(), 1.0);
}

TEST(Geometry, RejectsTouchingBoundaryAndEmpty) {
    EXPECT_THROW(build_geometry(IntervalUnion({{0, 1}}), {0, 1}, 16), ConfigError);
    EXPECT_THROW(build_geometry(IntervalUnion{}, {0, 1}, 16), ConfigError);
    EXPECT_THROW(build_geometry(IntervalUnion({{0.2, 0.8}}), {0, 1}, 4), ConfigError);
    EXPECT_THROW(IntervalUnion({{0, 1}, {0.5, 2}}), ConfigError);
}

TEST(Geometry, TwoComponentMaskCounts) {
    const auto g = build_geometry(IntervalUnion({{-1, -0.2}, {0.2, 1}}), {-2, 2}, 400);
    // Centers at -2 + (i + 1/2) / 100; each component of length 0.8 holds 80 centers.
    EXPECT_EQ(g.count(CellKind::Interior), 160u);
    EXPECT_EQ(g.count(CellKind::Collar), 240u);
}

TEST(Geometry, CellsTileTheInterval) {
    const auto g = build_geometry(IntervalUnion({{-0.3, 0.4}}), {-1, 1.5}, 37);
    EXPECT_EQ(g.cell_lo(0), -1.0);
    EXPECT_EQ(g.cell_hi(36), 1.5);
    for (std::size_t i = 0; i + 1 < 37; ++i) EXPECT_EQ(g.cell_hi(i), g.cell_lo(i + 1));
}

TEST(Geometry, RefinementChildrenAgreeAwayFromBoundary) {
    const IntervalUnion omega({{-1, -0.2}, {0.2, 1}});
    const auto coarse = build_geometry(omega, {-2, 2}, 64);
    const auto fine = build_geometry(omega, {-2, 2}, 128);
    for (std::size_t i = 0; i < 64; ++i) {
        const bool straddles = omega.measure_within(coarse.cell_lo(i), coarse.cell_hi(i)) > 0.0 &&
                               omega.measure_within(coarse.cell_lo(i), coarse.cell_hi(i)) < coarse.cell_width();
        for (std::size_t c : {2 * i, 2 * i + 1}) {
            EXPECT_GE(fine.center(c), coarse.cell_lo(i));
            EXPECT_LE(fine.center(c), coarse.cell_hi(i));
            if (!straddles) {
                EXPECT_EQ(fine.kind(c), coarse.kind(i));
            }
        }
    }
}

TEST(Density, SingleIntervalIsOneHalf) {
    const auto g = build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, 64);
    const double radii[] = {0.01, 0.3, 0.9};
    const auto rep = measure_density(g, 1.0, radii);
    for (double d : rep.densities) EXPECT_NEAR(d, 0.5, 1e-15);
    EXPECT_NEAR(rep.delta_omega, 0.5, 1e-15);
}

TEST(Density, TwoComponentExamples) {
    const auto g = build_geometry(IntervalUnion({{-1, -0.2}, {0.2, 1}}), {-2, 2}, 64);
    const double radii[] = {0.1, 0.5};
    const auto rep = measure_density(g, 0.2, radii);
    EXPECT_NEAR(rep.densities[0], 0.5, 1e-15);
    EXPECT_NEAR(rep.densities[1], 0.4, 1e-15);
    EXPECT_NEAR(rep.delta_omega, 0.4, 1e-15);
}

TEST(Density, Preconditions) {
    const auto g = build_geometry(IntervalUnion({{-1, 1}}), {-2, 2}, 64);
    const double ok[] = {0.5};
    const double bad[] = {1.5};
    EXPECT_THROW(measure_density(g, 0.5, ok), DomainError);
    EXPECT_THROW(measure_density(g, 1.0, bad), DomainError);
}
