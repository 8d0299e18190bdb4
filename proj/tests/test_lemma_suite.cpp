#include <gtest/gtest.h>

#include <cmath>

#include "nlobs/error.hpp"
#include "nlobs/lemma_suite.hpp"

using namespace nlobs;

// Full 10^6-sample runs live in the acceptance suite; these are smaller smoke runs.

TEST(LemmaSuites, SubquadraticHolds) {
    for (double p : {1.1, 1.5, 2.0}) {
        const auto r = run_subquadratic_suite(p, 50000, 42);
        EXPECT_TRUE(r.passed()) << "p = " << p;
        EXPECT_LE(r.worst_ratio, 1.0);
    }
}

TEST(LemmaSuites, SuperquadraticTwoPhase) {
    for (double p : {2.5, 3.0, 4.0}) {
        const auto r = run_superquadratic_suite(p, 50000, 42);
        ASSERT_TRUE(r.fitted_constant.has_value());
        EXPECT_GT(*r.fitted_constant, 0.0);
        EXPECT_TRUE(std::isfinite(*r.fitted_constant));
        EXPECT_TRUE(r.passed()) << "p = " << p << " c* = " << *r.fitted_constant;
    }
}

TEST(LemmaSuites, NonnegAndBounds) {
    for (double p : {1.2, 2.0, 3.5}) {
        EXPECT_TRUE(run_ab_nonneg_suite(p, 50000, 3).passed());
        const auto b = run_ab_bounds_suite(p, 50000, 3);
        EXPECT_TRUE(b.passed());
        EXPECT_GE(*b.fitted_constant, 1.0);
    }
}

TEST(LemmaSuites, SingleSamplePasses) {
    EXPECT_TRUE(run_subquadratic_suite(1.5, 1, 42).passed());
    EXPECT_TRUE(run_superquadratic_suite(3.0, 1, 42).passed());
    EXPECT_THROW(run_subquadratic_suite(1.5, 0, 42), DomainError);
}

TEST(LemmaSuites, CorruptedNonlinearityIsCaught) {
    const auto L = corrupted_nonlinearity();
    EXPECT_FALSE(run_subquadratic_suite(1.5, 20000, 42, L).passed());
    EXPECT_FALSE(run_subquadratic_suite(2.0, 20000, 42, L).passed());
}

TEST(LemmaSuites, Deterministic) {
    const auto a = run_superquadratic_suite(3.0, 10000, 9);
    const auto b = run_superquadratic_suite(3.0, 10000, 9);
    EXPECT_EQ(*a.fitted_constant, *b.fitted_constant);
    EXPECT_EQ(a.worst_ratio, b.worst_ratio);
}
