#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nlobs {

/// Signature of the nonlinearity under test; eval_L in production, a corrupted
/// variant for negative controls.
using NonlinearityFn = std::function<double(double a, double b, double p)>;

NonlinearityFn default_nonlinearity();

/// A nonlinearity that violates the difference inequalities; used as a negative control.
NonlinearityFn corrupted_nonlinearity();

struct LemmaViolation {
    std::string check;
    double p;
    std::array<double, 4> args;
    double lhs;
    double rhs;
};

struct LemmaSuiteResult {
    std::string check;
    double p = 0.0;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::size_t violations = 0;
    /// Constant found by the scan phase (two-phase suites only).
    std::optional<double> fitted_constant;
    /// Largest lhs/rhs seen (single-phase suites) or seen in verification.
    double worst_ratio = 0.0;
    /// First few violating samples, for the violations CSV.
    std::vector<LemmaViolation> examples;

    bool passed() const noexcept { return violations == 0; }
};

inline constexpr double kSampleRange = 10.0;
inline constexpr std::size_t kMaxRecordedViolations = 64;

/// Subquadratic difference bound on `samples` uniform draws from [-10,10]^4.
LemmaSuiteResult run_subquadratic_suite(double p, std::size_t samples, std::uint64_t seed,
                                        const NonlinearityFn& L = default_nonlinearity());

/// Superquadratic bounds: scan phase fits c*(p) as the largest observed ratio,
/// verification phase checks both inequalities with 1.01 c*(p) on fresh samples.
LemmaSuiteResult run_superquadratic_suite(double p, std::size_t samples, std::uint64_t seed,
                                          const NonlinearityFn& L = default_nonlinearity());

/// Nonnegativity of (|a|^{p-2}a - |b|^{p-2}b)(a-b).
LemmaSuiteResult run_ab_nonneg_suite(double p, std::size_t samples, std::uint64_t seed,
                                     const NonlinearityFn& L = default_nonlinearity());

/// Two-sided comparability of the monotone product with (|a|+|b|)^{p-2}(a-b)^2;
/// two-phase like the superquadratic suite.
LemmaSuiteResult run_ab_bounds_suite(double p, std::size_t samples, std::uint64_t seed,
                                     const NonlinearityFn& L = default_nonlinearity());

}  // namespace nlobs
