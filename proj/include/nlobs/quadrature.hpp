#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nlobs::quad {

/// Nodes and weights on [-1, 1].
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule (Newton iteration on the three-term recurrence).
Rule gauss_legendre(std::size_t n);

/// The fixed 8-point rule used for composite far-field panels.
const Rule& gauss_legendre8();

struct Panel {
    double lo;
    double hi;
};

/// Panels covering [lo, hi], refined geometrically on both sides of `point` in (lo, hi).
std::vector<Panel> refined_around(double lo, double hi, double point);

/// Geometrically graded panels covering [0, length] for an integrand singular at
/// t = -offset: first panel [0, min(offset, length)], then widths grow by `ratio`.
/// Panels are split at every `breaks` value and refined geometrically (factor 4,
/// down to 1e-13 relative) on both sides of every `singular` value.
std::vector<Panel> graded_panels(double offset, double length, double ratio,
                                 std::span<const double> breaks = {},
                                 std::span<const double> singular = {});

struct AdaptiveResult {
    double value;
    double error;
    std::size_t evaluations;
};

/// Globally adaptive Gauss-Kronrod (7/15) on [a, b].
AdaptiveResult adaptive(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-13, double abs_tol = 0.0,
                        std::size_t max_intervals = 4000);

}  // namespace nlobs::quad
