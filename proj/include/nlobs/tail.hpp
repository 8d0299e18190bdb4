#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "nlobs/core_ops.hpp"
#include "nlobs/geometry.hpp"
#include "nlobs/grid_function.hpp"

namespace nlobs {

struct ConstantData {
    double value = 0.0;
};

/// x ↦ max(x, 0)^beta.
struct PowerPlusData {
    double beta = 0.5;
};

/// value on `set`, 0 elsewhere.
struct IndicatorData {
    IntervalUnion set;
    double value = 1.0;
};

/// Piecewise linear through (x_k, values_k), constant beyond the end nodes.
struct TableData {
    std::vector<double> x;
    std::vector<double> values;
};

/// Closed-form description of the boundary datum g on the whole line.
class ExteriorData {
public:
    using Form = std::variant<ConstantData, PowerPlusData, IndicatorData, TableData>;

    explicit ExteriorData(Form form, std::optional<double> r_inf = std::nullopt);

    double operator()(double x) const noexcept;
    const Form& form() const noexcept { return form_; }
    std::optional<double> r_inf() const noexcept { return r_inf_; }

    /// R_inf when set, else 1e4 times the given diameter.
    double truncation_radius(double diameter) const noexcept;

    /// Throws DomainError unless ∫_{|x|>1} |g|^{p-1}|x|^{-1-sp} dx < ∞.
    void validate(const FractionalOrder& order) const;

    bool bounded() const noexcept;

    /// Jumps and kinks of g, sorted.
    std::vector<double> breakpoints() const;

    /// Points where g is continuous but its derivative blows up.
    std::vector<double> singular_points() const;

    /// Beyond `start` on the given side (+1: y >= start, -1: y <= start) g is
    /// either the constant `value` or, for power = true, y^beta.
    struct FarForm {
        bool power;
        double value;
        double beta;
        double start;
    };
    FarForm far_form(int side) const noexcept;

private:
    Form form_;
    std::optional<double> r_inf_;
};

/// v ↦ |v - shift| (Abs), (v - shift)_+ (Positive) or (shift - v)_+ (Negative).
struct TailTransform {
    enum class Part { Abs, Positive, Negative };
    double shift = 0.0;
    Part part = Part::Abs;

    double apply(double v) const noexcept;
};

struct TailValue {
    double value;
    /// Absolute bound on the error in `value` from quadrature and series truncation.
    double remainder_bound;
};

inline constexpr double kDefaultTruncationFactor = 1e4;

/// ∫_{start}^{∞} (side = +1) or ∫_{-∞}^{start} (side = -1) of
/// T(g(y))^q |y - z|^{-1-sigma} dy, with z strictly on the other side of start.
/// Numeric up to |y| = radius (extended when the far-field series needs it),
/// analytic beyond.
TailValue exterior_half_line(const ExteriorData& g, const TailTransform& T, double q, double z,
                             double sigma, double start, int side, double radius);

/// Σ over cells of T(f_i)^q ∫_{cell ∩ {r <= |x-z| < outer}} |x-z|^{-1-sigma} dx, each
/// cell integral in closed form and cells split exactly at z ± r and z ± outer.
double grid_annulus_integral(const GridFunction& f, const TailTransform& T, double z, double r,
                             double outer, double sigma, double q);

/// Tail of a grid function. zero_outside = true declares f ≡ 0 off Ω'; otherwise
/// the exterior values are needed and tail_of_extended must be used.
double tail_of_grid_function(const GridFunction& f, bool zero_outside, double z, double r,
                             const FractionalOrder& order);

/// Tail of g on the whole line; closed forms for constant and power_plus where
/// available, quadrature plus analytic remainder otherwise.
TailValue tail_of_exterior_data(const ExteriorData& g, double z, double r,
                                const FractionalOrder& order);

/// Tail of T(f) where f is the grid function on Ω' and g beyond Ω'.
TailValue tail_of_extended(const GridFunction& f, const ExteriorData& g, const TailTransform& T,
                           double z, double r, const FractionalOrder& order);

/// ∫_Y^∞ y^{beta q}(1 - m y^{-beta})^q restricted to binomial orders j >= j0,
/// times (y - z)^{-1-sigma}. Needs |m| Y^{-beta} <= 1/2 and |z| <= Y/2.
TailValue power_far_series(double Y, double z, double sigma, double beta, double m, double q,
                           int j0);

}  // namespace nlobs
