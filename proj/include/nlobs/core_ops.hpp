#pragma once

#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

namespace nlobs {

/// Differentiability order s and growth exponent p of the operator.
class FractionalOrder {
public:
    FractionalOrder(double s, double p);

    double s() const noexcept { return s_; }
    double p() const noexcept { return p_; }
    double sp() const noexcept { return s_ * p_; }
    bool sp_lt_one() const noexcept { return s_ * p_ < 1.0; }

    friend bool operator==(const FractionalOrder&, const FractionalOrder&) = default;

private:
    double s_;
    double p_;
};

struct ConstantCoefficient {
    double value = 1.0;
};

/// a(x,y) = low when floor(x/period) + floor(y/period) is even, high otherwise.
struct CheckerboardCoefficient {
    double low = 1.0;
    double high = 1.0;
    double period = 0.25;
};

/// Breakpoints b_0 < ... < b_{m-1} split the line into m+1 regions; a(x,y) is
/// the table entry for the pair of regions containing x and y. The table is
/// symmetrized on construction.
struct PiecewiseCoefficient {
    std::vector<double> breaks;
    std::vector<std::vector<double>> table;
};

/// Values on a lattice of square cells of side `period`, drawn log-uniformly in
/// [1/contrast, contrast] from a counter-based hash of (seed, i, j) and then
/// symmetrized.
struct RandomLatticeCoefficient {
    std::uint64_t seed = 0;
    double period = 0.25;
    double contrast = 1.0;
};

/// Symmetric, bounded, measurable coefficient a(x,y) of the kernel.
class Coefficient {
public:
    using Form = std::variant<ConstantCoefficient, CheckerboardCoefficient, PiecewiseCoefficient,
                              RandomLatticeCoefficient>;

    Coefficient() : form_(ConstantCoefficient{}) {}
    explicit Coefficient(Form form);

    double operator()(double x, double y) const noexcept;

    /// Value used for a(x, y) when y lies beyond the far-field truncation radius.
    /// Exact for constant and piecewise forms, the mean value otherwise.
    double far_field(double x, double y_sign) const noexcept;

    /// True when a(x, y) equals far_field(x, sign y) for every y beyond far_field_start.
    bool far_field_exact() const noexcept;
    /// Coordinate past which (side > 0: above, side < 0: below) a(x, ·) is its far-field value.
    double far_field_start(int side) const noexcept;

    /// Jumps of y ↦ a(x, y) inside (lo, hi): the `max_count` nearest to `anchor`, sorted.
    std::vector<double> y_breaks(double lo, double hi, double anchor, std::size_t max_count) const;

    double min_value() const noexcept;
    double max_value() const noexcept;

    const Form& form() const noexcept { return form_; }

private:
    Form form_;
};

/// Kernel K(x,y) = a(x,y) |x-y|^{-1-sp} with Λ^{-1} <= a <= Λ.
class KernelSpec {
public:
    KernelSpec(FractionalOrder order, double lambda, Coefficient coefficient);

    const FractionalOrder& order() const noexcept { return order_; }
    double lambda() const noexcept { return lambda_; }
    const Coefficient& coefficient() const noexcept { return coefficient_; }

private:
    FractionalOrder order_;
    double lambda_;
    Coefficient coefficient_;
};

/// L(a,b) = |a-b|^{p-2}(a-b), with L(a,a) = 0 for every p.
double eval_L(double a, double b, double p);

/// a(x,y)|x-y|^{-1-sp}. Throws SingularityError on x == y.
double eval_kernel(const KernelSpec& spec, double x, double y);

/// sign(d)|d|^exponent, zero at d = 0.
inline double signed_pow(double d, double exponent) noexcept {
    if (d == 0.0) return 0.0;
    return std::copysign(std::pow(std::fabs(d), exponent), d);
}

// ---------------------------------------------------------------------------
// Pointwise inequality predicates.

inline constexpr double kInequalitySlack = 1e-12;
inline constexpr double kSignSlack = 1e-14;

struct SubquadraticCheck {
    double lhs;
    double rhs;
    bool holds;
};

/// |L(a,b) - L(a',b')| <= 4 |a-a'-b+b'|^{p-1} for 1 < p <= 2.
SubquadraticCheck check_lemma_subquadratic(double a, double b, double a2, double b2, double p);

struct SuperquadraticCheck {
    bool holds_first;
    bool holds_second;
    /// lhs / (|Δ|^{p-1} + |Δ||a-b|^{p-2}) for each of the two forms; 0 when Δ = 0.
    double first_ratio;
    double second_ratio;
};

/// For p >= 2:
///   |L(a,b) - L(a',b)| <= c|a-a'|^{p-1} + c|a-a'||a-b|^{p-2}
///   |L(a,b) - L(a,b')| <= c|b-b'|^{p-1} + c|b-b'||a-b|^{p-2}
SuperquadraticCheck check_lemma_superquadratic(double a, double b, double a2, double b2, double p,
                                               double c);

struct AbBoundsCheck {
    double ratio;
    bool within;
    bool nonneg;
};

/// ratio = (|a|^{p-2}a - |b|^{p-2}b)(a-b) / ((|a|+|b|)^{p-2}(a-b)^2), within = 1/c <= ratio <= c.
/// Throws DomainError when a == b.
AbBoundsCheck check_ab_bounds(double a, double b, double p, double c);

/// (|a|^{p-2}a - |b|^{p-2}b)(a-b).
double ab_product(double a, double b, double p);

/// ab_product >= -1e-14 max(|a|,|b|)^p.
bool ab_product_nonneg(double a, double b, double p);

}  // namespace nlobs
