#include "nlobs/core_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nlobs/error.hpp"
#include "nlobs/random.hpp"

namespace nlobs {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

std::size_t region_index(const std::vector<double>& breaks, double x) {
    return static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), x) -
                                    breaks.begin());
}

double lattice_value(const RandomLatticeCoefficient& c, std::int64_t i, std::int64_t j) {
    const auto key = mix64(static_cast<std::uint64_t>(i)) ^
                     mix64(static_cast<std::uint64_t>(j) + 0x5851f42d4c957f2dULL);
    const double u = static_cast<double>(mix64(c.seed ^ key) >> 11) * 0x1.0p-53;
    return std::exp((2.0 * u - 1.0) * std::log(c.contrast));
}

std::int64_t lattice_index(double x, double period) {
    return static_cast<std::int64_t>(std::floor(x / period));
}

}  // namespace

FractionalOrder::FractionalOrder(double s, double p) : s_(s), p_(p) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("fractional order s must lie in (0,1)");
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("growth exponent p must be > 1");
}

Coefficient::Coefficient(Form form) : form_(std::move(form)) {
    std::visit(overloaded{
                   [](const ConstantCoefficient& c) {
                       if (!(c.value > 0.0) || !std::isfinite(c.value))
                           throw ConfigError("constant coefficient must be positive and finite");
                   },
                   [](const CheckerboardCoefficient& c) {
                       if (!(c.low > 0.0 && c.high > 0.0) || !std::isfinite(c.low) ||
                           !std::isfinite(c.high))
                           throw ConfigError("checkerboard values must be positive and finite");
                       if (!(c.period > 0.0)) throw ConfigError("checkerboard period must be > 0");
                   },
                   [](PiecewiseCoefficient& c) {
                       const std::size_t m = c.breaks.size() + 1;
                       if (!std::is_sorted(c.breaks.begin(), c.breaks.end()) ||
                           std::adjacent_find(c.breaks.begin(), c.breaks.end()) != c.breaks.end())
                           throw ConfigError("piecewise breakpoints must be strictly increasing");
                       if (c.table.size() != m)
                           throw ConfigError("piecewise table must be (breaks+1) x (breaks+1)");
                       for (const auto& row : c.table) {
                           if (row.size() != m)
                               throw ConfigError("piecewise table must be square");
                           for (double v : row)
                               if (!(v > 0.0) || !std::isfinite(v))
                                   throw ConfigError("piecewise values must be positive and finite");
                       }
                       for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = i + 1; j < m; ++j) {
                               const double avg = 0.5 * (c.table[i][j] + c.table[j][i]);
                               c.table[i][j] = avg;
                               c.table[j][i] = avg;
                           }
                   },
                   [](const RandomLatticeCoefficient& c) {
                       if (!(c.period > 0.0)) throw ConfigError("lattice period must be > 0");
                       if (!(c.contrast >= 1.0) || !std::isfinite(c.contrast))
                           throw ConfigError("lattice contrast must be >= 1");
                   },
               },
               form_);
}

double Coefficient::operator()(double x, double y) const noexcept {
    return std::visit(
        overloaded{
            [](const ConstantCoefficient& c) { return c.value; },
            [&](const CheckerboardCoefficient& c) {
                const auto parity = (lattice_index(x, c.period) + lattice_index(y, c.period)) & 1;
                return parity == 0 ? c.low : c.high;
            },
            [&](const PiecewiseCoefficient& c) {
                return c.table[region_index(c.breaks, x)][region_index(c.breaks, y)];
            },
            [&](const RandomLatticeCoefficient& c) {
                const auto i = lattice_index(x, c.period);
                const auto j = lattice_index(y, c.period);
                // Sum is commutative in IEEE arithmetic, so a(x,y) == a(y,x) bit for bit.
                return 0.5 * (lattice_value(c, i, j) + lattice_value(c, j, i));
            },
        },
        form_);
}

double Coefficient::far_field(double x, double y_sign) const noexcept {
    return std::visit(overloaded{
                          [](const ConstantCoefficient& c) { return c.value; },
                          [](const CheckerboardCoefficient& c) { return 0.5 * (c.low + c.high); },
                          [&](const PiecewiseCoefficient& c) {
                              const auto last = c.table.size() - 1;
                              return c.table[region_index(c.breaks, x)][y_sign > 0 ? last : 0];
                          },
                          [](const RandomLatticeCoefficient& c) {
                              if (c.contrast == 1.0) return 1.0;
                              const double lg = std::log(c.contrast);
                              return (c.contrast - 1.0 / c.contrast) / (2.0 * lg);
                          },
                      },
                      form_);
}

bool Coefficient::far_field_exact() const noexcept {
    return std::holds_alternative<ConstantCoefficient>(form_) ||
           std::holds_alternative<PiecewiseCoefficient>(form_);
}

double Coefficient::far_field_start(int side) const noexcept {
    if (const auto* pw = std::get_if<PiecewiseCoefficient>(&form_))
        if (!pw->breaks.empty()) return side > 0 ? pw->breaks.back() : pw->breaks.front();
    return side > 0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
}

std::vector<double> Coefficient::y_breaks(double lo, double hi, double anchor,
                                          std::size_t max_count) const {
    std::vector<double> out;
    auto lattice = [&](double period) {
        const double first = std::floor(lo / period) + 1.0;
        for (double k = first; k * period < hi && out.size() < 4 * max_count + 8; ++k)
            out.push_back(k * period);
    };
    std::visit(overloaded{
                   [](const ConstantCoefficient&) {},
                   [&](const CheckerboardCoefficient& c) { lattice(c.period); },
                   [&](const PiecewiseCoefficient& c) {
                       for (double b : c.breaks)
                           if (b > lo && b < hi) out.push_back(b);
                   },
                   [&](const RandomLatticeCoefficient& c) { lattice(c.period); },
               },
               form_);
    std::sort(out.begin(), out.end(), [anchor](double a, double b) {
        return std::fabs(a - anchor) < std::fabs(b - anchor);
    });
    if (out.size() > max_count) out.resize(max_count);
    std::sort(out.begin(), out.end());
    return out;
}

double Coefficient::min_value() const noexcept {
    return std::visit(overloaded{
                          [](const ConstantCoefficient& c) { return c.value; },
                          [](const CheckerboardCoefficient& c) { return std::min(c.low, c.high); },
                          [](const PiecewiseCoefficient& c) {
                              double m = std::numeric_limits<double>::infinity();
                              for (const auto& row : c.table)
                                  m = std::min(m, *std::min_element(row.begin(), row.end()));
                              return m;
                          },
                          [](const RandomLatticeCoefficient& c) { return 1.0 / c.contrast; },
                      },
                      form_);
}

double Coefficient::max_value() const noexcept {
    return std::visit(overloaded{
                          [](const ConstantCoefficient& c) { return c.value; },
                          [](const CheckerboardCoefficient& c) { return std::max(c.low, c.high); },
                          [](const PiecewiseCoefficient& c) {
                              double m = 0.0;
                              for (const auto& row : c.table)
                                  m = std::max(m, *std::max_element(row.begin(), row.end()));
                              return m;
                          },
                          [](const RandomLatticeCoefficient& c) { return c.contrast; },
                      },
                      form_);
}

KernelSpec::KernelSpec(FractionalOrder order, double lambda, Coefficient coefficient)
    : order_(order), lambda_(lambda), coefficient_(std::move(coefficient)) {
    if (!(lambda >= 1.0) || !std::isfinite(lambda))
        throw ConfigError("ellipticity constant lambda must be >= 1");
    // One ulp of headroom so that e.g. a = 1/lambda computed in the config passes.
    const double lo = (1.0 / lambda_) * (1.0 - 4.0 * std::numeric_limits<double>::epsilon());
    const double hi = lambda_ * (1.0 + 4.0 * std::numeric_limits<double>::epsilon());
    if (coefficient_.min_value() < lo || coefficient_.max_value() > hi)
        throw ConfigError("coefficient violates the ellipticity bounds [1/lambda, lambda]");
}

double eval_L(double a, double b, double p) {
    require_finite(a, "L argument a");
    require_finite(b, "L argument b");
    if (!(p > 1.0)) throw DomainError("L requires p > 1");
    return signed_pow(a - b, p - 1.0);
}

double eval_kernel(const KernelSpec& spec, double x, double y) {
    require_finite(x, "kernel point x");
    require_finite(y, "kernel point y");
    if (x == y) throw SingularityError("kernel evaluated on the diagonal x == y");
    const double dist = std::fabs(x - y);
    return spec.coefficient()(x, y) * std::pow(dist, -1.0 - spec.order().sp());
}

SubquadraticCheck check_lemma_subquadratic(double a, double b, double a2, double b2, double p) {
    if (!(p > 1.0 && p <= 2.0)) throw DomainError("subquadratic bound requires 1 < p <= 2");
    const double lhs = std::fabs(eval_L(a, b, p) - eval_L(a2, b2, p));
    const double rhs = 4.0 * std::pow(std::fabs((a - b) - (a2 - b2)), p - 1.0);
    return {lhs, rhs, lhs <= rhs * (1.0 + kInequalitySlack)};
}

SuperquadraticCheck check_lemma_superquadratic(double a, double b, double a2, double b2, double p,
                                               double c) {
    if (!(p >= 2.0) || !std::isfinite(p)) throw DomainError("superquadratic bound requires p >= 2");
    if (!(c > 0.0)) throw DomainError("superquadratic constant must be positive");
    const double gap = std::fabs(a - b);

    const double da = std::fabs(a - a2);
    const double lhs1 = std::fabs(eval_L(a, b, p) - eval_L(a2, b, p));
    const double base1 = std::pow(da, p - 1.0) + da * std::pow(gap, p - 2.0);

    const double db = std::fabs(b - b2);
    const double lhs2 = std::fabs(eval_L(a, b, p) - eval_L(a, b2, p));
    const double base2 = std::pow(db, p - 1.0) + db * std::pow(gap, p - 2.0);

    SuperquadraticCheck out{};
    out.holds_first = lhs1 <= c * base1 * (1.0 + kInequalitySlack);
    out.holds_second = lhs2 <= c * base2 * (1.0 + kInequalitySlack);
    out.first_ratio = base1 > 0.0 ? lhs1 / base1 : 0.0;
    out.second_ratio = base2 > 0.0 ? lhs2 / base2 : 0.0;
    return out;
}

double ab_product(double a, double b, double p) {
    return (eval_L(a, 0.0, p) - eval_L(b, 0.0, p)) * (a - b);
}

bool ab_product_nonneg(double a, double b, double p) {
    const double scale = std::pow(std::max(std::fabs(a), std::fabs(b)), p);
    return ab_product(a, b, p) >= -kSignSlack * scale;
}

AbBoundsCheck check_ab_bounds(double a, double b, double p, double c) {
    if (a == b) throw DomainError("ratio bound is degenerate for a == b");
    if (!(c > 0.0)) throw DomainError("ratio bound constant must be positive");
    const double num = ab_product(a, b, p);
    const double diff = a - b;
    const double den = std::pow(std::fabs(a) + std::fabs(b), p - 2.0) * diff * diff;
    const double ratio = num / den;
    return {ratio, ratio >= 1.0 / c && ratio <= c, ab_product_nonneg(a, b, p)};
}

}  // namespace nlobs
