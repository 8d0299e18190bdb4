#include "nlobs/tail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlobs/error.hpp"
#include "nlobs/quadrature.hpp"

namespace nlobs {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate_form(const ExteriorData::Form& form) {
    std::visit(Overloaded{
                   [](const ConstantData& c) {
                       if (!std::isfinite(c.value)) throw DomainError("constant exterior value must be finite");
                   },
                   [](const PowerPlusData& pp) {
                       if (!(pp.beta >= 0.0) || !std::isfinite(pp.beta))
                           throw DomainError("power_plus exponent must be finite and >= 0");
                   },
                   [](const IndicatorData& ind) {
                       if (!std::isfinite(ind.value)) throw DomainError("indicator value must be finite");
                   },
                   [](const TableData& t) {
                       if (t.x.empty() || t.x.size() != t.values.size())
                           throw DomainError("table needs matching, nonempty node and value arrays");
                       for (std::size_t k = 0; k < t.x.size(); ++k) {
                           if (!std::isfinite(t.x[k]) || !std::isfinite(t.values[k]))
                               throw DomainError("table entries must be finite");
                           if (k > 0 && !(t.x[k] > t.x[k - 1]))
                               throw DomainError("table nodes must be strictly increasing");
                       }
                   },
               },
               form);
}

// Closed-form ∫ over [lo, hi] of |x - z|^{-1-sigma} for an interval on one side of z.
double cell_kernel_integral(double lo, double hi, double z, double sigma) {
    const double near = lo > z ? lo - z : z - hi;
    const double len = hi - lo;
    return std::pow(near, -sigma) * -std::expm1(-sigma * std::log1p(len / near)) / sigma;
}

// Points in (lo, hi) where g crosses `level`; kinks of the transformed datum.
std::vector<double> level_crossings(const ExteriorData& g, double level, double lo, double hi) {
    std::vector<double> out;
    std::visit(Overloaded{
                   [](const ConstantData&) {},
                   [](const IndicatorData&) {},
                   [&](const PowerPlusData& pp) {
                       if (level > 0.0 && pp.beta > 0.0) out.push_back(std::pow(level, 1.0 / pp.beta));
                   },
                   [&](const TableData& t) {
                       for (std::size_t k = 0; k + 1 < t.x.size(); ++k) {
                           const double a = t.values[k] - level, b = t.values[k + 1] - level;
                           if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0))
                               out.push_back(t.x[k] + (t.x[k + 1] - t.x[k]) * a / (a - b));
                       }
                   },
               },
               g.form());
    std::erase_if(out, [&](double x) { return !(x > lo && x < hi); });
    return out;
}

// far_form start meaning "the far form holds on the whole side".
double everywhere(int side) { return side > 0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity(); }

}  // namespace

ExteriorData::ExteriorData(Form form, std::optional<double> r_inf) : form_(std::move(form)), r_inf_(r_inf) {
    validate_form(form_);
    if (r_inf_ && !(*r_inf_ > 0.0 && std::isfinite(*r_inf_)))
        throw DomainError("R_inf must be positive and finite");
}

double ExteriorData::operator()(double x) const noexcept {
    return std::visit(Overloaded{
                          [](const ConstantData& c) { return c.value; },
                          [x](const PowerPlusData& pp) {
                              return x > 0.0 ? (pp.beta == 0.0 ? 1.0 : std::pow(x, pp.beta)) : 0.0;
                          },
                          [x](const IndicatorData& ind) { return ind.set.contains(x) ? ind.value : 0.0; },
                          [x](const TableData& t) {
                              if (x <= t.x.front()) return t.values.front();
                              if (x >= t.x.back()) return t.values.back();
                              const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
                              const std::size_t k = static_cast<std::size_t>(it - t.x.begin()) - 1;
                              const double w = (x - t.x[k]) / (t.x[k + 1] - t.x[k]);
                              return t.values[k] + w * (t.values[k + 1] - t.values[k]);
                          },
                      },
                      form_);
}

double ExteriorData::truncation_radius(double diameter) const noexcept {
    return r_inf_ ? *r_inf_ : kDefaultTruncationFactor * diameter;
}

void ExteriorData::validate(const FractionalOrder& order) const {
    if (const auto* pp = std::get_if<PowerPlusData>(&form_)) {
        if (!(pp->beta * (order.p() - 1.0) < order.sp()))
            throw DomainError("power_plus datum is outside the tail space: need beta (p-1) < sp");
    }
}

bool ExteriorData::bounded() const noexcept {
    if (const auto* pp = std::get_if<PowerPlusData>(&form_)) return pp->beta == 0.0;
    return true;
}

std::vector<double> ExteriorData::breakpoints() const {
    return std::visit(Overloaded{
                          [](const ConstantData&) { return std::vector<double>{}; },
                          [](const PowerPlusData&) { return std::vector<double>{0.0}; },
                          [](const IndicatorData& ind) { return ind.set.boundary(); },
                          [](const TableData& t) { return t.x; },
                      },
                      form_);
}

std::vector<double> ExteriorData::singular_points() const {
    if (const auto* pp = std::get_if<PowerPlusData>(&form_))
        if (pp->beta > 0.0 && pp->beta < 1.0) return {0.0};
    return {};
}

ExteriorData::FarForm ExteriorData::far_form(int side) const noexcept {
    return std::visit(Overloaded{
                          [side](const ConstantData& c) { return FarForm{false, c.value, 0.0, everywhere(side)}; },
                          [side](const PowerPlusData& pp) {
                              if (side < 0) return FarForm{false, 0.0, 0.0, 0.0};
                              if (pp.beta == 0.0) return FarForm{false, 1.0, 0.0, 0.0};
                              return FarForm{true, 1.0, pp.beta, 0.0};
                          },
                          [side](const IndicatorData& ind) {
                              if (ind.set.empty()) return FarForm{false, 0.0, 0.0, everywhere(side)};
                              return FarForm{false, 0.0, 0.0, side > 0 ? ind.set.sup() : ind.set.inf()};
                          },
                          [side](const TableData& t) {
                              return side > 0 ? FarForm{false, t.values.back(), 0.0, t.x.back()}
                                              : FarForm{false, t.values.front(), 0.0, t.x.front()};
                          },
                      },
                      form_);
}

double TailTransform::apply(double v) const noexcept {
    const double d = v - shift;
    switch (part) {
        case Part::Positive: return d > 0.0 ? d : 0.0;
        case Part::Negative: return d < 0.0 ? -d : 0.0;
        case Part::Abs: break;
    }
    return std::fabs(d);
}

TailValue power_far_series(double Y, double z, double sigma, double beta, double m, double q, int j0) {
    if (!(Y > 0.0) || std::fabs(z) > 0.5 * Y || std::fabs(m) * std::pow(Y, -beta) > 0.5 + 1e-15)
        throw DomainError("far-field series used outside its convergence region");
    constexpr int kMaxOrder = 400;
    constexpr double kCut = 1e-18;
    const double ym = std::pow(Y, -beta);
    const double zy = z / Y;
    double total = 0.0, bound = 0.0;
    double cj = 1.0;  // C(q, j) (-m)^j
    double yj = std::pow(Y, beta * q - sigma);
    for (int j = 0; j < kMaxOrder; ++j) {
        if (j >= j0 && cj != 0.0) {
            double bk = 1.0, zk = 1.0, inner = 0.0, last = 0.0;
            for (int k = 0; k < kMaxOrder; ++k) {
                const double denom = sigma + k + beta * j - beta * q;
                if (!(denom > 0.0)) throw DomainError("far-field series exponent is not integrable");
                last = bk * zk / denom;
                inner += last;
                if (std::fabs(last) <= kCut * std::fabs(inner)) break;
                bk *= (1.0 + sigma + k) / (k + 1.0);
                zk *= zy;
            }
            const double term = cj * yj * inner;
            total += term;
            bound += std::fabs(cj * yj * last);
            if (std::fabs(term) <= kCut * std::fabs(total) && j > j0 + 1) {
                bound += std::fabs(term);
                break;
            }
        }
        cj *= (q - j) / (j + 1.0) * -m;
        yj *= ym;
        if (cj == 0.0) break;
    }
    return {total, bound};
}

TailValue exterior_half_line(const ExteriorData& g, const TailTransform& T, double q, double z,
                             double sigma, double start, int side, double radius) {
    // Right-oriented coordinate y = side * x.
    const double a = side * start;
    const double zr = side * z;
    if (!(zr < a)) throw DomainError("half-line integral needs the center strictly outside");
    const auto far = g.far_form(side);
    double end = std::max({a, radius, side * far.start});
    if (far.power) end = std::max({end, 2.0 * std::fabs(zr), std::pow(2.0 * std::fabs(T.shift), 1.0 / far.beta)});

    auto integrand = [&](double y) {
        const double v = T.apply(g(side * y));
        if (v == 0.0) return 0.0;
        return std::pow(v, q) * std::pow(y - zr, -1.0 - sigma);
    };

    std::vector<double> cuts{a};
    const double delta = a - zr;
    for (double t = delta; a + t < end; t *= 2.0) cuts.push_back(a + t);
    cuts.push_back(end);
    auto add_points = [&](const std::vector<double>& pts) {
        for (double x : pts) {
            const double y = side * x;
            if (y > a && y < end) cuts.push_back(y);
        }
    };
    add_points(g.breakpoints());
    add_points(g.singular_points());
    if (T.part != TailTransform::Part::Abs || T.shift != 0.0)
        add_points(level_crossings(g, T.shift, -std::numeric_limits<double>::infinity(),
                                   std::numeric_limits<double>::infinity()));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double value = 0.0, err = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        if (!(cuts[k + 1] > cuts[k])) continue;
        const auto res = quad::adaptive(integrand, cuts[k], cuts[k + 1], 1e-13, 0.0, 2000);
        value += res.value;
        err += res.error;
    }

    if (far.power) {
        if (T.part != TailTransform::Part::Negative) {
            const auto s = power_far_series(end, zr, sigma, far.beta, T.shift, q, 0);
            value += s.value;
            err += s.remainder_bound;
        }
    } else {
        const double v = T.apply(far.value);
        if (v != 0.0) value += std::pow(v, q) * std::pow(end - zr, -sigma) / sigma;
    }
    return {value, err};
}

double grid_annulus_integral(const GridFunction& f, const TailTransform& T, double z, double r,
                             double outer, double sigma, double q) {
    if (!(r > 0.0)) throw DomainError("tail radius must be positive");
    const Geometry& geom = f.geometry();
    double total = 0.0;
    for (std::size_t i = 0; i < geom.n_cells(); ++i) {
        const double v = T.apply(f[i]);
        if (v == 0.0) continue;
        const double lo = geom.cell_lo(i), hi = geom.cell_hi(i);
        double w = 0.0;
        const double rlo = std::max(lo, z + r), rhi = std::min(hi, z + outer);
        if (rhi > rlo) w += cell_kernel_integral(rlo, rhi, z, sigma);
        const double llo = std::max(lo, z - outer), lhi = std::min(hi, z - r);
        if (lhi > llo) w += cell_kernel_integral(llo, lhi, z, sigma);
        if (w > 0.0) total += std::pow(v, q) * w;
    }
    return total;
}

double tail_of_grid_function(const GridFunction& f, bool zero_outside, double z, double r,
                             const FractionalOrder& order) {
    if (!zero_outside)
        throw ContractError("grid tail without exterior values needs tail_of_extended");
    if (!(r > 0.0)) throw DomainError("tail radius must be positive");
    const double q = order.p() - 1.0, sigma = order.sp();
    const double s = std::pow(r, sigma) *
                     grid_annulus_integral(f, TailTransform{}, z, r, std::numeric_limits<double>::infinity(), sigma, q);
    return s > 0.0 ? std::pow(s, 1.0 / q) : 0.0;
}

namespace {

TailValue finish(double integral, double err, double r, double sigma, double q) {
    const double s = std::pow(r, sigma) * integral;
    if (!(s > 0.0)) return {0.0, 0.0};
    const double value = std::pow(s, 1.0 / q);
    return {value, value * std::pow(r, sigma) * err / (q * s)};
}

}  // namespace

TailValue tail_of_exterior_data(const ExteriorData& g, double z, double r, const FractionalOrder& order) {
    if (!(r > 0.0)) throw DomainError("tail radius must be positive");
    g.validate(order);
    const double q = order.p() - 1.0, sigma = order.sp();
    if (const auto* c = std::get_if<ConstantData>(&g.form()))
        return {std::fabs(c->value) * std::pow(2.0 / sigma, 1.0 / q), 0.0};
    if (const auto* pp = std::get_if<PowerPlusData>(&g.form())) {
        const double gamma = pp->beta * q;
        if (z == 0.0) return {std::pow(std::pow(r, gamma) / (sigma - gamma), 1.0 / q), 0.0};
        if (z + r <= 0.0) {
            const double s = std::pow(r, sigma) * std::pow(-z, gamma - sigma) * std::beta(gamma + 1.0, sigma - gamma);
            return {std::pow(s, 1.0 / q), 0.0};
        }
    }
    const double radius = g.truncation_radius(std::fabs(z) + r);
    const auto left = exterior_half_line(g, TailTransform{}, q, z, sigma, z - r, -1, radius);
    const auto right = exterior_half_line(g, TailTransform{}, q, z, sigma, z + r, +1, radius);
    return finish(left.value + right.value, left.remainder_bound + right.remainder_bound, r, sigma, q);
}

TailValue tail_of_extended(const GridFunction& f, const ExteriorData& g, const TailTransform& T, double z,
                           double r, const FractionalOrder& order) {
    if (!(r > 0.0)) throw DomainError("tail radius must be positive");
    g.validate(order);
    const double q = order.p() - 1.0, sigma = order.sp();
    const Geometry& geom = f.geometry();
    const double grid = grid_annulus_integral(f, T, z, r, std::numeric_limits<double>::infinity(), sigma, q);
    const double radius = g.truncation_radius(geom.diameter());
    const auto left = exterior_half_line(g, T, q, z, sigma, std::min(geom.omega_prime().lo, z - r), -1, radius);
    const auto right = exterior_half_line(g, T, q, z, sigma, std::max(geom.omega_prime().hi, z + r), +1, radius);
    return finish(grid + left.value + right.value, left.remainder_bound + right.remainder_bound, r, sigma, q);
}

}  // namespace nlobs
