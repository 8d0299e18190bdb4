#include "nlobs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlobs/error.hpp"

namespace nlobs {

IntervalUnion::IntervalUnion(std::vector<Interval> parts) : parts_(std::move(parts)) {
    for (const auto& iv : parts_)
        if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
            throw ConfigError("intervals must be finite with lo < hi");
    std::sort(parts_.begin(), parts_.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (std::size_t k = 1; k < parts_.size(); ++k)
        if (parts_[k].lo < parts_[k - 1].hi)
            throw ConfigError("intervals of a union must be disjoint");
}

bool IntervalUnion::contains(double x) const noexcept {
    return std::any_of(parts_.begin(), parts_.end(), [x](const Interval& iv) { return iv.contains(x); });
}

double IntervalUnion::measure() const noexcept {
    double m = 0.0;
    for (const auto& iv : parts_) m += iv.length();
    return m;
}

double IntervalUnion::measure_within(double lo, double hi) const noexcept {
    double m = 0.0;
    for (const auto& iv : parts_) {
        const double a = std::max(lo, iv.lo);
        const double b = std::min(hi, iv.hi);
        if (b > a) m += b - a;
    }
    return m;
}

std::vector<double> IntervalUnion::boundary() const {
    std::vector<double> pts;
    for (const auto& iv : parts_) {
        if (pts.empty() || pts.back() != iv.lo) pts.push_back(iv.lo);
        pts.push_back(iv.hi);
    }
    return pts;
}

Geometry::Geometry(IntervalUnion omega, Interval omega_prime, std::size_t n_cells)
    : omega_(std::move(omega)), omega_prime_(omega_prime), n_cells_(n_cells) {
    if (omega_.empty()) throw ConfigError("constraint domain must be nonempty");
    if (!(omega_prime_.lo < omega_prime_.hi) || !std::isfinite(omega_prime_.lo) ||
        !std::isfinite(omega_prime_.hi))
        throw ConfigError("computational interval must be finite with lo < hi");
    if (n_cells_ < kMinCells) throw ConfigError("at least 8 cells are required");
    gap_ = std::min(omega_.inf() - omega_prime_.lo, omega_prime_.hi - omega_.sup());
    if (!(gap_ > 0.0))
        throw ConfigError("constraint domain must be compactly contained in the computational interval");

    width_ = omega_prime_.length() / static_cast<double>(n_cells_);
    centers_.resize(n_cells_);
    kinds_.resize(n_cells_);
    for (std::size_t i = 0; i < n_cells_; ++i) {
        centers_[i] = omega_prime_.lo + (static_cast<double>(i) + 0.5) * width_;
        kinds_[i] = omega_.contains(centers_[i]) ? CellKind::Interior : CellKind::Collar;
        if (kinds_[i] == CellKind::Interior) interior_.push_back(i);
    }
    if (interior_.empty()) throw ConfigError("grid too coarse: no cell center lies in the constraint domain");
}

double Geometry::cell_lo(std::size_t i) const noexcept {
    return omega_prime_.lo + static_cast<double>(i) * width_;
}

double Geometry::cell_hi(std::size_t i) const noexcept {
    return i + 1 == n_cells_ ? omega_prime_.hi
                             : omega_prime_.lo + static_cast<double>(i + 1) * width_;
}

std::size_t Geometry::count(CellKind k) const noexcept {
    return static_cast<std::size_t>(std::count(kinds_.begin(), kinds_.end(), k));
}

std::vector<std::size_t> Geometry::cells_in_ball(double z, double r) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_cells_; ++i)
        if (std::fabs(centers_[i] - z) < r) out.push_back(i);
    return out;
}

Geometry build_geometry(IntervalUnion omega, Interval omega_prime, std::size_t n_cells) {
    return Geometry(std::move(omega), omega_prime, n_cells);
}

bool on_boundary(const IntervalUnion& omega, double x0) noexcept {
    for (double b : omega.boundary())
        if (std::fabs(b - x0) <= 1e-12 * std::max(1.0, std::fabs(b))) return true;
    return false;
}

DensityReport measure_density(const Geometry& geom, double x0, std::span<const double> radii) {
    if (!on_boundary(geom.omega(), x0)) throw DomainError("density point must lie on the boundary of the constraint domain");
    if (radii.empty()) throw DomainError("at least one radius is required");
    DensityReport rep{x0, {}, {}, std::numeric_limits<double>::infinity()};
    for (double r : radii) {
        if (!(r > 0.0 && r < geom.boundary_gap()))
            throw DomainError("density radii must lie in (0, dist(omega, boundary))");
        const double inside = geom.omega().measure_within(x0 - r, x0 + r);
        const double density = std::clamp(1.0 - inside / (2.0 * r), 0.0, 1.0);
        rep.radii.push_back(r);
        rep.densities.push_back(density);
        rep.delta_omega = std::min(rep.delta_omega, density);
    }
    return rep;
}

}  // namespace nlobs
