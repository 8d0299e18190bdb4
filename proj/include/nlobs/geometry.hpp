#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nlobs {

/// Open interval (lo, hi).
struct Interval {
    double lo;
    double hi;

    double length() const noexcept { return hi - lo; }
    bool contains(double x) const noexcept { return x > lo && x < hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite union of pairwise disjoint open intervals, kept sorted.
class IntervalUnion {
public:
    IntervalUnion() = default;
    explicit IntervalUnion(std::vector<Interval> parts);

    const std::vector<Interval>& parts() const noexcept { return parts_; }
    bool empty() const noexcept { return parts_.empty(); }
    bool contains(double x) const noexcept;
    double measure() const noexcept;
    /// |U ∩ (lo, hi)| by interval arithmetic.
    double measure_within(double lo, double hi) const noexcept;
    double inf() const noexcept { return parts_.front().lo; }
    double sup() const noexcept { return parts_.back().hi; }
    /// Sorted endpoints; the topological boundary of the union.
    std::vector<double> boundary() const;

    friend bool operator==(const IntervalUnion&, const IntervalUnion&) = default;

private:
    std::vector<Interval> parts_;
};

enum class CellKind : std::uint8_t { Interior, Collar };

/// Uniform cell partition of Ω' with each cell labelled by whether its center lies in Ω.
class Geometry {
public:
    Geometry(IntervalUnion omega, Interval omega_prime, std::size_t n_cells);

    const IntervalUnion& omega() const noexcept { return omega_; }
    const Interval& omega_prime() const noexcept { return omega_prime_; }
    std::size_t n_cells() const noexcept { return n_cells_; }
    double cell_width() const noexcept { return width_; }

    double center(std::size_t i) const noexcept { return centers_[i]; }
    double cell_lo(std::size_t i) const noexcept;
    double cell_hi(std::size_t i) const noexcept;
    std::span<const double> centers() const noexcept { return centers_; }
    CellKind kind(std::size_t i) const noexcept { return kinds_[i]; }
    bool interior(std::size_t i) const noexcept { return kinds_[i] == CellKind::Interior; }
    std::span<const CellKind> kinds() const noexcept { return kinds_; }

    /// Indices of the INTERIOR cells in ascending order.
    std::span<const std::size_t> interior_cells() const noexcept { return interior_; }
    std::size_t count(CellKind k) const noexcept;

    /// dist(Ω, ∂Ω') > 0.
    double boundary_gap() const noexcept { return gap_; }
    double diameter() const noexcept { return omega_prime_.length(); }

    /// Indices of cells whose centers lie strictly inside (z - r, z + r).
    std::vector<std::size_t> cells_in_ball(double z, double r) const;

    friend bool operator==(const Geometry& a, const Geometry& b) {
        return a.omega_ == b.omega_ && a.omega_prime_ == b.omega_prime_ &&
               a.n_cells_ == b.n_cells_;
    }

private:
    IntervalUnion omega_;
    Interval omega_prime_;
    std::size_t n_cells_;
    double width_;
    double gap_;
    std::vector<double> centers_;
    std::vector<CellKind> kinds_;
    std::vector<std::size_t> interior_;
};

/// Validating factory; throws ConfigError rather than clipping.
Geometry build_geometry(IntervalUnion omega, Interval omega_prime, std::size_t n_cells);

inline constexpr std::size_t kMinCells = 8;

struct DensityReport {
    double boundary_point;
    std::vector<double> radii;
    std::vector<double> densities;
    double delta_omega;
};

/// |(R \ Ω) ∩ B_r(x0)| / |B_r(x0)| for each radius, exactly by interval arithmetic.
DensityReport measure_density(const Geometry& geom, double x0, std::span<const double> radii);

/// True when x0 coincides with an endpoint of Ω up to a relative 1e-12.
bool on_boundary(const IntervalUnion& omega, double x0) noexcept;

}  // namespace nlobs
