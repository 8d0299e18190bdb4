#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlobs/core_ops.hpp"
#include "nlobs/geometry.hpp"
#include "nlobs/grid_function.hpp"
#include "nlobs/simd/kernels.hpp"
#include "nlobs/tail.hpp"

namespace nlobs {

/// ∬_{[0,1]×[k,k+1]} |x-y|^{-1-sigma} dx dy for k >= 1. For sigma >= 1 the k = 1
/// integral diverges and the center-distance value 1 is returned instead.
double unit_pair_integral(std::size_t k, double sigma);

/// Dense symmetric pair weights, row-major, zero diagonal.
class WeightMatrix {
public:
    WeightMatrix(std::size_t n, std::vector<double> data);

    std::size_t n() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
    const double* row(std::size_t i) const noexcept { return data_.data() + i * n_; }
    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

private:
    std::size_t n_;
    std::vector<double> data_;
};

/// w_ij = a(x_i, x_j) h^{1-sp} S(|i-j|); rows are filled in parallel.
WeightMatrix assemble_weights(const Geometry& geom, const KernelSpec& spec, unsigned threads = 0);

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(const std::string& bytes);
/// Lowercase hex of the first `bytes` bytes.
std::string hex_prefix(const Digest& d, std::size_t bytes = 32);

Digest geometry_hash(const Geometry& geom);
Digest kernel_hash(const KernelSpec& spec);

/// Binary cache: "NLOBSWM1", geometry digest, kernel digest, n as u64, then n*n
/// little-endian doubles.
void save_weights(const std::filesystem::path& file, const WeightMatrix& w, const Digest& geom,
                  const Digest& kernel);
/// nullopt when the file is missing, malformed or keyed differently.
std::optional<WeightMatrix> load_weights(const std::filesystem::path& file, const Digest& geom,
                                         const Digest& kernel);
/// Load from `dir` when a matching file exists, otherwise assemble and store.
WeightMatrix cached_weights(const Geometry& geom, const KernelSpec& spec, const std::filesystem::path& dir);

struct CouplingOptions {
    /// Graded panel growth ratio.
    double ratio = 1.5;
    /// |u| up to which the far-field power series is used without a numeric extension.
    double u_bound = 16.0;
    /// Cells coupled to the exterior: those with centers in this set (default Ω).
    std::optional<IntervalUnion> region;
};

/// Exterior quadrature against K(x_i, ·) on R \ Ω' for every coupled cell,
/// with the far field beyond the numeric range handled analytically.
class ExteriorCoupling {
public:
    ExteriorCoupling(std::shared_ptr<const Geometry> geom, KernelSpec spec, ExteriorData g,
                     CouplingOptions opts = {});

    const Geometry& geometry() const noexcept { return *geom_; }
    const std::shared_ptr<const Geometry>& geometry_ptr() const noexcept { return geom_; }
    const KernelSpec& kernel() const noexcept { return spec_; }
    const FractionalOrder& order() const noexcept { return spec_.order(); }
    const ExteriorData& exterior() const noexcept { return g_; }
    const CouplingOptions& options() const noexcept { return opts_; }

    bool covers(std::size_t cell) const noexcept { return slot_[cell] != kNone; }
    std::span<const std::size_t> cells() const noexcept { return cells_; }

    /// ∫_{R\Ω'} L(u, g(y)) K(x_i, y) dy.
    double l_term(std::size_t cell, double u, const simd::KernelTable& k) const;
    /// l_term and its derivative in u.
    simd::ValueSlope l_term_slope(std::size_t cell, double u, const simd::KernelTable& k) const;
    /// ∫_{R\Ω'} |u - g(y)|^p K(x_i, y) dy; for unbounded g the divergent part
    /// |g(y)|^p is subtracted beyond the numeric range.
    double energy_term(std::size_t cell, double u, const simd::KernelTable& k) const;
    /// ∫_{R\Ω'} K(x_i, y) dy as represented by the quadrature.
    double total_weight(std::size_t cell) const noexcept;

    std::span<const double> node_points(std::size_t cell) const noexcept;
    std::span<const double> node_weights(std::size_t cell) const noexcept;
    std::span<const double> node_values(std::size_t cell) const noexcept;

    /// Sampled g at every cell center (boundary values on the COLLAR).
    const std::vector<double>& g_at_centers() const noexcept { return g_centers_; }

    struct FarTerm {
        enum class Kind { None, Constant, Power };
        Kind kind = Kind::None;
        double coef = 0.0;
        /// Constant: g value and coef ∫_{beyond} K.
        double value = 0.0;
        double weight = 0.0;
        /// Power: start of the analytic range, center, exponent.
        double start = 0.0;
        double center = 0.0;
        double beta = 0.0;
        double u_limit = 0.0;
        /// far_L(u) = Σ_j l[j] u^j, far_E(u) = Σ_j e[j] u^j (e[0] = 0).
        std::vector<double> l;
        std::vector<double> e;
    };

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    /// One GL8 panel of the numeric range; g_lo, g_hi are g just inside its ends.
    struct PanelRecord {
        double lo, hi;
        std::size_t first;
        double g_lo, g_hi;
    };
    enum class Integrand { L, Slope, Energy };
    /// Correction for panels where g - u changes sign: the kink of |u - g|^q is
    /// resolved by geometric refinement around the crossing instead of plain GL8.
    double crossing_correction(std::size_t slot, double u, Integrand which) const;

    double far_l(const FarTerm& f, double u, double* slope) const;
    double far_e(const FarTerm& f, double u) const;

    std::shared_ptr<const Geometry> geom_;
    KernelSpec spec_;
    ExteriorData g_;
    CouplingOptions opts_;
    std::vector<std::size_t> slot_;
    std::vector<std::size_t> cells_;
    std::vector<std::size_t> offsets_;
    std::vector<double> points_;
    std::vector<double> weights_;
    std::vector<double> values_;
    std::vector<PanelRecord> panels_;
    std::vector<std::size_t> panel_offsets_;
    std::vector<std::array<FarTerm, 2>> far_;
    std::vector<double> g_centers_;
};

/// Σ_{i<j} 2 L(u_i, u_j)(v_i - v_j) w_ij, summed pair by pair.
double apply_A1(const WeightMatrix& w, const GridFunction& u, const GridFunction& v, double p);

/// 2 Σ_{coupled i} v_i h l_term(i, u_i). Throws ContractError if v is nonzero on a COLLAR cell.
double apply_A2(const ExteriorCoupling& c, const GridFunction& u, const GridFunction& v);

/// Rows of the discrete operator on a fixed geometry; the solver's inner loop.
class DiscreteOperator {
public:
    DiscreteOperator(std::shared_ptr<const WeightMatrix> w, std::shared_ptr<const ExteriorCoupling> c,
                     const simd::KernelTable* kernels = nullptr);

    const WeightMatrix& weights() const noexcept { return *w_; }
    const ExteriorCoupling& coupling() const noexcept { return *c_; }
    const Geometry& geometry() const noexcept { return c_->geometry(); }
    const std::shared_ptr<const Geometry>& geometry_ptr() const noexcept { return c_->geometry_ptr(); }
    const FractionalOrder& order() const noexcept { return c_->order(); }
    const simd::KernelTable& kernels() const noexcept { return *k_; }

    /// F_i with u_i replaced by t: 2 Σ_j w_ij L(t, u_j) + 2h l_term(i, t).
    double row(std::size_t i, double t, std::span<const double> u) const;
    simd::ValueSlope row_slope(std::size_t i, double t, std::span<const double> u) const;

    /// Throws ContractError unless u = g on every COLLAR cell.
    void require_boundary_values(const GridFunction& u) const;

private:
    std::shared_ptr<const WeightMatrix> w_;
    std::shared_ptr<const ExteriorCoupling> c_;
    const simd::KernelTable* k_;
};

/// F_i(u) on INTERIOR cells, 0 on COLLAR.
GridFunction residual(const DiscreteOperator& op, const GridFunction& u);

/// (1/p) Σ_{i≠j} |u_i-u_j|^p w_ij + (2/p) Σ_{i INTERIOR} h energy_term(i, u_i),
/// accumulated with compensated summation.
double energy(const DiscreteOperator& op, const GridFunction& u);

/// Discrete W^{s,p}(Ω') norm: (Σ_{i,j} |v_i-v_j|^p w_ij + h Σ |v_i|^p)^{1/p}.
double sobolev_norm(const WeightMatrix& w, const GridFunction& v, double p);

struct DualNormReport {
    double a1;
    double a2;
    /// |A1 u(v)| / (‖u‖^{p-1} ‖v‖), 0 when the denominator vanishes.
    double a1_ratio;
    /// |A2 u(v)| / (r^{-sp}(‖u‖^{p-1} + Tail(g; z, r)^{p-1}) ‖v‖).
    double a2_ratio;
    bool a1_bound_ok;
    bool a2_bound_ok;
};

/// Both dual-space bounds with constant c, z the midpoint of the first component
/// of Ω and r = dist(Ω, ∂Ω').
DualNormReport dual_norm_bounds(const DiscreteOperator& op, const GridFunction& u, const GridFunction& v,
                                double c);

}  // namespace nlobs
