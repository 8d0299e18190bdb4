#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlobs/solver.hpp"

namespace nlobs {

/// One measurement of a probe: a value at a resolution and radius.
struct ProbeRow {
    std::size_t resolution;
    double radius;
    double measured;
};

/// Empirical outcome of a regularity probe. Constants and exponents are fitted,
/// never asserted.
struct ProbeReport {
    std::string probe_name;
    std::string instance_hash;
    std::vector<ProbeRow> rows;
    std::optional<double> fitted_exponent;
    std::optional<double> fitted_constant;
    /// RMS residual of the log-log fit behind fitted_exponent.
    std::optional<double> fit_residual;
    bool passed = false;
    std::string notes;
};

/// SHA-256 over geometry, kernel, exterior datum and obstacle samples, in hex.
std::string instance_hash(const ObstacleInstance& inst);

struct LogLogFit {
    double slope;
    /// exp(intercept): value ≈ constant · radius^slope.
    double constant;
    /// RMS of the residuals in log space.
    double residual;
};

/// Ordinary least squares of log(value) on log(radius). Needs >= 4 pairs with
/// positive entries, otherwise InsufficientDataError.
LogLogFit fit_loglog(std::span<const double> radii, std::span<const double> values);

/// max - min of u over cell centers strictly inside B_rho(x0); nullopt when no
/// center lies inside.
std::optional<double> oscillation(const GridFunction& u, double x0, double rho);

/// Upper bound on the data near x0: max{sup_{B_r∩Ω} h, sup_{B_r\Ω} g} over cell centers;
/// -inf when both sets are empty.
double local_data_sup(const ObstacleInstance& inst, double x0, double r);

inline constexpr double kSupBoundConstantCap = 1e6;

/// Local sup estimate: for every δ checks
///   sup_{B_{r/2}} (u-m)_+ <= δ Tail((u-m)_+; x0, r/2) + c δ^{-γ} (mean_{B_r} (u-m)_+^t)^{1/t}
/// and reports the smallest lattice γ >= 0 admitting a lattice c <= 1e6, with that c.
/// Rows hold the constant each δ needs at the fitted γ. Throws ContractError when
/// m is below the local data bound and DomainError unless B_r(x0) ⊂ Ω' and t ∈ (0, p).
ProbeReport probe_sup_bound(const ObstacleInstance& inst, const GridFunction& u, double x0, double r, double m,
                            double t, std::span<const double> deltas);

/// Balls with fewer cell centers sit on the mesh floor and are left out of decay fits.
inline constexpr std::size_t kMinBallCells = 8;

/// Modulus of the obstacle on B_rho(x0).
using ObstacleModulus = std::function<double(double rho)>;

inline constexpr double kInteriorFitResidualCap = 0.1;

/// Oscillation decay around an interior point. Radii outside (0, r/4], radii whose
/// ball holds fewer than kMinBallCells centers, and radii where omega_h(rho) exceeds
/// half the measured oscillation are dropped before the fit. Passes when the fitted
/// exponent is positive with fit residual <= 0.1, or when u is constant on B_r.
ProbeReport probe_interior_oscillation(const ObstacleInstance& inst, const GridFunction& u, double x0, double r,
                                       std::span<const double> rhos, const ObstacleModulus& omega_h = {});

inline constexpr double kBoundaryTailWeight = 1e-2;

/// Decay of osc_{B_rho} u + sigma_probe Tail(u - g(x0); x0, rho) at a boundary point,
/// over radii whose ball holds at least kMinBallCells centers.
/// Passes when the fitted exponent is positive or every measurement vanishes.
/// Throws DomainError when x0 is not on ∂Ω and ContractError when the density report
/// shows no positive density.
ProbeReport probe_boundary_oscillation(const ObstacleInstance& inst, const GridFunction& u, double x0,
                                       std::span<const double> radii, const DensityReport& density,
                                       double sigma_probe = kBoundaryTailWeight);

struct CaccioppoliTerms {
    double lhs = 0.0;
    double rhs_energy = 0.0;
    double rhs_tail = 0.0;
    /// lhs / (rhs_energy + rhs_tail); 0 when both sides vanish.
    double ratio = 0.0;
};

/// Cutoff 1 on B_{r/2}(x0), 0 outside B_{3r/4}(x0), linear in between.
double tent_cutoff(double x, double x0, double r) noexcept;

/// Discrete terms of the boundary energy estimate for w = (u - k)_+ (sign +1) or
/// (k - u)_+ (sign -1), with u extended by g outside Ω'. Pair sums run over cells with
/// centers in B_r(x0); the tail factor takes the sup over cells where the cutoff is
/// positive of Σ_{cells outside B_r} w^{p-1} w_ij / h plus the exterior integral.
CaccioppoliTerms caccioppoli_terms(const ObstacleInstance& inst, const GridFunction& u, double x0, double r,
                                   double k, int sign);

/// Both signs of the estimate at a boundary point. A sign is skipped when its level is
/// absent. Rows hold the ratio per active sign (radius r); fitted_constant is the
/// largest ratio. Throws ContractError when a level violates its data bound and
/// InsufficientDataError when both are absent.
ProbeReport check_caccioppoli(const ObstacleInstance& inst, const GridFunction& u, double x0, double r,
                              std::optional<double> k_plus, std::optional<double> k_minus);

/// (1 - (1 - δ)^{1 - 1/p})^{-p}.
double density_poincare_factor(double delta, double p);

struct PoincareTerms {
    /// mean_B |f|^p.
    double lhs = 0.0;
    /// r^{sp} (1/|B|) Σ_{i,j ∈ B} |f_i - f_j|^p w_ij.
    double seminorm = 0.0;
};

/// Sums over cells with centers in B_r(x0); |B| is the measure of those cells.
/// Throws ContractError when f is nonzero on a cell of B outside Ω.
PoincareTerms poincare_terms(const WeightMatrix& w, const GridFunction& f, double x0, double r, double p,
                             double sp);

/// Smallest c_fit with LHS <= c_fit c_δ RHS for every f in the suite, c_δ the density
/// factor at density.delta_omega. Rows hold the constant each function needs.
/// Throws ContractError when the density is not positive.
ProbeReport check_density_poincare(const ObstacleInstance& inst, std::span<const GridFunction> fs, double x0,
                                   double r, const DensityReport& density);

/// Seeded smooth functions supported in Ω ∩ B_r(x0): each component of the intersection
/// carries a random combination of the first four sine modes vanishing at its ends.
std::vector<GridFunction> random_poincare_suite(const std::shared_ptr<const Geometry>& geom, double x0, double r,
                                                std::size_t count, std::uint64_t seed);

/// True when the fitted constants of two reports agree within `factor`.
bool constants_agree(const ProbeReport& coarse, const ProbeReport& fine, double factor = 2.0);

/// Builds the instance at a given resolution.
using InstanceFamily = std::function<ObstacleInstance(std::size_t n_cells)>;

/// Reference for a refinement study: an explicit function, or the finest solve.
struct RefinementReference {
    std::function<double(double)> exact;
    static RefinementReference explicit_solution(std::function<double(double)> f) { return {std::move(f)}; }
    static RefinementReference self() { return {}; }
    bool is_self() const noexcept { return !exact; }
};

struct StudyConfig {
    SolveConfig solve;
    /// Every successive error ratio must reach this bound.
    double min_ratio = 1.3;
};

/// Solves the family at nested resolutions concurrently and reports sup-norm errors
/// on INTERIOR cells. Against the finest solve, coarse cells compare with the mean of
/// the fine cells they contain. Rows hold the error per resolution (radius 0),
/// fitted_exponent the observed order. Throws ConfigError unless there are >= 3
/// resolutions, each dividing the next.
ProbeReport refinement_study(const InstanceFamily& family, std::span<const std::size_t> resolutions,
                             const RefinementReference& reference, const StudyConfig& cfg = {});

}  // namespace nlobs
