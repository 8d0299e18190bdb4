#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "nlobs/assembly.hpp"

namespace nlobs {

/// Discrete obstacle problem: u = g on COLLAR cells, u >= h on INTERIOR cells.
/// Without an obstacle (h ≡ -inf) this is the Dirichlet problem.
class ObstacleInstance {
public:
    ObstacleInstance(std::shared_ptr<const DiscreteOperator> op, std::optional<GridFunction> obstacle);

    /// Assembles weights (through the cache when `cache_dir` is nonempty) and coupling.
    static ObstacleInstance build(const Geometry& geom, const KernelSpec& spec, const ExteriorData& g,
                                  const std::function<double(double)>* obstacle, CouplingOptions opts = {},
                                  const std::filesystem::path& cache_dir = {});

    const DiscreteOperator& op() const noexcept { return *op_; }
    const std::shared_ptr<const DiscreteOperator>& op_ptr() const noexcept { return op_; }
    const Geometry& geometry() const noexcept { return op_->geometry(); }
    const std::shared_ptr<const Geometry>& geometry_ptr() const noexcept { return op_->geometry_ptr(); }
    const FractionalOrder& order() const noexcept { return op_->order(); }
    const ExteriorData& exterior() const noexcept { return op_->coupling().exterior(); }

    /// g sampled at every cell center.
    const GridFunction& g_grid() const noexcept { return g_grid_; }
    bool has_obstacle() const noexcept { return h_.has_value(); }
    /// h on INTERIOR cells; -inf without an obstacle.
    double obstacle(std::size_t i) const noexcept {
        return h_ ? (*h_)[i] : -std::numeric_limits<double>::infinity();
    }
    const std::optional<GridFunction>& obstacle_grid() const noexcept { return h_; }

    /// max(g, h) on INTERIOR, g on COLLAR.
    const GridFunction& default_initial() const noexcept { return init_; }

    /// Throws ContractError unless u = g on COLLAR and u >= h on INTERIOR.
    void require_feasible(const GridFunction& u) const;

private:
    std::shared_ptr<const DiscreteOperator> op_;
    GridFunction g_grid_;
    std::optional<GridFunction> h_;
    GridFunction init_;
};

enum class ScalarSolver { Bisection, SafeguardedNewton };

struct SolveConfig {
    double tol = 1e-8;
    int max_sweeps = 100000;
    ScalarSolver scalar_solver = ScalarSolver::SafeguardedNewton;
    /// Initial iterate; the instance's default when absent.
    std::optional<GridFunction> initial;
};

struct SolveResult {
    GridFunction u;
    GridFunction residual;
    int sweeps = 0;
    /// max |F_i| over INTERIOR cells strictly above the obstacle.
    double residual_norm = 0.0;
    /// max over INTERIOR of |min(F_i, u_i - h_i)|.
    double complementarity_norm = 0.0;
    bool converged = false;
    /// J(u) after every sweep, starting with the initial iterate.
    std::vector<double> energy_trace;
};

/// Projected nonlinear Gauss-Seidel with symmetric (ascending then descending) sweeps.
SolveResult solve(const ObstacleInstance& inst, const SolveConfig& cfg = {});

/// max over INTERIOR of |min(F_i, u_i - h_i)|, or max |F_i| without an obstacle.
double complementarity_norm(const ObstacleInstance& inst, const GridFunction& u, const GridFunction& F);

struct SupersolutionReport {
    /// min over INTERIOR cells of F_i(u), the pairing with the cell indicator e_i.
    double min_pairing;
    std::size_t argmin;
    bool is_supersolution;
};

/// ⟨𝒜u, η⟩ >= 0 for every nonnegative η reduces to F_i(u) >= 0 at every INTERIOR cell.
SupersolutionReport check_supersolution(const ObstacleInstance& inst, const GridFunction& u, double tol = 1e-8);

struct UniquenessReport {
    double max_pairwise_sup_diff = 0.0;
    int runs = 0;
    int non_converged = 0;
};

/// Solves from `n_inits` random feasible starts concurrently and compares converged runs.
UniquenessReport verify_uniqueness(const ObstacleInstance& inst, const SolveConfig& cfg, int n_inits,
                                   std::uint64_t seed);

/// Random feasible iterate: obstacle/boundary-respecting perturbation of the default start.
GridFunction random_feasible(const ObstacleInstance& inst, std::uint64_t seed, double spread = 1.0);

struct SmallestSupersolutionReport {
    bool holds;
    /// max_i (u_i - v_i), clamped below at 0.
    double max_violation;
};

/// u <= v + tol cellwise. Throws ContractError unless v is a feasible discrete supersolution.
SmallestSupersolutionReport verify_smallest_supersolution(const ObstacleInstance& inst, const GridFunction& u,
                                                          const GridFunction& v, double tol = 1e-8);

struct ContactReport {
    std::vector<bool> contact;
    std::size_t contact_count = 0;
    /// max |F_i| over INTERIOR cells off the contact set; 0 when that set is empty.
    double max_free_residual = 0.0;
};

/// Default contact tolerance 1e-6 (1 + max|h|).
double default_contact_tol(const ObstacleInstance& inst);

/// Throws ContractError without a finite obstacle.
ContactReport contact_set_and_free_residual(const ObstacleInstance& inst, const GridFunction& u, double contact_tol);

}  // namespace nlobs
