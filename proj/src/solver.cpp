#include "nlobs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "nlobs/error.hpp"
#include "nlobs/random.hpp"

namespace nlobs {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

GridFunction initial_iterate(const GridFunction& g, const std::optional<GridFunction>& h) {
    GridFunction u = g;
    if (h)
        for (std::size_t i : g.geometry().interior_cells()) u[i] = std::max(g[i], (*h)[i]);
    return u;
}

// Root of the strictly increasing F(t) = row(i, t, u) projected onto t >= lower.
class NodeSolver {
public:
    NodeSolver(const DiscreteOperator& op, std::size_t i, std::span<const double> u, ScalarSolver kind)
        : op_(op), i_(i), u_(u), kind_(kind) {}

    double solve(double start, double lower) {
        if (std::isfinite(lower)) {
            if (eval(lower) >= 0.0) return lower;
            start = std::max(start, lower);
        }
        const double f0 = eval(start);
        if (f0 == 0.0) return start;
        double a, b;
        double step = 1e-3 * (1.0 + std::fabs(start));
        if (f0 < 0.0) {
            a = start;
            b = start + step;
            while (eval(b) < 0.0) {
                a = b;
                step *= 4.0;
                b = start + step;
                if (!std::isfinite(b)) throw DomainError("scalar root bracket diverged");
            }
        } else {
            b = start;
            a = start - step;
            if (std::isfinite(lower)) a = std::max(a, lower);
            while (eval(a) > 0.0) {
                b = a;
                step *= 4.0;
                a = start - step;
                if (std::isfinite(lower)) a = std::max(a, lower);
                if (!std::isfinite(a)) throw DomainError("scalar root bracket diverged");
            }
        }
        const double t = kind_ == ScalarSolver::Bisection ? bisect(a, b) : newton(a, b, start);
        return std::isfinite(lower) ? std::max(t, lower) : t;
    }

private:
    double eval(double t) const { return op_.row(i_, t, u_); }

    static bool narrow(double a, double b) { return b - a <= 1e-14 * std::max({1.0, std::fabs(a), std::fabs(b)}); }

    double bisect(double a, double b) const {
        while (!narrow(a, b)) {
            const double m = 0.5 * (a + b);
            if (!(m > a && m < b)) break;
            const double f = eval(m);
            if (f == 0.0) return m;
            (f < 0.0 ? a : b) = m;
        }
        return 0.5 * (a + b);
    }

    double newton(double a, double b, double t) const {
        if (!(t > a && t < b)) t = 0.5 * (a + b);
        for (int it = 0; it < 200; ++it) {
            const auto vs = op_.row_slope(i_, t, u_);
            if (vs.value == 0.0) return t;
            (vs.value < 0.0 ? a : b) = t;
            double next = t - vs.value / vs.slope;
            if (!std::isfinite(next) || !(next > a && next < b)) next = 0.5 * (a + b);
            const bool done = std::fabs(next - t) <= 4.0 * kEps * std::max(1.0, std::fabs(t)) || narrow(a, b);
            t = next;
            if (done) return t;
        }
        return bisect(a, b);
    }

    const DiscreteOperator& op_;
    std::size_t i_;
    std::span<const double> u_;
    ScalarSolver kind_;
};

}  // namespace

ObstacleInstance::ObstacleInstance(std::shared_ptr<const DiscreteOperator> op, std::optional<GridFunction> obstacle)
    : op_(std::move(op)),
      g_grid_(op_ ? GridFunction(op_->geometry_ptr(), op_->coupling().g_at_centers())
                  : throw ContractError("instance needs an operator")),
      h_(std::move(obstacle)),
      init_(initial_iterate(g_grid_, h_)) {
    if (h_ && !(h_->geometry() == geometry())) throw ContractError("obstacle lives on a different geometry");
}

ObstacleInstance ObstacleInstance::build(const Geometry& geom, const KernelSpec& spec, const ExteriorData& g,
                                         const std::function<double(double)>* obstacle, CouplingOptions opts,
                                         const std::filesystem::path& cache_dir) {
    auto gp = std::make_shared<const Geometry>(geom);
    auto w = std::make_shared<const WeightMatrix>(cache_dir.empty() ? assemble_weights(geom, spec)
                                                                    : cached_weights(geom, spec, cache_dir));
    auto c = std::make_shared<const ExteriorCoupling>(gp, spec, g, std::move(opts));
    auto op = std::make_shared<const DiscreteOperator>(std::move(w), std::move(c));
    std::optional<GridFunction> h;
    if (obstacle) h = GridFunction::sample(gp, *obstacle);
    return ObstacleInstance(std::move(op), std::move(h));
}

void ObstacleInstance::require_feasible(const GridFunction& u) const {
    op_->require_boundary_values(u);
    if (h_)
        for (std::size_t i : geometry().interior_cells())
            if (!(u[i] >= (*h_)[i])) throw ContractError("iterate lies below the obstacle");
}

double complementarity_norm(const ObstacleInstance& inst, const GridFunction& u, const GridFunction& F) {
    double worst = 0.0;
    for (std::size_t i : inst.geometry().interior_cells()) {
        const double gap = u[i] - inst.obstacle(i);
        worst = std::max(worst, std::fabs(std::min(F[i], gap)));
    }
    return worst;
}

namespace {

double free_residual_norm(const ObstacleInstance& inst, const GridFunction& u, const GridFunction& F) {
    double worst = 0.0;
    for (std::size_t i : inst.geometry().interior_cells())
        if (u[i] > inst.obstacle(i)) worst = std::max(worst, std::fabs(F[i]));
    return worst;
}

}  // namespace

SolveResult solve(const ObstacleInstance& inst, const SolveConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
    if (cfg.max_sweeps < 0) throw ConfigError("max_sweeps must be nonnegative");
    GridFunction u = cfg.initial ? *cfg.initial : inst.default_initial();
    inst.require_feasible(u);
    const DiscreteOperator& op = inst.op();
    const auto cells = inst.geometry().interior_cells();

    SolveResult res{.u = u, .residual = residual(op, u), .energy_trace = {}};
    res.energy_trace.push_back(energy(op, u));
    res.complementarity_norm = complementarity_norm(inst, u, res.residual);
    res.converged = res.complementarity_norm <= cfg.tol;

    auto update = [&](std::size_t i) {
        NodeSolver ns(op, i, u.values(), cfg.scalar_solver);
        u[i] = ns.solve(u[i], inst.obstacle(i));
    };
    while (!res.converged && res.sweeps < cfg.max_sweeps) {
        for (std::size_t i : cells) update(i);
        for (auto it = cells.rbegin(); it != cells.rend(); ++it) update(*it);
        ++res.sweeps;
        res.residual = residual(op, u);
        res.energy_trace.push_back(energy(op, u));
        res.complementarity_norm = complementarity_norm(inst, u, res.residual);
        res.converged = res.complementarity_norm <= cfg.tol;
    }
    res.residual_norm = free_residual_norm(inst, u, res.residual);
    res.u = std::move(u);
    return res;
}

SupersolutionReport check_supersolution(const ObstacleInstance& inst, const GridFunction& u, double tol) {
    const GridFunction F = residual(inst.op(), u);
    SupersolutionReport rep{std::numeric_limits<double>::infinity(), 0, true};
    for (std::size_t i : inst.geometry().interior_cells()) {
        if (F[i] < rep.min_pairing) {
            rep.min_pairing = F[i];
            rep.argmin = i;
        }
    }
    rep.is_supersolution = rep.min_pairing >= -tol;
    return rep;
}

GridFunction random_feasible(const ObstacleInstance& inst, std::uint64_t seed, double spread) {
    SampleStream rng(seed);
    GridFunction u = inst.default_initial();
    for (std::size_t i : inst.geometry().interior_cells()) {
        const double shifted = u[i] + spread * rng.uniform(-1.0, 1.0);
        u[i] = std::max(shifted, inst.obstacle(i));
    }
    return u;
}

UniquenessReport verify_uniqueness(const ObstacleInstance& inst, const SolveConfig& cfg, int n_inits,
                                   std::uint64_t seed) {
    if (n_inits < 1) throw DomainError("uniqueness check needs at least one initialization");
    std::vector<std::optional<SolveResult>> runs(static_cast<std::size_t>(n_inits));
    {
        std::vector<std::jthread> pool;
        for (int k = 0; k < n_inits; ++k) {
            pool.emplace_back([&, k] {
                SolveConfig c = cfg;
                c.initial = random_feasible(inst, derive_seed(seed, static_cast<std::uint64_t>(k)));
                runs[static_cast<std::size_t>(k)] = solve(inst, c);
            });
        }
    }
    UniquenessReport rep;
    rep.runs = n_inits;
    std::vector<const GridFunction*> ok;
    for (const auto& r : runs) {
        if (r->converged)
            ok.push_back(&r->u);
        else
            ++rep.non_converged;
    }
    for (std::size_t a = 0; a < ok.size(); ++a)
        for (std::size_t b = a + 1; b < ok.size(); ++b)
            for (std::size_t i = 0; i < ok[a]->size(); ++i)
                rep.max_pairwise_sup_diff = std::max(rep.max_pairwise_sup_diff, std::fabs((*ok[a])[i] - (*ok[b])[i]));
    return rep;
}

SmallestSupersolutionReport verify_smallest_supersolution(const ObstacleInstance& inst, const GridFunction& u,
                                                          const GridFunction& v, double tol) {
    inst.require_feasible(v);
    if (!check_supersolution(inst, v, tol).is_supersolution)
        throw ContractError("comparison function is not a discrete supersolution");
    require_same_geometry(u, v);
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, u[i] - v[i]);
    return {worst <= tol, worst};
}

double default_contact_tol(const ObstacleInstance& inst) {
    double hmax = 0.0;
    if (inst.has_obstacle())
        for (std::size_t i : inst.geometry().interior_cells()) hmax = std::max(hmax, std::fabs(inst.obstacle(i)));
    return 1e-6 * (1.0 + hmax);
}

ContactReport contact_set_and_free_residual(const ObstacleInstance& inst, const GridFunction& u, double contact_tol) {
    if (!inst.has_obstacle()) throw ContractError("contact set needs a finite obstacle");
    const GridFunction F = residual(inst.op(), u);
    ContactReport rep;
    rep.contact.assign(u.size(), false);
    for (std::size_t i : inst.geometry().interior_cells()) {
        if (u[i] - inst.obstacle(i) <= contact_tol) {
            rep.contact[i] = true;
            ++rep.contact_count;
        } else {
            rep.max_free_residual = std::max(rep.max_free_residual, std::fabs(F[i]));
        }
    }
    return rep;
}

}  // namespace nlobs
