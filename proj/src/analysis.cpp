#include "nlobs/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "nlobs/error.hpp"
#include "nlobs/random.hpp"

namespace nlobs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void append_hex(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
    out.append(buf, res.ptr);
    out.push_back(';');
}

std::string describe(const ExteriorData& g) {
    std::string s = "data;";
    std::visit(Overloaded{
                   [&](const ConstantData& c) {
                       s += "constant;";
                       append_hex(s, c.value);
                   },
                   [&](const PowerPlusData& c) {
                       s += "power_plus;";
                       append_hex(s, c.beta);
                   },
                   [&](const IndicatorData& c) {
                       s += "indicator;";
                       for (const auto& iv : c.set.parts()) {
                           append_hex(s, iv.lo);
                           append_hex(s, iv.hi);
                       }
                       append_hex(s, c.value);
                   },
                   [&](const TableData& c) {
                       s += "table;";
                       for (double x : c.x) append_hex(s, x);
                       s += "|";
                       for (double v : c.values) append_hex(s, v);
                   },
               },
               g.form());
    if (g.r_inf()) append_hex(s, *g.r_inf());
    return s;
}

void require_ball_in_domain(const Geometry& geom, double x0, double r) {
    if (!(r > 0.0) || !std::isfinite(x0)) throw DomainError("probe radius must be positive");
    if (x0 - r < geom.omega_prime().lo || x0 + r > geom.omega_prime().hi)
        throw DomainError("probe ball leaves the computational domain");
}

double pos(double v) noexcept { return v > 0.0 ? v : 0.0; }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Radii that passed the mesh-floor filter and their measurements.
struct Series {
    std::vector<double> radii;
    std::vector<double> values;
};

bool all_zero(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

void attach_fit(ProbeReport& rep, const Series& s) {
    const LogLogFit fit = fit_loglog(s.radii, s.values);
    rep.fitted_exponent = fit.slope;
    rep.fitted_constant = fit.constant;
    rep.fit_residual = fit.residual;
}

}  // namespace

std::string instance_hash(const ObstacleInstance& inst) {
    std::string s = "instance;" + hex_prefix(geometry_hash(inst.geometry())) + ";" +
                    hex_prefix(kernel_hash(inst.op().coupling().kernel())) + ";" + describe(inst.exterior());
    const auto& opts = inst.op().coupling().options();
    s += "coupling;";
    append_hex(s, opts.ratio);
    append_hex(s, opts.u_bound);
    if (opts.region)
        for (const auto& iv : opts.region->parts()) {
            append_hex(s, iv.lo);
            append_hex(s, iv.hi);
        }
    s += "obstacle;";
    if (inst.has_obstacle())
        for (double v : inst.obstacle_grid()->values()) append_hex(s, v);
    return hex_prefix(sha256(s));
}

LogLogFit fit_loglog(std::span<const double> radii, std::span<const double> values) {
    if (radii.size() != values.size()) throw ContractError("radii and values differ in length");
    std::vector<double> x, y;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (radii[k] > 0.0 && values[k] > 0.0 && std::isfinite(radii[k]) && std::isfinite(values[k])) {
            x.push_back(std::log(radii[k]));
            y.push_back(std::log(values[k]));
        }
    }
    if (x.size() < 4) throw InsufficientDataError("log-log fit needs at least four positive pairs");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    if (!(sxx > 0.0)) throw InsufficientDataError("log-log fit needs distinct radii");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double e = y[k] - (intercept + slope * x[k]);
        ss += e * e;
    }
    return {slope, std::exp(intercept), std::sqrt(ss / n)};
}

std::optional<double> oscillation(const GridFunction& u, double x0, double rho) {
    const auto cells = u.geometry().cells_in_ball(x0, rho);
    if (cells.empty()) return std::nullopt;
    double lo = kInf, hi = -kInf;
    for (std::size_t i : cells) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
    }
    return hi - lo;
}

double local_data_sup(const ObstacleInstance& inst, double x0, double r) {
    double m = -kInf;
    for (std::size_t i : inst.geometry().cells_in_ball(x0, r))
        m = std::max(m, inst.geometry().interior(i) ? inst.obstacle(i) : inst.g_grid()[i]);
    return m;
}

ProbeReport probe_sup_bound(const ObstacleInstance& inst, const GridFunction& u, double x0, double r, double m,
                            double t, std::span<const double> deltas) {
    const Geometry& geom = inst.geometry();
    require_ball_in_domain(geom, x0, r);
    const double p = inst.order().p();
    if (!(t > 0.0 && t < p)) throw DomainError("mean exponent must lie in (0, p)");
    if (deltas.empty()) throw InsufficientDataError("sup probe needs at least one delta");
    for (double d : deltas)
        if (!(d > 0.0 && d <= 1.0)) throw DomainError("delta must lie in (0, 1]");
    if (m < local_data_sup(inst, x0, r)) throw ContractError("level lies below the local data bound");
    require_same_geometry(u, inst.g_grid());

    double lhs = 0.0;
    const auto half = geom.cells_in_ball(x0, 0.5 * r);
    const auto full = geom.cells_in_ball(x0, r);
    if (half.empty()) throw InsufficientDataError("no cell center inside B_{r/2}");
    for (std::size_t i : half) lhs = std::max(lhs, pos(u[i] - m));
    const double tail =
        tail_of_extended(u, inst.exterior(), TailTransform{m, TailTransform::Part::Positive}, x0, 0.5 * r, inst.order())
            .value;
    double acc = 0.0;
    for (std::size_t i : full) acc += std::pow(pos(u[i] - m), t);
    const double mean = std::pow(acc / static_cast<double>(full.size()), 1.0 / t);

    auto needed = [&](double delta, double gamma) {
        const double excess = pos(lhs - delta * tail);
        if (excess == 0.0) return 0.0;
        if (mean == 0.0) return kInf;
        return excess * std::pow(delta, gamma) / mean;
    };
    // Lattices: γ in steps of 1/4 up to 4, c = 0 or 10^{k/8} from 1e-3 to the cap.
    auto lattice_c = [](double need) {
        if (need == 0.0) return 0.0;
        for (int k = -24; k <= 48; ++k) {
            const double c = std::pow(10.0, k / 8.0);
            if (c >= need) return c;
        }
        return kInf;
    };

    ProbeReport rep;
    rep.probe_name = "sup-bound";
    rep.instance_hash = instance_hash(inst);
    for (int g4 = 0; g4 <= 16; ++g4) {
        const double gamma = g4 / 4.0;
        double need = 0.0;
        for (double d : deltas) need = std::max(need, needed(d, gamma));
        const double c = lattice_c(need);
        if (c <= kSupBoundConstantCap) {
            rep.fitted_exponent = gamma;
            rep.fitted_constant = c;
            rep.passed = true;
            break;
        }
    }
    const double gamma = rep.fitted_exponent.value_or(4.0);
    for (double d : deltas) rep.rows.push_back({geom.n_cells(), r, needed(d, gamma)});
    rep.notes = "lhs=" + fmt(lhs) + " tail=" + fmt(tail) + " mean=" + fmt(mean) + "; rows follow deltas";
    for (double d : deltas) rep.notes += " " + fmt(d);
    if (!rep.passed) rep.notes += "; no lattice constant within the cap";
    return rep;
}

ProbeReport probe_interior_oscillation(const ObstacleInstance& inst, const GridFunction& u, double x0, double r,
                                       std::span<const double> rhos, const ObstacleModulus& omega_h) {
    const Geometry& geom = inst.geometry();
    if (!geom.omega().contains(x0)) throw DomainError("interior probe needs x0 in the open set");
    require_ball_in_domain(geom, x0, r);
    require_same_geometry(u, inst.g_grid());

    ProbeReport rep;
    rep.probe_name = "osc-interior";
    rep.instance_hash = instance_hash(inst);
    std::vector<double> sorted(rhos.begin(), rhos.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    Series fit;
    std::size_t dropped_obstacle = 0;
    for (double rho : sorted) {
        if (!(rho > 0.0 && rho <= 0.25 * r)) continue;
        if (geom.cells_in_ball(x0, rho).size() < kMinBallCells) continue;
        const double osc = *oscillation(u, x0, rho);
        rep.rows.push_back({geom.n_cells(), rho, osc});
        if (omega_h && omega_h(rho) > 0.5 * osc) {
            ++dropped_obstacle;
            continue;
        }
        fit.radii.push_back(rho);
        fit.values.push_back(osc);
    }
    const auto whole = oscillation(u, x0, r);
    if (whole && *whole == 0.0) {
        rep.passed = true;
        rep.notes = "degenerate: u is constant on the ball";
        return rep;
    }
    if (rep.rows.size() < 4) throw InsufficientDataError("fewer than four usable radii");
    attach_fit(rep, fit);
    rep.passed = *rep.fitted_exponent > 0.0 && *rep.fit_residual <= kInteriorFitResidualCap;
    if (dropped_obstacle > 0) rep.notes = std::to_string(dropped_obstacle) + " radii dominated by the obstacle modulus";
    return rep;
}

ProbeReport probe_boundary_oscillation(const ObstacleInstance& inst, const GridFunction& u, double x0,
                                       std::span<const double> radii, const DensityReport& density,
                                       double sigma_probe) {
    const Geometry& geom = inst.geometry();
    if (!on_boundary(geom.omega(), x0)) throw DomainError("boundary probe needs x0 on the boundary");
    if (!(density.delta_omega > 0.0)) throw ContractError("complement has no positive density at x0");
    if (!(sigma_probe >= 0.0)) throw DomainError("tail weight must be nonnegative");
    require_same_geometry(u, inst.g_grid());

    ProbeReport rep;
    rep.probe_name = "osc-boundary";
    rep.instance_hash = instance_hash(inst);
    const TailTransform shift{inst.exterior()(x0), TailTransform::Part::Abs};
    std::vector<double> sorted(radii.begin(), radii.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    Series s;
    for (double rho : sorted) {
        if (!(rho > 0.0)) continue;
        if (geom.cells_in_ball(x0, rho).size() < kMinBallCells) continue;
        const double osc = *oscillation(u, x0, rho);
        const double tail = sigma_probe > 0.0
                                ? sigma_probe * tail_of_extended(u, inst.exterior(), shift, x0, rho, inst.order()).value
                                : 0.0;
        rep.rows.push_back({geom.n_cells(), rho, osc + tail});
        s.radii.push_back(rho);
        s.values.push_back(osc + tail);
    }
    if (s.values.size() < 4) throw InsufficientDataError("fewer than four usable radii");
    if (all_zero(s.values)) {
        rep.passed = true;
        rep.notes = "degenerate: zero oscillation and tail";
        return rep;
    }
    attach_fit(rep, s);
    rep.passed = *rep.fitted_exponent > 0.0;
    if (!rep.passed) rep.notes = "non-decay: oscillation does not shrink with the radius";
    return rep;
}

double tent_cutoff(double x, double x0, double r) noexcept {
    const double d = std::fabs(x - x0);
    if (d <= 0.5 * r) return 1.0;
    if (d >= 0.75 * r) return 0.0;
    return (0.75 * r - d) / (0.25 * r);
}

CaccioppoliTerms caccioppoli_terms(const ObstacleInstance& inst, const GridFunction& u, double x0, double r,
                                   double k, int sign) {
    const Geometry& geom = inst.geometry();
    require_ball_in_domain(geom, x0, r);
    require_same_geometry(u, inst.g_grid());
    if (sign != 1 && sign != -1) throw DomainError("sign must be +1 or -1");
    const double p = inst.order().p(), sigma = inst.order().sp(), h = geom.cell_width();
    const WeightMatrix& W = inst.op().weights();
    const std::size_t n = geom.n_cells();

    std::vector<double> w(n), phi(n, 0.0);
    std::vector<bool> in_ball(n, false);
    for (std::size_t i = 0; i < n; ++i) w[i] = sign > 0 ? pos(u[i] - k) : pos(k - u[i]);
    const auto ball = geom.cells_in_ball(x0, r);
    for (std::size_t i : ball) {
        in_ball[i] = true;
        phi[i] = tent_cutoff(geom.center(i), x0, r);
    }

    CaccioppoliTerms t;
    double mass = 0.0;
    for (std::size_t i : ball) {
        for (std::size_t j : ball) {
            if (i == j) continue;
            t.lhs += std::pow(std::fabs(w[i] * phi[i] - w[j] * phi[j]), p) * W(i, j);
            t.rhs_energy += std::pow(w[i], p) * std::pow(std::fabs(phi[i] - phi[j]), p) * W(i, j);
        }
        mass += w[i] * std::pow(phi[i], p) * h;
    }

    const TailTransform T{k, sign > 0 ? TailTransform::Part::Positive : TailTransform::Part::Negative};
    const ExteriorData& g = inst.exterior();
    const double radius = g.truncation_radius(geom.diameter());
    // Exterior integral uses the coefficient's upper value; exact for constant coefficients.
    const double a_max = inst.op().coupling().kernel().coefficient().max_value();
    double sup = 0.0;
    if (mass > 0.0) {
        for (std::size_t j : ball) {
            if (phi[j] <= 0.0) continue;
            double inner = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (!in_ball[i] && w[i] > 0.0) inner += std::pow(w[i], p - 1.0) * W(i, j) / h;
            const double yj = geom.center(j);
            inner += a_max * (exterior_half_line(g, T, p - 1.0, yj, sigma, geom.omega_prime().lo, -1, radius).value +
                              exterior_half_line(g, T, p - 1.0, yj, sigma, geom.omega_prime().hi, +1, radius).value);
            sup = std::max(sup, inner);
        }
    }
    t.rhs_tail = mass * sup;
    const double denom = t.rhs_energy + t.rhs_tail;
    t.ratio = denom > 0.0 ? t.lhs / denom : (t.lhs > 0.0 ? kInf : 0.0);
    return t;
}

ProbeReport check_caccioppoli(const ObstacleInstance& inst, const GridFunction& u, double x0, double r,
                              std::optional<double> k_plus, std::optional<double> k_minus) {
    const Geometry& geom = inst.geometry();
    if (!on_boundary(geom.omega(), x0)) throw DomainError("energy estimate needs x0 on the boundary");
    require_ball_in_domain(geom, x0, r);
    if (!k_plus && !k_minus) throw InsufficientDataError("both truncation levels are absent");
    double g_sup = -kInf, g_inf = kInf, h_sup = -kInf;
    for (std::size_t i : geom.cells_in_ball(x0, r)) {
        g_sup = std::max(g_sup, inst.g_grid()[i]);
        g_inf = std::min(g_inf, inst.g_grid()[i]);
        if (geom.interior(i)) h_sup = std::max(h_sup, inst.obstacle(i));
    }
    if (k_plus && *k_plus < std::max(g_sup, h_sup)) throw ContractError("upper level lies below the data");
    if (k_minus && *k_minus > g_inf) throw ContractError("lower level lies above the boundary data");

    ProbeReport rep;
    rep.probe_name = "caccioppoli";
    rep.instance_hash = instance_hash(inst);
    rep.passed = true;
    double worst = 0.0;
    auto run = [&](double k, int sign, const char* label) {
        const auto t = caccioppoli_terms(inst, u, x0, r, k, sign);
        rep.rows.push_back({geom.n_cells(), r, t.ratio});
        worst = std::max(worst, t.ratio);
        rep.passed = rep.passed && std::isfinite(t.ratio) && t.lhs >= 0.0 && t.rhs_energy >= 0.0 && t.rhs_tail >= 0.0;
        if (!rep.notes.empty()) rep.notes += "; ";
        rep.notes += std::string(label) + ": lhs=" + fmt(t.lhs) + " rhs_energy=" + fmt(t.rhs_energy) +
                     " rhs_tail=" + fmt(t.rhs_tail);
    };
    if (k_plus) run(*k_plus, +1, "w+");
    if (k_minus) run(*k_minus, -1, "w-");
    rep.fitted_constant = worst;
    return rep;
}

double density_poincare_factor(double delta, double p) {
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("density must lie in (0, 1]");
    return std::pow(1.0 - std::pow(1.0 - delta, 1.0 - 1.0 / p), -p);
}

PoincareTerms poincare_terms(const WeightMatrix& w, const GridFunction& f, double x0, double r, double p,
                             double sp) {
    const Geometry& geom = f.geometry();
    if (w.n() != geom.n_cells()) throw ContractError("weights live on a different geometry");
    const auto ball = geom.cells_in_ball(x0, r);
    if (ball.empty()) throw InsufficientDataError("no cell center inside the ball");
    for (std::size_t i : ball)
        if (!geom.interior(i) && f[i] != 0.0) throw ContractError("test function is nonzero outside the open set");
    const double measure = static_cast<double>(ball.size()) * geom.cell_width();
    PoincareTerms t;
    for (std::size_t i : ball) {
        t.lhs += std::pow(std::fabs(f[i]), p) * geom.cell_width();
        for (std::size_t j : ball)
            if (i != j) t.seminorm += std::pow(std::fabs(f[i] - f[j]), p) * w(i, j);
    }
    t.lhs /= measure;
    t.seminorm *= std::pow(r, sp) / measure;
    return t;
}

ProbeReport check_density_poincare(const ObstacleInstance& inst, std::span<const GridFunction> fs, double x0,
                                   double r, const DensityReport& density) {
    const Geometry& geom = inst.geometry();
    if (!on_boundary(geom.omega(), x0)) throw DomainError("density estimate needs x0 on the boundary");
    if (!(density.delta_omega > 0.0)) throw ContractError("complement has no positive density at x0");
    if (fs.empty()) throw InsufficientDataError("empty test function suite");
    const double p = inst.order().p();
    const double c_delta = density_poincare_factor(density.delta_omega, p);

    ProbeReport rep;
    rep.probe_name = "density-poincare";
    rep.instance_hash = instance_hash(inst);
    double worst = 0.0;
    for (const auto& f : fs) {
        const auto t = poincare_terms(inst.op().weights(), f, x0, r, p, inst.order().sp());
        const double need = t.lhs == 0.0 ? 0.0 : (t.seminorm > 0.0 ? t.lhs / (c_delta * t.seminorm) : kInf);
        rep.rows.push_back({geom.n_cells(), r, need});
        worst = std::max(worst, need);
    }
    rep.fitted_constant = worst;
    rep.passed = std::isfinite(worst);
    rep.notes = "delta=" + fmt(density.delta_omega) + " c_delta=" + fmt(c_delta);
    return rep;
}

std::vector<GridFunction> random_poincare_suite(const std::shared_ptr<const Geometry>& geom, double x0, double r,
                                                std::size_t count, std::uint64_t seed) {
    std::vector<Interval> pieces;
    for (const auto& iv : geom->omega().parts()) {
        const double lo = std::max(iv.lo, x0 - r), hi = std::min(iv.hi, x0 + r);
        if (hi > lo) pieces.push_back({lo, hi});
    }
    constexpr int kModes = 4;
    std::vector<GridFunction> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        SampleStream rng(derive_seed(seed, k));
        std::vector<std::array<double, kModes>> coef(pieces.size());
        for (auto& c : coef)
            for (double& a : c) a = rng.uniform(-1.0, 1.0);
        out.push_back(GridFunction::sample(geom, [&](double x) {
            for (std::size_t c = 0; c < pieces.size(); ++c) {
                if (!pieces[c].contains(x)) continue;
                const double t = (x - pieces[c].lo) / pieces[c].length();
                double v = 0.0;
                for (int m = 0; m < kModes; ++m) v += coef[c][m] * std::sin((m + 1) * std::numbers::pi * t);
                return v;
            }
            return 0.0;
        }));
    }
    return out;
}

bool constants_agree(const ProbeReport& coarse, const ProbeReport& fine, double factor) {
    if (!coarse.fitted_constant || !fine.fitted_constant) return false;
    const double a = *coarse.fitted_constant, b = *fine.fitted_constant;
    if (!std::isfinite(a) || !std::isfinite(b)) return false;
    if (a == 0.0 || b == 0.0) return a == b;
    return std::max(a, b) <= factor * std::min(a, b);
}

ProbeReport refinement_study(const InstanceFamily& family, std::span<const std::size_t> resolutions,
                             const RefinementReference& reference, const StudyConfig& cfg) {
    if (resolutions.size() < 3) throw ConfigError("refinement study needs at least three resolutions");
    for (std::size_t k = 0; k + 1 < resolutions.size(); ++k)
        if (resolutions[k] == 0 || resolutions[k + 1] <= resolutions[k] || resolutions[k + 1] % resolutions[k] != 0)
            throw ConfigError("resolutions must be nested: each divides the next");

    const std::size_t levels = resolutions.size();
    std::vector<std::optional<ObstacleInstance>> insts(levels);
    std::vector<std::optional<SolveResult>> sols(levels);
    std::vector<std::exception_ptr> errors(levels);
    {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < levels; ++k) {
            pool.emplace_back([&, k] {
                try {
                    insts[k].emplace(family(resolutions[k]));
                    sols[k] = solve(*insts[k], cfg.solve);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (std::size_t k = 0; k < levels; ++k)
        if (insts[k]->geometry().n_cells() != resolutions[k] ||
            !(insts[k]->geometry().omega_prime() == insts[levels - 1]->geometry().omega_prime()))
            throw ConfigError("instance family does not produce nested grids");

    ProbeReport rep;
    rep.probe_name = "refinement";
    rep.instance_hash = instance_hash(*insts[levels - 1]);
    const std::size_t measured = reference.is_self() ? levels - 1 : levels;
    std::vector<double> errs;
    for (std::size_t k = 0; k < measured; ++k) {
        const Geometry& geom = insts[k]->geometry();
        const GridFunction& u = sols[k]->u;
        double err = 0.0;
        if (reference.is_self()) {
            const GridFunction& fine = sols[levels - 1]->u;
            const std::size_t ratio = resolutions[levels - 1] / resolutions[k];
            for (std::size_t i : geom.interior_cells()) {
                double mean = 0.0;
                for (std::size_t q = 0; q < ratio; ++q) mean += fine[i * ratio + q];
                err = std::max(err, std::fabs(u[i] - mean / static_cast<double>(ratio)));
            }
        } else {
            for (std::size_t i : geom.interior_cells())
                err = std::max(err, std::fabs(u[i] - reference.exact(geom.center(i))));
        }
        errs.push_back(err);
        rep.rows.push_back({resolutions[k], 0.0, err});
    }

    bool ok = std::all_of(sols.begin(), sols.end(), [](const auto& s) { return s->converged; });
    if (!ok) rep.notes = "some solves did not converge; ";
    rep.notes += "ratios";
    for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
        const double a = errs[k], b = errs[k + 1];
        const double ratio = b > 0.0 ? a / b : (a > 0.0 ? kInf : 1.0);
        rep.notes += " " + fmt(ratio);
        const bool exact_pair = a == 0.0 && b == 0.0;
        ok = ok && (exact_pair || ratio >= cfg.min_ratio);
    }
    if (all_zero(errs)) rep.notes += "; exact at every resolution";
    std::vector<double> widths, positive;
    for (std::size_t k = 0; k < errs.size(); ++k)
        if (errs[k] > 0.0) {
            widths.push_back(insts[k]->geometry().cell_width());
            positive.push_back(errs[k]);
        }
    if (positive.size() >= 4) {
        const auto fit = fit_loglog(widths, positive);
        rep.fitted_exponent = fit.slope;
        rep.fitted_constant = fit.constant;
        rep.fit_residual = fit.residual;
    }
    rep.passed = ok;
    return rep;
}

}  // namespace nlobs
