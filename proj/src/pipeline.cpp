#include "nlobs/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <set>

#include "nlobs/error.hpp"
#include "nlobs/random.hpp"
#include "nlobs/simd/kernels.hpp"

#ifndef NLOBS_VERSION
#define NLOBS_VERSION "0.0.0"
#endif

namespace nlobs {

namespace {

// Typed access to a step's parameter object; unknown keys are rejected on finish().
class Params {
public:
    Params(const StepSpec& step) : step_(step), j_(step.params) {}

    std::optional<double> opt_num(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) return std::nullopt;
        if (!it->is_number()) fail(key, "must be a number");
        const double v = it->get<double>();
        if (!std::isfinite(v)) fail(key, "must be finite");
        return v;
    }
    double num(const char* key) {
        const auto v = opt_num(key);
        if (!v) fail(key, "is required");
        return *v;
    }
    double num(const char* key, double fallback) { return opt_num(key).value_or(fallback); }

    std::uint64_t uint(const char* key, std::uint64_t fallback) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return fallback;
        if (!it->is_number_integer() || it->get<std::int64_t>() < 0) fail(key, "must be a nonnegative integer");
        return it->get<std::uint64_t>();
    }

    std::vector<double> nums(const char* key, std::vector<double> fallback) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return fallback;
        if (!it->is_array() || it->empty()) fail(key, "must be a nonempty array of numbers");
        std::vector<double> out;
        for (const auto& e : *it) {
            if (!e.is_number()) fail(key, "must be a nonempty array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::size_t> sizes(const char* key, std::vector<std::size_t> fallback) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return fallback;
        if (!it->is_array() || it->empty()) fail(key, "must be a nonempty array of positive integers");
        std::vector<std::size_t> out;
        for (const auto& e : *it) {
            if (!e.is_number_unsigned() || e.get<std::size_t>() == 0)
                fail(key, "must be a nonempty array of positive integers");
            out.push_back(e.get<std::size_t>());
        }
        return out;
    }

    std::string str(const char* key, std::string fallback, std::initializer_list<const char*> allowed) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return fallback;
        if (!it->is_string()) fail(key, "must be a string");
        const std::string v = it->get<std::string>();
        for (const char* a : allowed)
            if (v == a) return v;
        fail(key, "has an unsupported value '" + v + "'");
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (k != "step" && !seen_.count(k)) throw ConfigError("step '" + step_.name + "': unknown parameter '" + k + "'");
    }

private:
    [[noreturn]] void fail(const char* key, const std::string& what) const {
        throw ConfigError("step '" + step_.name + "': '" + key + "' " + what);
    }

    const StepSpec& step_;
    const Json& j_;
    std::set<std::string> seen_;
};

std::vector<double> geometric(double start, double factor, int count) {
    std::vector<double> r;
    for (int k = 0; k < count; ++k) r.push_back(start * std::pow(factor, -k));
    return r;
}

struct LemmaParams {
    std::vector<double> ps;
    std::size_t samples;
    std::uint64_t seed;
};

struct SupParams {
    double x0, r, t;
    std::optional<double> m;
    std::vector<double> deltas;
};

struct InteriorParams {
    double x0, r;
    std::vector<double> rhos;
    bool use_obstacle_modulus;
};

struct BoundaryParams {
    double x0;
    std::vector<double> radii;
    double sigma;
};

struct CaccioppoliParams {
    double x0, r;
    std::optional<double> k_plus, k_minus;
    std::string levels;
};

struct PoincareParams {
    double x0, r;
    std::size_t count;
    std::uint64_t seed;
};

struct UniquenessParams {
    int inits;
    double tol;
};

struct TolParams {
    double tol;
};

struct SmallestParams {
    std::vector<double> lifts;
    double tol;
};

struct ContactParams {
    double tol;
    std::optional<double> contact_tol;
};

struct StudyParams {
    std::vector<std::size_t> resolutions;
    std::string reference;
    double value;
    double min_ratio;
};

LemmaParams lemma_params(const StepSpec& s, std::uint64_t seed) {
    Params p(s);
    LemmaParams out{p.nums("p", {1.1, 1.5, 2.0, 2.5, 3.5}), p.uint("samples", 1000000), p.uint("seed", seed)};
    p.finish();
    if (out.samples < 1) throw ConfigError("step 'validate-lemmas': 'samples' must be at least 1");
    for (double v : out.ps)
        if (!(v > 1.0)) throw ConfigError("step 'validate-lemmas': every p must exceed 1");
    return out;
}

SupParams sup_params(const StepSpec& s) {
    Params p(s);
    SupParams out;
    out.x0 = p.num("x0");
    out.r = p.num("r");
    out.m = p.opt_num("m");
    out.t = p.num("t", 1.0);
    out.deltas = p.nums("deltas", {1.0, 0.5, 0.25, 0.125});
    p.finish();
    return out;
}

InteriorParams interior_params(const StepSpec& s) {
    Params p(s);
    InteriorParams out;
    out.x0 = p.num("x0");
    out.r = p.num("r");
    out.rhos = p.nums("rhos", geometric(out.r / 4.0, 1.4, 10));
    out.use_obstacle_modulus = p.str("obstacle_modulus", "on", {"on", "off"}) == "on";
    p.finish();
    return out;
}

BoundaryParams boundary_params(const StepSpec& s) {
    Params p(s);
    BoundaryParams out;
    out.x0 = p.num("x0");
    out.radii = p.nums("radii", geometric(0.4, 1.5, 10));
    out.sigma = p.num("sigma_probe", kBoundaryTailWeight);
    p.finish();
    return out;
}

CaccioppoliParams caccioppoli_params(const StepSpec& s) {
    Params p(s);
    CaccioppoliParams out;
    out.x0 = p.num("x0");
    out.r = p.num("r");
    out.k_plus = p.opt_num("k_plus");
    out.k_minus = p.opt_num("k_minus");
    out.levels = p.str("levels", "both", {"both", "plus", "minus"});
    p.finish();
    return out;
}

PoincareParams poincare_params(const StepSpec& s, std::uint64_t seed) {
    Params p(s);
    PoincareParams out;
    out.x0 = p.num("x0");
    out.r = p.num("r");
    out.count = p.uint("count", 50);
    out.seed = p.uint("seed", seed);
    p.finish();
    if (out.count == 0) throw ConfigError("step 'poincare': 'count' must be positive");
    return out;
}

UniquenessParams uniqueness_params(const StepSpec& s) {
    Params p(s);
    UniquenessParams out{static_cast<int>(p.uint("inits", 5)), p.num("tol", 1e-6)};
    p.finish();
    if (out.inits < 2) throw ConfigError("step 'uniqueness': 'inits' must be at least 2");
    return out;
}

TolParams tol_params(const StepSpec& s) {
    Params p(s);
    TolParams out{p.num("tol", 1e-8)};
    p.finish();
    return out;
}

SmallestParams smallest_params(const StepSpec& s) {
    std::vector<double> lifts;
    for (int k = 1; k <= 10; ++k) lifts.push_back(0.05 * k);
    Params p(s);
    SmallestParams out{p.nums("lifts", lifts), p.num("tol", 1e-8)};
    p.finish();
    for (double l : out.lifts)
        if (!(l >= 0.0)) throw ConfigError("step 'smallest-super': lifts must be nonnegative");
    return out;
}

ContactParams contact_params(const StepSpec& s) {
    Params p(s);
    ContactParams out{p.num("tol", 1e-8), p.opt_num("contact_tol")};
    p.finish();
    return out;
}

StudyParams study_params(const StepSpec& s) {
    Params p(s);
    StudyParams out;
    out.resolutions = p.sizes("resolutions", {32, 64, 128});
    out.reference = p.str("reference", "self", {"self", "exterior", "indicator"});
    out.value = p.num("value", 1.0);
    out.min_ratio = p.num("min_ratio", 1.3);
    p.finish();
    if (out.resolutions.size() < 3) throw ConfigError("step 'study': needs at least three resolutions");
    for (std::size_t k = 1; k < out.resolutions.size(); ++k)
        if (out.resolutions[k] <= out.resolutions[k - 1] || out.resolutions[k] % out.resolutions[k - 1] != 0)
            throw ConfigError("step 'study': each resolution must divide the next");
    return out;
}

bool needs_solve(const std::string& name) {
    return name == "probe-sup" || name == "probe-osc-interior" || name == "probe-osc-boundary" ||
           name == "caccioppoli" || name == "supersolution" || name == "smallest-super" || name == "contact-free";
}

bool needs_obstacle(const std::string& name) { return name == "smallest-super" || name == "contact-free"; }

std::uint64_t seed_from(const Json& j) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ConfigError("'seed' must be a nonnegative integer");
    return j.get<std::uint64_t>();
}

// Checks the point-location requirements of a step against the geometry.
void check_location(const StepSpec& step, const Geometry& geom, std::uint64_t seed) {
    const auto& omega = geom.omega();
    auto require = [&](bool ok, const char* what) {
        if (!ok) throw ConfigError("step '" + step.name + "': " + what);
    };
    if (step.name == "probe-osc-interior") {
        require(omega.contains(interior_params(step).x0), "x0 must lie in the open set");
    } else if (step.name == "probe-osc-boundary") {
        require(on_boundary(omega, boundary_params(step).x0), "x0 must lie on the boundary of the open set");
    } else if (step.name == "caccioppoli") {
        require(on_boundary(omega, caccioppoli_params(step).x0), "x0 must lie on the boundary of the open set");
    } else if (step.name == "poincare") {
        require(on_boundary(omega, poincare_params(step, seed).x0), "x0 must lie on the boundary of the open set");
    }
}

void check_params(const StepSpec& s, std::uint64_t seed) {
    const std::string& n = s.name;
    if (n == "solve") {
        Params(s).finish();
    } else if (n == "validate-lemmas") {
        lemma_params(s, seed);
    } else if (n == "probe-sup") {
        sup_params(s);
    } else if (n == "probe-osc-interior") {
        interior_params(s);
    } else if (n == "probe-osc-boundary") {
        boundary_params(s);
    } else if (n == "caccioppoli") {
        caccioppoli_params(s);
    } else if (n == "poincare") {
        poincare_params(s, seed);
    } else if (n == "uniqueness") {
        uniqueness_params(s);
    } else if (n == "supersolution") {
        tol_params(s);
    } else if (n == "smallest-super") {
        smallest_params(s);
    } else if (n == "contact-free") {
        contact_params(s);
    } else if (n == "study") {
        study_params(s);
    }
}

std::string iso_utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class StepFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Context {
    const ExperimentConfig& cfg;
    const RunOptions& opts;
    ObstacleSpec obstacle_spec;
    std::function<double(double)> obstacle_fn;
    SolverSettings solver;
    std::optional<ObstacleInstance> inst;
    std::optional<SolveResult> solution;
    std::map<std::string, int> name_uses;
    std::vector<std::string>* files = nullptr;

    const ObstacleInstance& instance() {
        if (!inst) inst = build_at(geometry_from_json(cfg.geometry));
        return *inst;
    }

    ObstacleInstance build_at(const Geometry& geom) const {
        return ObstacleInstance::build(geom, kernel_from_json(cfg.kernel), data_from_json(cfg.data),
                                       obstacle_fn ? &obstacle_fn : nullptr);
    }

    SolveConfig solve_config(const ObstacleInstance& in) const {
        SolveConfig sc = solver.config;
        if (solver.init == InitKind::Random) sc.initial = random_feasible(in, cfg.seed);
        return sc;
    }

    // Artifact stem for a step; repeated steps get -2, -3, ... suffixes.
    std::string stem(const std::string& base) {
        const int k = ++name_uses[base];
        return k == 1 ? base : base + "-" + std::to_string(k);
    }

    void write(const std::string& file, const std::function<void(std::ostream&)>& body) {
        std::ofstream os(opts.out_dir / file, std::ios::binary);
        if (!os) throw Error("cannot write " + (opts.out_dir / file).string());
        body(os);
        if (!os) throw Error("write failed for " + file);
        files->push_back(file);
    }

    void write_json(const std::string& file, const Json& j) {
        write(file, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    void write_probe(const std::string& base, const ProbeReport& rep) {
        const std::string s = stem(base);
        write(s + ".csv", [&](std::ostream& os) { write_probe_csv(os, std::span<const ProbeReport>(&rep, 1)); });
        write_json(s + ".json", to_json(rep));
    }

    // A one-row-per-quantity table for steps that check a bound rather than fit one.
    struct CheckRow {
        std::string quantity;
        double value;
        double bound;
        bool passed;
    };
    void write_checks(const std::string& base, const std::vector<CheckRow>& rows, Json extra) {
        const std::string s = stem(base);
        write(s + ".csv", [&](std::ostream& os) {
            os << "quantity,value,bound,passed\n";
            for (const auto& r : rows)
                os << r.quantity << ',' << format_double(r.value) << ',' << format_double(r.bound) << ','
                   << (r.passed ? 1 : 0) << '\n';
        });
        Json arr = Json::array();
        for (const auto& r : rows)
            arr.push_back({{"quantity", r.quantity}, {"value", r.value}, {"bound", r.bound}, {"passed", r.passed}});
        extra["checks"] = arr;
        write_json(s + ".json", extra);
    }

    const SolveResult& solved() const {
        if (!solution) throw StepFailed("no solution available: the solve step did not complete");
        return *solution;
    }
};

bool all_passed(const std::vector<Context::CheckRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed; });
}

bool run_solve(Context& ctx, const StepSpec&) {
    const auto& inst = ctx.instance();
    SolveResult res = solve(inst, ctx.solve_config(inst));
    const double ctol = default_contact_tol(inst);
    const std::string s = ctx.stem("solve");
    const std::string sol = s == "solve" ? "solution" : "solution" + s.substr(5);
    const std::string en = s == "solve" ? "energy" : "energy" + s.substr(5);
    ctx.write(sol + ".csv", [&](std::ostream& os) { write_solution_csv(os, inst, res, ctol); });
    ctx.write(en + ".csv", [&](std::ostream& os) { write_energy_csv(os, res); });
    Json j = {{"instance_hash", instance_hash(inst)},
              {"n_cells", inst.geometry().n_cells()},
              {"converged", res.converged},
              {"sweeps", res.sweeps},
              {"residual_norm", res.residual_norm},
              {"complementarity_norm", res.complementarity_norm},
              {"energy", res.energy_trace.empty() ? Json(nullptr) : Json(res.energy_trace.back())},
              {"contact_tol", ctol}};
    if (inst.has_obstacle()) j["contact_count"] = contact_set_and_free_residual(inst, res.u, ctol).contact_count;
    ctx.write_json(s + ".json", j);
    const bool ok = res.converged;
    ctx.solution = std::move(res);
    return ok;
}

bool run_lemmas(Context& ctx, const StepSpec& step) {
    const auto lp = lemma_params(step, ctx.cfg.seed);
    const NonlinearityFn L = ctx.opts.corrupt_nonlinearity ? corrupted_nonlinearity() : default_nonlinearity();
    std::vector<LemmaSuiteResult> results;
    for (std::size_t k = 0; k < lp.ps.size(); ++k) {
        const double p = lp.ps[k];
        const std::uint64_t seed = derive_seed(lp.seed, k);
        if (p <= 2.0) results.push_back(run_subquadratic_suite(p, lp.samples, seed, L));
        if (p >= 2.0) results.push_back(run_superquadratic_suite(p, lp.samples, seed, L));
        results.push_back(run_ab_nonneg_suite(p, lp.samples, seed, L));
        results.push_back(run_ab_bounds_suite(p, lp.samples, seed, L));
    }
    const std::string s = ctx.stem("lemmas");
    const std::string csv = s == "lemmas" ? "lemma-violations.csv" : "lemma-violations" + s.substr(6) + ".csv";
    ctx.write(csv, [&](std::ostream& os) { write_violations_csv(os, results); });
    Json arr = Json::array();
    bool ok = true;
    for (const auto& r : results) {
        arr.push_back(to_json(r));
        ok = ok && r.passed();
    }
    ctx.write_json(s + ".json", {{"corrupted_nonlinearity", ctx.opts.corrupt_nonlinearity}, {"suites", arr}});
    return ok;
}

bool run_probe_sup(Context& ctx, const StepSpec& step) {
    const auto sp = sup_params(step);
    const auto& inst = ctx.instance();
    const double m = sp.m.value_or(local_data_sup(inst, sp.x0, sp.r));
    const auto rep = probe_sup_bound(inst, ctx.solved().u, sp.x0, sp.r, m, sp.t, sp.deltas);
    ctx.write_probe("probe-sup", rep);
    return rep.passed;
}

// Sampled oscillation of the obstacle over B_rho(x0).
ObstacleModulus sampled_modulus(std::function<double(double)> h, double x0) {
    return [h = std::move(h), x0](double rho) {
        constexpr int kSamples = 257;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int k = 0; k < kSamples; ++k) {
            const double v = h(x0 - rho + 2.0 * rho * k / (kSamples - 1));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return hi - lo;
    };
}

bool run_probe_interior(Context& ctx, const StepSpec& step) {
    const auto ip = interior_params(step);
    const auto& inst = ctx.instance();
    ObstacleModulus omega;
    if (ip.use_obstacle_modulus && ctx.obstacle_fn) omega = sampled_modulus(ctx.obstacle_fn, ip.x0);
    const auto rep = probe_interior_oscillation(inst, ctx.solved().u, ip.x0, ip.r, ip.rhos, omega);
    ctx.write_probe("probe-osc-interior", rep);
    return rep.passed;
}

bool run_probe_boundary(Context& ctx, const StepSpec& step) {
    const auto bp = boundary_params(step);
    const auto& inst = ctx.instance();
    const auto dens = measure_density(inst.geometry(), bp.x0, bp.radii);
    const auto rep = probe_boundary_oscillation(inst, ctx.solved().u, bp.x0, bp.radii, dens, bp.sigma);
    ctx.write_probe("probe-osc-boundary", rep);
    return rep.passed;
}

bool run_caccioppoli(Context& ctx, const StepSpec& step) {
    const auto cp = caccioppoli_params(step);
    const auto& inst = ctx.instance();
    const Geometry& geom = inst.geometry();
    // Default levels are the tightest the estimate admits on the ball.
    double g_sup = -std::numeric_limits<double>::infinity(), g_inf = -g_sup, h_sup = g_sup;
    for (std::size_t i : geom.cells_in_ball(cp.x0, cp.r)) {
        g_sup = std::max(g_sup, inst.g_grid()[i]);
        g_inf = std::min(g_inf, inst.g_grid()[i]);
        if (geom.interior(i)) h_sup = std::max(h_sup, inst.obstacle(i));
    }
    std::optional<double> kp, km;
    if (cp.levels != "minus") kp = cp.k_plus.value_or(std::max(g_sup, h_sup));
    if (cp.levels != "plus") km = cp.k_minus.value_or(g_inf);
    const auto rep = check_caccioppoli(inst, ctx.solved().u, cp.x0, cp.r, kp, km);
    ctx.write_probe("caccioppoli", rep);
    return rep.passed;
}

bool run_poincare(Context& ctx, const StepSpec& step) {
    const auto pp = poincare_params(step, ctx.cfg.seed);
    const auto& inst = ctx.instance();
    const auto fs = random_poincare_suite(inst.geometry_ptr(), pp.x0, pp.r, pp.count, pp.seed);
    const std::vector<double> radii{pp.r};
    const auto dens = measure_density(inst.geometry(), pp.x0, radii);
    const auto rep = check_density_poincare(inst, fs, pp.x0, pp.r, dens);
    ctx.write_probe("poincare", rep);
    return rep.passed;
}

bool run_uniqueness(Context& ctx, const StepSpec& step) {
    const auto up = uniqueness_params(step);
    const auto& inst = ctx.instance();
    const auto rep = verify_uniqueness(inst, ctx.solver.config, up.inits, ctx.cfg.seed);
    const std::vector<Context::CheckRow> rows{
        {"max_pairwise_sup_diff", rep.max_pairwise_sup_diff, up.tol, rep.max_pairwise_sup_diff <= up.tol},
        {"non_converged", static_cast<double>(rep.non_converged), 0.0, rep.non_converged == 0}};
    ctx.write_checks("uniqueness", rows, {{"runs", rep.runs}, {"seed", ctx.cfg.seed}});
    return all_passed(rows);
}

bool run_supersolution(Context& ctx, const StepSpec& step) {
    const auto tp = tol_params(step);
    const auto& inst = ctx.instance();
    const auto rep = check_supersolution(inst, ctx.solved().u, tp.tol);
    const std::vector<Context::CheckRow> rows{{"min_pairing", rep.min_pairing, -tp.tol, rep.is_supersolution}};
    ctx.write_checks("supersolution", rows,
                     {{"argmin_cell", rep.argmin}, {"argmin_center", inst.geometry().center(rep.argmin)}});
    return all_passed(rows);
}

bool run_smallest(Context& ctx, const StepSpec& step) {
    const auto sp = smallest_params(step);
    const auto& inst = ctx.instance();
    const auto& u = ctx.solved().u;
    const Geometry geom = inst.geometry();
    std::vector<Context::CheckRow> rows;
    for (double lift : sp.lifts) {
        // The solution under a lifted obstacle is a feasible supersolution of the original problem.
        const std::function<double(double)> lifted = [h = ctx.obstacle_fn, lift](double x) { return h(x) + lift; };
        const auto other = ObstacleInstance::build(geom, kernel_from_json(ctx.cfg.kernel), data_from_json(ctx.cfg.data),
                                                   &lifted);
        const auto v = solve(other, ctx.solver.config);
        if (!v.converged) throw StepFailed("lifted solve did not converge at lift " + format_double(lift));
        const auto rep = verify_smallest_supersolution(inst, u, v.u, sp.tol);
        rows.push_back({"max_violation@lift=" + format_double(lift), rep.max_violation, sp.tol, rep.holds});
    }
    ctx.write_checks("smallest-super", rows, {{"lifts", sp.lifts}});
    return all_passed(rows);
}

bool run_contact(Context& ctx, const StepSpec& step) {
    const auto cp = contact_params(step);
    const auto& inst = ctx.instance();
    const double ctol = cp.contact_tol.value_or(default_contact_tol(inst));
    const auto rep = contact_set_and_free_residual(inst, ctx.solved().u, ctol);
    const std::vector<Context::CheckRow> rows{
        {"max_free_residual", rep.max_free_residual, cp.tol, rep.max_free_residual <= cp.tol}};
    ctx.write_checks("contact-free", rows, {{"contact_tol", ctol}, {"contact_count", rep.contact_count}});
    return all_passed(rows);
}

bool run_study(Context& ctx, const StepSpec& step) {
    const auto sp = study_params(step);
    const Json geom_json = ctx.cfg.geometry;
    const InstanceFamily family = [&ctx, geom_json](std::size_t n) {
        Json gj = geom_json;
        gj["n_cells"] = n;
        return ctx.build_at(geometry_from_json(gj));
    };
    RefinementReference ref = RefinementReference::self();
    if (sp.reference == "exterior") {
        ref = RefinementReference::explicit_solution([g = data_from_json(ctx.cfg.data)](double x) { return g(x); });
    } else if (sp.reference == "indicator") {
        const auto omega = geometry_from_json(ctx.cfg.geometry).omega();
        ref = RefinementReference::explicit_solution(
            [omega, g = data_from_json(ctx.cfg.data), v = sp.value](double x) { return omega.contains(x) ? v : g(x); });
    }
    StudyConfig sc;
    sc.solve = ctx.solver.config;
    sc.min_ratio = sp.min_ratio;
    const auto rep = refinement_study(family, sp.resolutions, ref, sc);
    ctx.write_probe("study", rep);
    return rep.passed;
}

using StepFn = bool (*)(Context&, const StepSpec&);

StepFn step_fn(const std::string& name) {
    static const std::map<std::string, StepFn> table{
        {"solve", run_solve},
        {"validate-lemmas", run_lemmas},
        {"probe-sup", run_probe_sup},
        {"probe-osc-interior", run_probe_interior},
        {"probe-osc-boundary", run_probe_boundary},
        {"caccioppoli", run_caccioppoli},
        {"poincare", run_poincare},
        {"uniqueness", run_uniqueness},
        {"supersolution", run_supersolution},
        {"smallest-super", run_smallest},
        {"contact-free", run_contact},
        {"study", run_study},
    };
    return table.at(name);
}

void write_manifest(const std::filesystem::path& out_dir, const Json& manifest) {
    std::ofstream os(out_dir / "manifest.json", std::ios::binary);
    os << manifest.dump(2) << '\n';
}

}  // namespace

Json ExperimentConfig::to_json() const {
    Json steps = Json::array();
    for (const auto& s : pipeline) {
        Json e = s.params;
        e["step"] = s.name;
        steps.push_back(e);
    }
    return {{"geometry", geometry}, {"kernel", kernel}, {"data", data},         {"obstacle", obstacle},
            {"solver", solver},     {"pipeline", steps}, {"seed", seed}};
}

ExperimentConfig parse_config(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{"geometry", "kernel", "data", "obstacle", "solver", "pipeline", "seed"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
    ExperimentConfig cfg;
    auto section = [&](const char* key, bool required) {
        const auto it = j.find(key);
        if (it == j.end()) {
            if (required) throw ConfigError(std::string("missing config section '") + key + "'");
            return Json(nullptr);
        }
        return *it;
    };
    cfg.geometry = section("geometry", false);
    cfg.kernel = section("kernel", false);
    cfg.data = section("data", false);
    cfg.obstacle = section("obstacle", false);
    cfg.solver = section("solver", false);
    if (j.contains("seed")) cfg.seed = seed_from(j.at("seed"));
    const Json steps = section("pipeline", true);
    if (!steps.is_array()) throw ConfigError("'pipeline' must be an array of steps");
    for (const auto& e : steps) {
        if (e.is_string()) {
            cfg.pipeline.push_back({e.get<std::string>(), Json::object()});
        } else if (e.is_object() && e.contains("step") && e.at("step").is_string()) {
            Json params = e;
            params.erase("step");
            cfg.pipeline.push_back({e.at("step").get<std::string>(), params});
        } else {
            throw ConfigError("a pipeline step is a name or an object with a 'step' key");
        }
    }
    validate_pipeline(cfg);
    return cfg;
}

void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<std::size_t> cells) {
    if (seed) cfg.seed = *seed;
    if (cells) {
        if (*cells == 0) throw ConfigError("--cells must be positive");
        if (!cfg.geometry.is_object()) throw ConfigError("geometry: expected an object");
        cfg.geometry["n_cells"] = *cells;
    }
    validate_pipeline(cfg);
}

void validate_pipeline(const ExperimentConfig& cfg) {
    if (cfg.pipeline.empty()) throw ConfigError("pipeline is empty");
    for (const auto& s : cfg.pipeline)
        if (std::find(std::begin(kStepNames), std::end(kStepNames), s.name) == std::end(kStepNames))
            throw ConfigError("unknown pipeline step '" + s.name + "'");

    const bool instance_needed = std::any_of(cfg.pipeline.begin(), cfg.pipeline.end(),
                                             [](const StepSpec& s) { return s.name != "validate-lemmas"; });
    if (!instance_needed) {
        for (const auto& s : cfg.pipeline) check_params(s, cfg.seed);
        return;
    }
    for (const auto& [key, section] : {std::pair{"geometry", &cfg.geometry}, std::pair{"kernel", &cfg.kernel},
                                       std::pair{"data", &cfg.data}})
        if (section->is_null()) throw ConfigError(std::string("missing config section '") + key + "'");

    // Every section parses, so a run never stops on a malformed instance half way.
    const Geometry geom = geometry_from_json(cfg.geometry);
    const KernelSpec spec = kernel_from_json(cfg.kernel);
    const ExteriorData g = data_from_json(cfg.data);
    try {
        g.validate(spec.order());
    } catch (const Error& e) {
        throw ConfigError(std::string("data: ") + e.what());
    }
    const ObstacleSpec h = obstacle_from_json(cfg.obstacle);
    solver_from_json(cfg.solver);
    const bool has_obstacle = !std::holds_alternative<NoObstacle>(h);

    bool solved = false;
    for (const auto& s : cfg.pipeline) {
        check_params(s, cfg.seed);
        if (needs_solve(s.name) && !solved)
            throw ConfigError("step '" + s.name + "' needs an earlier 'solve' step");
        if (needs_obstacle(s.name) && !has_obstacle) throw ConfigError("step '" + s.name + "' needs an obstacle");
        check_location(s, geom, cfg.seed);
        solved = solved || s.name == "solve";
    }
}

const char* to_string(StepStatus s) noexcept {
    switch (s) {
        case StepStatus::Passed: return "passed";
        case StepStatus::Failed: return "failed";
        case StepStatus::Error: return "error";
        case StepStatus::Skipped: return "skipped";
    }
    return "unknown";
}

Json version_info() {
    return {{"nlobs", NLOBS_VERSION},
            {"simd", simd::active_kernels().name},
            {"compiler", __VERSION__},
            {"cxx_standard", static_cast<long>(__cplusplus)}};
}

RunSummary run_pipeline(const ExperimentConfig& cfg, const RunOptions& opts) {
    validate_pipeline(cfg);
    std::filesystem::create_directories(opts.out_dir);

    Context ctx{cfg, opts, obstacle_from_json(cfg.obstacle), {}, solver_from_json(cfg.solver), {}, {}, {}, nullptr};
    ctx.obstacle_fn = obstacle_function(ctx.obstacle_spec);

    const Json canonical = cfg.to_json();
    Json manifest = {{"config_hash", hex_prefix(sha256(canonical.dump()))},
                     {"config", canonical},
                     {"seed", cfg.seed},
                     {"versions", version_info()},
                     {"started_utc", iso_utc_now()},
                     {"steps", Json::array()}};

    RunSummary summary;
    const auto run_start = std::chrono::steady_clock::now();
    bool solve_threw = false;
    for (const auto& step : cfg.pipeline) {
        StepOutcome out;
        out.name = step.name;
        ctx.files = &out.files;
        if (opts.log) *opts.log << "[" << step.name << "] running\n" << std::flush;
        const auto t0 = std::chrono::steady_clock::now();
        if (needs_solve(step.name) && solve_threw) {
            out.status = StepStatus::Skipped;
            out.message = "skipped: the solve step raised an error";
        } else {
            try {
                out.status = step_fn(step.name)(ctx, step) ? StepStatus::Passed : StepStatus::Failed;
            } catch (const std::exception& e) {
                out.status = StepStatus::Error;
                out.message = e.what();
                if (step.name == "solve") solve_threw = true;
            }
        }
        out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (opts.log)
            *opts.log << "[" << step.name << "] " << to_string(out.status)
                      << (out.message.empty() ? "" : ": " + out.message) << " (" << format_double(out.wall_seconds)
                      << " s)\n"
                      << std::flush;
        Json sj = {{"step", out.name},
                   {"status", to_string(out.status)},
                   {"wall_seconds", out.wall_seconds},
                   {"files", out.files}};
        if (!out.message.empty()) sj["message"] = out.message;
        manifest["steps"].push_back(sj);
        summary.steps.push_back(std::move(out));
        // Rewritten after every step so an interrupted run still leaves a manifest.
        write_manifest(opts.out_dir, manifest);
    }
    summary.exit_code = std::all_of(summary.steps.begin(), summary.steps.end(),
                                    [](const StepOutcome& s) { return s.status == StepStatus::Passed; })
                            ? 0
                            : 1;
    manifest["finished_utc"] = iso_utc_now();
    manifest["total_wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
    manifest["exit_code"] = summary.exit_code;
    write_manifest(opts.out_dir, manifest);
    return summary;
}

void write_failure_manifest(const std::filesystem::path& out_dir, const std::string& config_source,
                            const std::string& error) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) return;
    write_manifest(out_dir, {{"config_source", config_source},
                             {"versions", version_info()},
                             {"started_utc", iso_utc_now()},
                             {"finished_utc", iso_utc_now()},
                             {"steps", Json::array()},
                             {"error", error},
                             {"exit_code", 2}});
}

}  // namespace nlobs
