#include "nlobs/io.hpp"

#include <charconv>
#include <cmath>

#include "nlobs/error.hpp"

namespace nlobs {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Runs a parser, turning library and JSON errors into ConfigError tagged with the section.
template <class F>
auto parse_section(const char* section, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(section) + ": " + e.what());
    } catch (const Error& e) {
        throw ConfigError(std::string(section) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(section) + ": " + e.what());
    }
}

const Json& need(const Json& j, const char* key) {
    if (!j.is_object()) throw ConfigError("expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError(std::string("missing key '") + key + "'");
    return *it;
}

double num(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

double num_or(const Json& j, const char* key, double fallback) {
    return j.contains(key) ? num(j, key) : fallback;
}

std::vector<double> nums(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (!v.is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(std::string("'") + key + "' must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

bool is_count(const Json& j) { return j.is_number_integer() && j.get<std::int64_t>() >= 0; }

std::string kind_of(const Json& j) {
    const Json& k = need(j, "kind");
    if (!k.is_string()) throw ConfigError("'kind' must be a string");
    return k.get<std::string>();
}

Interval interval_from(const Json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError("an interval is a two-element array [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

IntervalUnion union_from(const Json& j) {
    if (!j.is_array()) throw ConfigError("a set is an array of intervals");
    std::vector<Interval> parts;
    for (const auto& e : j) parts.push_back(interval_from(e));
    return IntervalUnion(std::move(parts));
}

Json to_json(const IntervalUnion& u) {
    Json out = Json::array();
    for (const auto& iv : u.parts()) out.push_back({iv.lo, iv.hi});
    return out;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Geometry geometry_from_json(const Json& j) {
    return parse_section("geometry", [&] {
        const Json& n = need(j, "n_cells");
        if (!is_count(n) || n.get<std::size_t>() == 0) throw ConfigError("'n_cells' must be a positive integer");
        return build_geometry(union_from(need(j, "omega")), interval_from(need(j, "omega_prime")),
                              n.get<std::size_t>());
    });
}

Json to_json(const Geometry& geom) {
    return {{"omega", to_json(geom.omega())},
            {"omega_prime", {geom.omega_prime().lo, geom.omega_prime().hi}},
            {"n_cells", geom.n_cells()}};
}

KernelSpec kernel_from_json(const Json& j) {
    return parse_section("kernel", [&] {
        Coefficient coef;
        if (j.contains("coefficient")) {
            const Json& c = j.at("coefficient");
            const std::string kind = kind_of(c);
            if (kind == "constant") {
                coef = Coefficient(ConstantCoefficient{num_or(c, "value", 1.0)});
            } else if (kind == "checkerboard") {
                coef = Coefficient(CheckerboardCoefficient{num(c, "low"), num(c, "high"), num_or(c, "period", 0.25)});
            } else if (kind == "piecewise") {
                PiecewiseCoefficient pc;
                pc.breaks = nums(c, "breaks");
                const Json& t = need(c, "table");
                if (!t.is_array()) throw ConfigError("'table' must be an array of rows");
                for (const auto& row : t) pc.table.push_back(row.get<std::vector<double>>());
                coef = Coefficient(std::move(pc));
            } else if (kind == "random") {
                const Json& seed = need(c, "seed");
                if (!is_count(seed)) throw ConfigError("'seed' must be a nonnegative integer");
                coef = Coefficient(RandomLatticeCoefficient{seed.get<std::uint64_t>(), num_or(c, "period", 0.25),
                                                            num_or(c, "contrast", 1.0)});
            } else {
                throw ConfigError("unknown coefficient kind '" + kind + "'");
            }
        }
        return KernelSpec(FractionalOrder(num(j, "s"), num(j, "p")), num_or(j, "lambda", 1.0), std::move(coef));
    });
}

Json to_json(const KernelSpec& spec) {
    Json coef = std::visit(Overloaded{
                               [](const ConstantCoefficient& c) -> Json {
                                   return {{"kind", "constant"}, {"value", c.value}};
                               },
                               [](const CheckerboardCoefficient& c) -> Json {
                                   return {{"kind", "checkerboard"}, {"low", c.low}, {"high", c.high}, {"period", c.period}};
                               },
                               [](const PiecewiseCoefficient& c) -> Json {
                                   return {{"kind", "piecewise"}, {"breaks", c.breaks}, {"table", c.table}};
                               },
                               [](const RandomLatticeCoefficient& c) -> Json {
                                   return {{"kind", "random"}, {"seed", c.seed}, {"period", c.period}, {"contrast", c.contrast}};
                               },
                           },
                           spec.coefficient().form());
    return {{"s", spec.order().s()}, {"p", spec.order().p()}, {"lambda", spec.lambda()}, {"coefficient", coef}};
}

ExteriorData data_from_json(const Json& j) {
    return parse_section("data", [&] {
        const Json& f = need(j, "form");
        const std::string kind = kind_of(f);
        std::optional<double> r_inf;
        if (j.contains("R_inf")) r_inf = num(j, "R_inf");
        if (kind == "constant") return ExteriorData(ConstantData{num(f, "value")}, r_inf);
        if (kind == "power_plus") return ExteriorData(PowerPlusData{num(f, "beta")}, r_inf);
        if (kind == "indicator")
            return ExteriorData(IndicatorData{union_from(need(f, "set")), num_or(f, "value", 1.0)}, r_inf);
        if (kind == "table") return ExteriorData(TableData{nums(f, "x"), nums(f, "values")}, r_inf);
        throw ConfigError("unknown data kind '" + kind + "'");
    });
}

Json to_json(const ExteriorData& g) {
    Json form = std::visit(Overloaded{
                               [](const ConstantData& c) -> Json { return {{"kind", "constant"}, {"value", c.value}}; },
                               [](const PowerPlusData& c) -> Json { return {{"kind", "power_plus"}, {"beta", c.beta}}; },
                               [](const IndicatorData& c) -> Json {
                                   return {{"kind", "indicator"}, {"set", to_json(c.set)}, {"value", c.value}};
                               },
                               [](const TableData& c) -> Json {
                                   return {{"kind", "table"}, {"x", c.x}, {"values", c.values}};
                               },
                           },
                           g.form());
    Json out = {{"form", form}};
    if (g.r_inf()) out["R_inf"] = *g.r_inf();
    return out;
}

ObstacleSpec obstacle_from_json(const Json& j) {
    return parse_section("obstacle", [&]() -> ObstacleSpec {
        if (j.is_null()) return NoObstacle{};
        const std::string kind = kind_of(j);
        if (kind == "none") return NoObstacle{};
        if (kind == "constant") return ConstantObstacle{num(j, "value")};
        if (kind == "parabola")
            return ParabolaObstacle{num_or(j, "center", 0.0), num_or(j, "height", 0.5), num_or(j, "curvature", 1.0)};
        if (kind == "holder") {
            HolderObstacle h{num_or(j, "center", 0.0), num_or(j, "offset", 0.0), num_or(j, "scale", 1.0),
                             num(j, "exponent")};
            if (!(h.exponent > 0.0 && h.exponent <= 1.0)) throw ConfigError("holder exponent must lie in (0, 1]");
            return h;
        }
        if (kind == "table") {
            TableObstacle t{nums(j, "x"), nums(j, "values")};
            if (t.x.empty() || t.x.size() != t.values.size()) throw ConfigError("table needs matching nonempty x and values");
            for (std::size_t k = 1; k < t.x.size(); ++k)
                if (!(t.x[k] > t.x[k - 1])) throw ConfigError("table nodes must increase");
            return t;
        }
        throw ConfigError("unknown obstacle kind '" + kind + "'");
    });
}

Json to_json(const ObstacleSpec& h) {
    return std::visit(Overloaded{
                          [](const NoObstacle&) -> Json { return {{"kind", "none"}}; },
                          [](const ConstantObstacle& c) -> Json { return {{"kind", "constant"}, {"value", c.value}}; },
                          [](const ParabolaObstacle& c) -> Json {
                              return {{"kind", "parabola"}, {"center", c.center}, {"height", c.height}, {"curvature", c.curvature}};
                          },
                          [](const HolderObstacle& c) -> Json {
                              return {{"kind", "holder"}, {"center", c.center}, {"offset", c.offset},
                                      {"scale", c.scale}, {"exponent", c.exponent}};
                          },
                          [](const TableObstacle& c) -> Json { return {{"kind", "table"}, {"x", c.x}, {"values", c.values}}; },
                      },
                      h);
}

std::function<double(double)> obstacle_function(const ObstacleSpec& h) {
    return std::visit(Overloaded{
                          [](const NoObstacle&) -> std::function<double(double)> { return {}; },
                          [](const ConstantObstacle& c) -> std::function<double(double)> {
                              return [v = c.value](double) { return v; };
                          },
                          [](const ParabolaObstacle& c) -> std::function<double(double)> {
                              return [c](double x) { return c.height - c.curvature * (x - c.center) * (x - c.center); };
                          },
                          [](const HolderObstacle& c) -> std::function<double(double)> {
                              return [c](double x) { return c.offset - c.scale * std::pow(std::fabs(x - c.center), c.exponent); };
                          },
                          [](const TableObstacle& c) -> std::function<double(double)> {
                              return [c](double x) {
                                  if (x <= c.x.front()) return c.values.front();
                                  if (x >= c.x.back()) return c.values.back();
                                  std::size_t k = 1;
                                  while (c.x[k] < x) ++k;
                                  const double t = (x - c.x[k - 1]) / (c.x[k] - c.x[k - 1]);
                                  return c.values[k - 1] + t * (c.values[k] - c.values[k - 1]);
                              };
                          },
                      },
                      h);
}

SolverSettings solver_from_json(const Json& j) {
    return parse_section("solver", [&] {
        SolverSettings s;
        if (j.is_null()) return s;
        if (!j.is_object()) throw ConfigError("expected an object");
        s.config.tol = num_or(j, "tol", s.config.tol);
        if (!(s.config.tol > 0.0)) throw ConfigError("'tol' must be positive");
        if (j.contains("max_sweeps")) {
            const Json& m = j.at("max_sweeps");
            if (!is_count(m)) throw ConfigError("'max_sweeps' must be a nonnegative integer");
            s.config.max_sweeps = m.get<int>();
        }
        if (j.contains("scalar_solver")) {
            const std::string v = j.at("scalar_solver").get<std::string>();
            if (v == "bisection")
                s.config.scalar_solver = ScalarSolver::Bisection;
            else if (v == "newton")
                s.config.scalar_solver = ScalarSolver::SafeguardedNewton;
            else
                throw ConfigError("'scalar_solver' is 'bisection' or 'newton'");
        }
        if (j.contains("init")) {
            const std::string v = j.at("init").get<std::string>();
            if (v == "default")
                s.init = InitKind::Default;
            else if (v == "random")
                s.init = InitKind::Random;
            else
                throw ConfigError("'init' is 'default' or 'random'");
        }
        return s;
    });
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Json to_json(const ProbeReport& rep) {
    Json rows = Json::array();
    for (const auto& r : rep.rows) rows.push_back({{"resolution", r.resolution}, {"radius", r.radius}, {"measured", r.measured}});
    return {{"probe_name", rep.probe_name},
            {"instance_hash", rep.instance_hash},
            {"rows", rows},
            {"fitted_exponent", optional_number(rep.fitted_exponent)},
            {"fitted_constant", optional_number(rep.fitted_constant)},
            {"fit_residual", optional_number(rep.fit_residual)},
            {"passed", rep.passed},
            {"notes", rep.notes}};
}

void write_solution_csv(std::ostream& os, const ObstacleInstance& inst, const SolveResult& res, double contact_tol) {
    const Geometry& geom = inst.geometry();
    os << "cell_center,u,h,g,contact_flag,residual\n";
    for (std::size_t i = 0; i < geom.n_cells(); ++i) {
        const bool interior = geom.interior(i);
        const bool contact = interior && inst.has_obstacle() && res.u[i] - inst.obstacle(i) <= contact_tol;
        os << format_double(geom.center(i)) << ',' << format_double(res.u[i]) << ','
           << (interior && inst.has_obstacle() ? format_double(inst.obstacle(i)) : "") << ','
           << format_double(inst.g_grid()[i]) << ',' << (contact ? 1 : 0) << ',' << format_double(res.residual[i])
           << '\n';
    }
}

void write_energy_csv(std::ostream& os, const SolveResult& res) {
    os << "sweep,energy\n";
    for (std::size_t k = 0; k < res.energy_trace.size(); ++k) os << k << ',' << format_double(res.energy_trace[k]) << '\n';
}

void write_probe_csv(std::ostream& os, std::span<const ProbeReport> reports) {
    os << "probe_name,resolution,radius,measured,fitted_exponent,fitted_constant,passed\n";
    for (const auto& rep : reports) {
        const std::string fe = rep.fitted_exponent ? format_double(*rep.fitted_exponent) : "";
        const std::string fc = rep.fitted_constant ? format_double(*rep.fitted_constant) : "";
        for (const auto& r : rep.rows)
            os << rep.probe_name << ',' << r.resolution << ',' << format_double(r.radius) << ','
               << format_double(r.measured) << ',' << fe << ',' << fc << ',' << (rep.passed ? 1 : 0) << '\n';
    }
}

void write_violations_csv(std::ostream& os, std::span<const LemmaSuiteResult> results) {
    os << "check,p,a,b,a2,b2,lhs,rhs\n";
    for (const auto& r : results)
        for (const auto& v : r.examples) {
            os << v.check << ',' << format_double(v.p);
            for (double a : v.args) os << ',' << format_double(a);
            os << ',' << format_double(v.lhs) << ',' << format_double(v.rhs) << '\n';
        }
}

Json to_json(const LemmaSuiteResult& r) {
    return {{"check", r.check},
            {"p", r.p},
            {"seed", r.seed},
            {"samples", r.samples},
            {"violations", r.violations},
            {"fitted_constant", optional_number(r.fitted_constant)},
            {"worst_ratio", r.worst_ratio},
            {"passed", r.passed()}};
}

}  // namespace nlobs
