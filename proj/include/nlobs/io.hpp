#pragma once

#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nlobs/analysis.hpp"
#include "nlobs/lemma_suite.hpp"

namespace nlobs {

using Json = nlohmann::json;

// Every parser throws ConfigError on missing keys, wrong types or invalid values.

Geometry geometry_from_json(const Json& j);
Json to_json(const Geometry& geom);

KernelSpec kernel_from_json(const Json& j);
Json to_json(const KernelSpec& spec);

ExteriorData data_from_json(const Json& j);
Json to_json(const ExteriorData& g);

struct NoObstacle {};
struct ConstantObstacle {
    double value = 0.0;
};
/// height - curvature (x - center)^2.
struct ParabolaObstacle {
    double center = 0.0;
    double height = 0.5;
    double curvature = 1.0;
};
/// offset - scale |x - center|^exponent.
struct HolderObstacle {
    double center = 0.0;
    double offset = 0.0;
    double scale = 1.0;
    double exponent = 0.5;
};
/// Piecewise linear through the nodes, constant beyond the end nodes.
struct TableObstacle {
    std::vector<double> x;
    std::vector<double> values;
};

using ObstacleSpec = std::variant<NoObstacle, ConstantObstacle, ParabolaObstacle, HolderObstacle, TableObstacle>;

ObstacleSpec obstacle_from_json(const Json& j);
Json to_json(const ObstacleSpec& h);
/// Empty function for NoObstacle.
std::function<double(double)> obstacle_function(const ObstacleSpec& h);

enum class InitKind { Default, Random };

struct SolverSettings {
    SolveConfig config;
    InitKind init = InitKind::Default;
};

SolverSettings solver_from_json(const Json& j);

/// Shortest decimal that round-trips; the same bytes on every run.
std::string format_double(double v);

Json to_json(const ProbeReport& rep);

/// Header: cell_center,u,h,g,contact_flag,residual. h is empty without an obstacle;
/// contact_flag is 1 on INTERIOR cells within contact_tol of the obstacle.
void write_solution_csv(std::ostream& os, const ObstacleInstance& inst, const SolveResult& res, double contact_tol);

/// Header: sweep,energy.
void write_energy_csv(std::ostream& os, const SolveResult& res);

/// Header: probe_name,resolution,radius,measured,fitted_exponent,fitted_constant,passed.
void write_probe_csv(std::ostream& os, std::span<const ProbeReport> reports);

/// Header: check,p,a,b,a2,b2,lhs,rhs. No rows when every suite passed.
void write_violations_csv(std::ostream& os, std::span<const LemmaSuiteResult> results);

Json to_json(const LemmaSuiteResult& r);

}  // namespace nlobs
