#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nlobs/io.hpp"

namespace nlobs {

inline constexpr const char* kStepNames[] = {
    "solve",   "validate-lemmas", "probe-sup",   "probe-osc-interior", "probe-osc-boundary", "caccioppoli",
    "poincare", "uniqueness",     "supersolution", "smallest-super",   "contact-free",       "study"};

struct StepSpec {
    std::string name;
    /// Step parameters; an empty object when the step was given by name.
    Json params = Json::object();
};

/// Instance sections are kept as JSON so overrides can be applied before the instance is built.
struct ExperimentConfig {
    Json geometry;
    Json kernel;
    Json data;
    Json obstacle;
    Json solver;
    std::vector<StepSpec> pipeline;
    std::uint64_t seed = 0;

    /// Canonical JSON of the whole config; the manifest hashes this.
    Json to_json() const;
};

/// Parses and validates atomically: every section, every step's parameters and every
/// step's prerequisites are checked before anything runs. Throws ConfigError.
ExperimentConfig parse_config(const Json& j);

/// Applies --seed / --cells style overrides, then re-validates.
void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<std::size_t> cells);

/// Throws ConfigError when the pipeline is empty, names an unknown step, or a step's
/// prerequisites are missing.
void validate_pipeline(const ExperimentConfig& cfg);

struct RunOptions {
    std::filesystem::path out_dir;
    /// Progress lines go here unless null.
    std::ostream* log = nullptr;
    /// Test hook: validate-lemmas runs against a deliberately wrong nonlinearity.
    bool corrupt_nonlinearity = false;
};

enum class StepStatus { Passed, Failed, Error, Skipped };

const char* to_string(StepStatus s) noexcept;

struct StepOutcome {
    std::string name;
    StepStatus status = StepStatus::Skipped;
    double wall_seconds = 0.0;
    std::vector<std::string> files;
    std::string message;
};

struct RunSummary {
    std::vector<StepOutcome> steps;
    /// 0 when every step passed, 1 otherwise.
    int exit_code = 0;
};

/// Runs the steps in order and writes per-step artifacts plus manifest.json. A failing
/// step does not stop later steps; steps that need a solve are skipped when it threw.
RunSummary run_pipeline(const ExperimentConfig& cfg, const RunOptions& opts);

/// Writes manifest.json for a config that never ran (parse or validation failure).
void write_failure_manifest(const std::filesystem::path& out_dir, const std::string& config_source,
                            const std::string& error);

/// Library version, SIMD variant and compiler.
Json version_info();

}  // namespace nlobs
