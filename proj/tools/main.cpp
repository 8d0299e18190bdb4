#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "nlobs/error.hpp"
#include "nlobs/pipeline.hpp"
#include "presets.hpp"

namespace {

using nlobs::ConfigError;
using nlobs::Json;

constexpr int kExitConfig = 2;

const std::set<std::string> kProbeSteps{"probe-sup", "probe-osc-interior", "probe-osc-boundary", "caccioppoli",
                                        "poincare"};

struct Options {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    std::size_t cells = 0;
    bool quiet = false;
    bool corrupt = false;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* cells_opt = nullptr;
};

// Holds an exclusive advisory lock on <out>/.lock for the life of the process.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& dir) {
        std::filesystem::create_directories(dir);
        const auto file = dir / ".lock";
        fd_ = ::open(file.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) throw ConfigError("cannot open lock file " + file.string());
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            throw ConfigError("output directory " + dir.string() + " is in use by another run");
        }
    }
    ~OutputLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    int fd_ = -1;
};

Json load_config(const std::string& source) {
    std::string text;
    if (source.rfind("preset:", 0) == 0) {
        const std::string name = source.substr(7);
        for (const auto& p : nlobs::cli::presets())
            if (p.name == name) text = p.json;
        if (text.empty()) throw ConfigError("unknown preset '" + name + "'");
    } else {
        std::ifstream is(source, std::ios::binary);
        if (!is) throw ConfigError("cannot read config " + source);
        std::ostringstream ss;
        ss << is.rdbuf();
        text = ss.str();
    }
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

std::string step_name(const Json& step) {
    if (step.is_string()) return step.get<std::string>();
    if (step.is_object() && step.contains("step") && step.at("step").is_string()) return step.at("step").get<std::string>();
    return {};
}

Json steps_of(const Json& cfg) {
    const auto it = cfg.find("pipeline");
    return it != cfg.end() && it->is_array() ? *it : Json::array();
}

// Runs a config whose pipeline has been rewritten by `rewrite`; returns the exit code.
template <class Rewrite>
int execute(const Options& o, Rewrite&& rewrite) {
    const std::filesystem::path out(o.out);
    const std::string source = o.config.empty() ? "<none>" : o.config;
    std::optional<OutputLock> lock;
    nlobs::ExperimentConfig cfg;
    try {
        lock.emplace(out);
        Json j = o.config.empty() ? Json::object() : load_config(o.config);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        rewrite(j);
        cfg = nlobs::parse_config(j);
        nlobs::apply_overrides(cfg, o.seed_opt->count() ? std::optional(o.seed) : std::nullopt,
                               o.cells_opt->count() ? std::optional(o.cells) : std::nullopt);
    } catch (const nlobs::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        if (lock) nlobs::write_failure_manifest(out, source, e.what());
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const auto summary = nlobs::run_pipeline(cfg, {out, o.quiet ? nullptr : &std::cerr, o.corrupt});
    if (!o.quiet)
        for (const auto& s : summary.steps)
            std::cout << s.name << ": " << nlobs::to_string(s.status) << (s.message.empty() ? "" : " (" + s.message + ")")
                      << '\n';
    return summary.exit_code;
}

void add_common(CLI::App* app, Options& o, bool config_required) {
    auto* c = app->add_option("--config", o.config, "Config file path or preset:NAME");
    if (config_required) c->required();
    app->add_option("--out", o.out, "Output directory")->capture_default_str();
    o.seed_opt = app->add_option("--seed", o.seed, "Override the config seed");
    o.cells_opt = app->add_option("--cells", o.cells, "Override geometry.n_cells")->check(CLI::PositiveNumber);
    app->add_flag("--quiet", o.quiet, "Suppress progress output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal obstacle problem solver and experiment runner"};
    app.require_subcommand(1);

    Options run_o, solve_o, probe_o, study_o, lemma_o;

    auto* run = app.add_subcommand("run", "Run the full pipeline of a config");
    add_common(run, run_o, true);
    run->add_flag("--corrupt-L", run_o.corrupt, "Test hook: validate lemmas against a wrong nonlinearity");

    auto* solve = app.add_subcommand("solve", "Solve the config's instance only");
    add_common(solve, solve_o, true);

    auto* probe = app.add_subcommand("probe", "Solve, then run the config's probe steps");
    add_common(probe, probe_o, true);
    std::vector<std::string> probe_names;
    probe->add_option("--probe", probe_names, "Restrict to these probe steps");

    auto* study = app.add_subcommand("study", "Run the config's refinement studies");
    add_common(study, study_o, true);

    auto* lemmas = app.add_subcommand("validate-lemmas", "Randomized checks of the elementary inequalities");
    add_common(lemmas, lemma_o, false);
    std::vector<double> ps{1.1, 1.5, 2.0, 2.5, 3.5};
    std::uint64_t samples = 1000000;
    lemmas->add_option("--p", ps, "Exponents")->capture_default_str();
    lemmas->add_option("--samples", samples, "Samples per suite")->capture_default_str();
    lemmas->add_flag("--corrupt-L", lemma_o.corrupt, "Test hook: use a deliberately wrong nonlinearity");

    auto* list = app.add_subcommand("presets", "List bundled configs");
    std::string show;
    list->add_option("--show", show, "Print the named preset");

    CLI11_PARSE(app, argc, argv);

    if (*list) {
        for (const auto& p : nlobs::cli::presets()) {
            if (show.empty()) {
                std::cout << p.name << '\n';
            } else if (p.name == show) {
                std::cout << p.json;
                return 0;
            }
        }
        if (!show.empty()) {
            std::cerr << "unknown preset '" << show << "'\n";
            return kExitConfig;
        }
        return 0;
    }
    if (*run) return execute(run_o, [](Json&) {});
    if (*solve) return execute(solve_o, [](Json& j) { j["pipeline"] = Json::array({"solve"}); });
    if (*probe)
        return execute(probe_o, [&](Json& j) {
            Json steps = Json::array({"solve"});
            for (const auto& s : steps_of(j)) {
                const std::string n = step_name(s);
                if (kProbeSteps.count(n) &&
                    (probe_names.empty() || std::find(probe_names.begin(), probe_names.end(), n) != probe_names.end()))
                    steps.push_back(s);
            }
            if (steps.size() == 1) throw ConfigError("config has no matching probe steps");
            j["pipeline"] = steps;
        });
    if (*study)
        return execute(study_o, [](Json& j) {
            Json steps = Json::array();
            for (const auto& s : steps_of(j))
                if (step_name(s) == "study") steps.push_back(s);
            if (steps.empty()) steps.push_back("study");
            j["pipeline"] = steps;
        });
    return execute(lemma_o, [&](Json& j) {
        Json step = {{"step", "validate-lemmas"}, {"p", ps}, {"samples", samples}};
        if (!j.contains("seed")) j["seed"] = std::uint64_t{42};
        j["pipeline"] = Json::array({step});
    });
}
