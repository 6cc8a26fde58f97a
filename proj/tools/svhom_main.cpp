#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "svhom/config.hpp"
#include "svhom/pipeline.hpp"

namespace {

int run_stages(const std::string& config_path, const std::string& out_override,
               long long seed_override, int threads_override,
               const std::vector<std::string>& stages) {
    using namespace svhom;
    try {
        RunConfig cfg = RunConfig::load(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
        if (threads_override > 0) cfg.threads = threads_override;
        if (!stages.empty()) cfg.stages = stages;
        const PipelineResult res = run_pipeline(cfg);
        for (const auto& v : res.verdicts)
            std::cout << (v.pass ? "[pass] " : "[FAIL] ") << v.id << ": " << v.description
                      << " (measured " << v.measured << ", threshold " << v.threshold << ")\n";
        return static_cast<int>(res.exit_code);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return static_cast<int>(svhom::ExitCode::config_error);
    } catch (const PreconditionError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return static_cast<int>(svhom::ExitCode::config_error);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return static_cast<int>(svhom::ExitCode::numerical_failure);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(svhom::ExitCode::numerical_failure);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-scale stochastic volatility homogenization toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int threads = 0;
    std::string stage_override;

    app.add_option("--config", config_path, "configuration file")->required();
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--seed", seed, "seed override");
    app.add_option("--threads", threads, "worker threads (must not change results)");
    app.add_option("--stage", stage_override, "restrict `run` to a single stage");

    std::vector<std::string> commands = svhom::known_stages();
    commands.push_back("run");
    for (const auto& name : commands) {
        const std::string desc =
            name == "run" ? "execute the configured stages in dependency order"
                          : "run the '" + name + "' stage";
        app.add_subcommand(name, desc)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(svhom::ExitCode::config_error);
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    std::vector<std::string> stages;
    if (sub != "run") {
        stages = {sub};
    } else if (!stage_override.empty()) {
        stages = {stage_override};
        const auto& known = svhom::known_stages();
        if (std::find(known.begin(), known.end(), stage_override) == known.end()) {
            std::cerr << "config error: unknown stage '" << stage_override << "'\n";
            return static_cast<int>(svhom::ExitCode::config_error);
        }
    }
    return run_stages(config_path, out_dir, seed, threads, stages);
}
