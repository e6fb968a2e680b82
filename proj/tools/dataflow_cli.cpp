#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dataflow/dataflow.hpp"

namespace {

bool is_preset(const std::string& name) {
    for (const auto& [p, desc] : dataflow::list_presets())
        if (p == name) return true;
    return false;
}

dataflow::ScenarioConfig resolve(const std::string& target) {
    if (is_preset(target)) return dataflow::preset(target);
    if (!std::filesystem::exists(target))
        throw dataflow::ConfigError("'" + target + "' is neither a preset nor a config file");
    return dataflow::load_config(target);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-flow simulator: microscopic lattice and macroscopic "
                 "conservation-law models of asynchronous parallel computation"};
    app.require_subcommand(1);

    std::string target;
    std::optional<int> nx, nz;
    std::optional<double> t_final;
    std::optional<std::string> outdir;
    std::optional<bool> micro;

    CLI::App* run_cmd = app.add_subcommand("run", "run a preset or a config file");
    run_cmd->add_option("target", target, "preset name or config path")->required();
    run_cmd->add_option("--nx", nx, "override the number of x cells");
    run_cmd->add_option("--nz", nz, "override the number of z cells");
    run_cmd->add_option("--t-final", t_final, "override the final time");
    run_cmd->add_option("--outdir", outdir, "override the output directory");
    run_cmd->add_flag("--micro,!--no-micro", micro, "toggle the lattice validation run");

    CLI::App* list_cmd = app.add_subcommand("list-presets", "list the built-in experiments");

    CLI::App* validate_cmd = app.add_subcommand("validate", "parse and check a config file");
    std::string validate_target;
    validate_cmd->add_option("config", validate_target, "config path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*list_cmd) {
            for (const auto& [name, desc] : dataflow::list_presets())
                std::cout << name << ": " << desc << '\n';
            return dataflow::kExitOk;
        }
        if (*validate_cmd) {
            const dataflow::ScenarioConfig cfg = dataflow::load_config(validate_target);
            std::cout << "ok: scenario '" << cfg.name << "' (" << cfg.nx << "x" << cfg.nz
                      << ", t_final = " << dataflow::format_double(cfg.t_final) << ")\n";
            return dataflow::kExitOk;
        }

        dataflow::ScenarioConfig cfg = resolve(target);
        if (nx) cfg.nx = *nx;
        if (nz) cfg.nz = *nz;
        if (t_final) {
            cfg.t_final = *t_final;
            cfg.output_times.clear(); // preset snapshot times may no longer apply
        }
        if (outdir) cfg.outdir = *outdir;
        if (micro) cfg.micro_enabled = *micro;

        const dataflow::ScenarioResult res = dataflow::run_scenario(cfg, std::cout);
        if (res.exit_code != dataflow::kExitOk)
            std::cerr << "error: " << res.message << '\n';
        else
            std::cout << "artifacts written to " << res.outdir.string() << '\n';
        return res.exit_code;
    } catch (const dataflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return dataflow::kExitConfigError;
    } catch (const dataflow::DivergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return dataflow::kExitNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return dataflow::kExitNumericalFailure;
    }
}
