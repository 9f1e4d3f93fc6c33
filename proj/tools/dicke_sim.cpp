// dicke-sim: run one experiment from a JSON config and write <name>.csv and <name>.meta.json.
//
//   dicke-sim <spectrum|g2sweep|eigs|validate-n2> --config <path> --out <dir> [--jobs N]
//
// Exit status: 0 success, 2 configuration error, 3 convergence or invariant
// failure, 4 validation failure.

#include <filesystem>
#include <iostream>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "dicke/errors.hpp"
#include "dicke/experiments.hpp"

int main(int argc, char** argv) {
    using namespace dicke;

    CLI::App app{"Cavity QED steady states, emission spectra and g2(0) for multilevel emitters"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    const std::pair<const char*, const char*> commands[] = {
        {"spectrum", "steady-state cavity emission spectrum with JC and TC references"},
        {"g2sweep", "coherently driven g2(0) against drive frequency for all models"},
        {"eigs", "excitation-block eigenvalues against detuning"},
        {"validate-n2", "two-sublevel closed forms against numerics"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON experiment config")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int status = app.exit(e);
        return status == 0 ? exit_code::ok : exit_code::config;
    }

    try {
        const auto kind = parse_experiment_kind(app.get_subcommands().front()->get_name());
        const ExperimentConfig config = load_config(config_path, kind);
        const ExperimentResult result = run_experiment(config, jobs);
        write_outputs(result, out_dir);
        if (!result.passed) {
            std::cerr << result.failure << '\n';
            return exit_code::validation;
        }
        return exit_code::ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_code::config;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return exit_code::config;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << '\n';
        return exit_code::convergence;
    }
}
