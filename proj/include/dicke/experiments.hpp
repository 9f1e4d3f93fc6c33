// experiments.hpp: configuration-driven runs behind the dicke-sim command line
//
// A config is one flat JSON object. Model keys:
//   model, N, omega0, delta, epsilon, g_eff, kappa, gamma, gamma_d,
//   lambda_pump, omega_drive_amp, omega_L, n_cut, couplings
// Run keys:
//   experiment, name, points, half_width (units of g_eff), excitation,
//   compare_jc, compare_tc, compare_oscillators, check_truncation, inject_fault
// Unknown keys are rejected so that typos cannot silently fall back to defaults.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dicke/models.hpp"

namespace dicke {

enum class ExperimentKind { spectrum, g2sweep, eigs, validate_n2 };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

struct ExperimentConfig {
    ExperimentKind kind{ExperimentKind::spectrum};
    ModelSpec model;
    std::string name;
    int points{0};            // grid size; 401 for spectra, 201 otherwise
    double half_width{0.0};   // grid half width in units of g_eff; 2.5, or 1 for eigs
    int excitation{1};        // eigs: excitation number n of the block
    bool compare_jc{true};
    bool compare_tc{true};
    bool compare_oscillators{true};
    bool check_truncation{false};
    std::string inject_fault;  // validate-n2 only: "epsilon_sign" flips the block coupling

    nlohmann::json to_json() const;
};

// Fills defaults and validates. When `kind` is given (from the command line) a
// config "experiment" key must agree with it. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc, std::optional<ExperimentKind> kind = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind = std::nullopt);

// Numeric table with an optional leading text column.
struct Table {
    std::vector<std::string> header;
    std::vector<std::string> labels;  // empty, or one per row
    std::vector<std::vector<double>> rows;

    std::vector<double> column(std::string_view name) const;
};

// Header row, ',' delimiter, 17 significant digits, '\n' line ends.
std::string to_csv(const Table& table);

struct ExperimentResult {
    std::string name;
    Table table;
    nlohmann::json meta;     // resolved config, solver metadata, runtime
    bool passed{true};       // validate-n2 only
    std::string failure;     // first failing check, when !passed
};

ExperimentResult run_spectrum(const ExperimentConfig& config, int jobs = 1);
ExperimentResult run_g2sweep(const ExperimentConfig& config, int jobs = 1);
ExperimentResult run_eigs(const ExperimentConfig& config, int jobs = 1);
ExperimentResult run_validate_n2(const ExperimentConfig& config, int jobs = 1);
ExperimentResult run_experiment(const ExperimentConfig& config, int jobs = 1);

// Writes <name>.csv and <name>.meta.json (and <name>.report.json for validate-n2).
void write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int convergence = 3;
inline constexpr int validation = 4;
}  // namespace exit_code

}  // namespace dicke
