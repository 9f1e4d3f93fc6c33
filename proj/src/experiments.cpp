#include "dicke/experiments.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "dicke/analytic_n2.hpp"
#include "dicke/errors.hpp"
#include "dicke/observables.hpp"
#include "dicke/parallel.hpp"

namespace dicke {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

const std::set<std::string, std::less<>> kKnownKeys = {
    "experiment", "name", "model", "N", "omega0", "delta", "epsilon", "g_eff", "kappa", "gamma", "gamma_d",
    "lambda_pump", "omega_drive_amp", "omega_L", "n_cut", "couplings", "points", "half_width", "excitation",
    "compare_jc", "compare_tc", "compare_oscillators", "check_truncation", "inject_fault"};

template <class T>
std::optional<T> get(const json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    try {
        if constexpr (std::is_same_v<T, int>) {
            if (!it->is_number_integer()) throw ConfigError(std::string("config key '") + key + "' must be an integer");
        } else if constexpr (std::is_same_v<T, double>) {
            if (!it->is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) throw ConfigError(std::string("config key '") + key + "' must be true or false");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!it->is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
        }
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

ModelSpec reference_spec(const ModelSpec& base, ModelKind kind) {
    ModelSpec ref = base;
    ref.kind = kind;
    ref.epsilon = 0.0;
    ref.couplings.clear();
    if (kind == ModelKind::jc) ref.n_levels = 1;
    return ref;
}

std::string format_number(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

json peaks_json(const std::vector<double>& omegas, const std::vector<double>& values, double omega0, double g) {
    json out = json::array();
    for (const Peak& p : find_peaks(omegas, values)) out.push_back((p.omega - omega0) / g);
    return out;
}

// Eigenvalues of a real symmetric matrix, ascending.
Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

// Rethrow a point failure with the sweep coordinate in front.
[[noreturn]] void rethrow_at(const std::string& where) {
    try {
        throw;
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(where + ": " + e.what());
    } catch (const SolverError& e) {
        throw SolverError(where + ": " + e.what());
    }
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::spectrum: return "spectrum";
        case ExperimentKind::g2sweep: return "g2sweep";
        case ExperimentKind::eigs: return "eigs";
        case ExperimentKind::validate_n2: return "validate-n2";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
    if (name == "spectrum") return ExperimentKind::spectrum;
    if (name == "g2sweep") return ExperimentKind::g2sweep;
    if (name == "eigs") return ExperimentKind::eigs;
    if (name == "validate-n2") return ExperimentKind::validate_n2;
    throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

json ExperimentConfig::to_json() const {
    json j;
    j["experiment"] = std::string(to_string(kind));
    j["name"] = name;
    j["model"] = std::string(dicke::to_string(model.kind));
    j["N"] = model.n_levels;
    j["omega0"] = model.omega0;
    j["delta"] = model.delta;
    j["epsilon"] = model.epsilon;
    j["g_eff"] = model.g_eff;
    j["kappa"] = model.kappa;
    j["gamma"] = model.gamma_rate();
    j["gamma_d"] = model.gamma_d;
    j["lambda_pump"] = model.lambda_pump;
    j["omega_drive_amp"] = model.drive_amp;
    j["omega_L"] = model.omega_drive;
    j["n_cut"] = model.n_cut;
    if (!model.couplings.empty()) j["couplings"] = model.couplings;
    j["points"] = points;
    j["half_width"] = half_width;
    j["excitation"] = excitation;
    j["compare_jc"] = compare_jc;
    j["compare_tc"] = compare_tc;
    j["compare_oscillators"] = compare_oscillators;
    j["check_truncation"] = check_truncation;
    if (!inject_fault.empty()) j["inject_fault"] = inject_fault;
    return j;
}

ExperimentConfig parse_config(const json& doc, std::optional<ExperimentKind> kind) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& item : doc.items())
        if (!kKnownKeys.contains(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");

    ExperimentConfig c;
    const auto named = get<std::string>(doc, "experiment");
    if (named && kind && parse_experiment_kind(*named) != *kind)
        throw ConfigError("config experiment '" + *named + "' does not match command '" + std::string(to_string(*kind)) +
                          "'");
    if (!named && !kind) throw ConfigError("no experiment kind given");
    c.kind = kind ? *kind : parse_experiment_kind(*named);
    c.name = get<std::string>(doc, "name").value_or(std::string(to_string(c.kind)));
    if (c.name.empty() || c.name.find('/') != std::string::npos)
        throw ConfigError("name must be a non-empty file stem without '/'");

    ModelSpec& m = c.model;
    if (const auto model = get<std::string>(doc, "model"); model && parse_model_kind(*model) != ModelKind::multilevel)
        throw ConfigError("model must be 'multilevel'; reference models are selected with compare_*");
    const bool two_level_suite = c.kind == ExperimentKind::eigs || c.kind == ExperimentKind::validate_n2;
    m.n_levels = get<int>(doc, "N").value_or(two_level_suite ? 2 : 3);
    m.omega0 = get<double>(doc, "omega0").value_or(0.0);
    m.delta = get<double>(doc, "delta").value_or(0.0);
    m.epsilon = get<double>(doc, "epsilon").value_or(0.0);
    m.g_eff = get<double>(doc, "g_eff").value_or(1.0);
    m.kappa = get<double>(doc, "kappa").value_or(0.0);
    m.gamma = get<double>(doc, "gamma");
    m.gamma_d = get<double>(doc, "gamma_d").value_or(0.0);
    m.lambda_pump = get<double>(doc, "lambda_pump").value_or(0.0);
    m.drive_amp = get<double>(doc, "omega_drive_amp").value_or(c.kind == ExperimentKind::g2sweep ? 0.01 * m.g_eff : 0.0);
    m.omega_drive = get<double>(doc, "omega_L").value_or(m.omega0);
    m.n_cut = get<int>(doc, "n_cut").value_or(c.kind == ExperimentKind::g2sweep ? 5 : 7);
    if (const auto it = doc.find("couplings"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) throw ConfigError("config key 'couplings' must be an array of numbers");
        for (const auto& v : *it) {
            if (!v.is_number()) throw ConfigError("config key 'couplings' must be an array of numbers");
            m.couplings.push_back(v.get<double>());
        }
    }

    c.points = get<int>(doc, "points").value_or(c.kind == ExperimentKind::spectrum ? 401 : 201);
    c.half_width = get<double>(doc, "half_width").value_or(c.kind == ExperimentKind::eigs ? 1.0 : 2.5);
    c.excitation = get<int>(doc, "excitation").value_or(1);
    c.compare_jc = get<bool>(doc, "compare_jc").value_or(true);
    c.compare_tc = get<bool>(doc, "compare_tc").value_or(true);
    c.compare_oscillators = get<bool>(doc, "compare_oscillators").value_or(true);
    c.check_truncation = get<bool>(doc, "check_truncation").value_or(c.kind == ExperimentKind::spectrum);
    c.inject_fault = get<std::string>(doc, "inject_fault").value_or("");

    if (c.points < 2) throw ConfigError("points must be at least 2");
    if (!(c.half_width > 0.0)) throw ConfigError("half_width must be > 0");
    if (c.excitation < 1) throw ConfigError("excitation must be >= 1");
    if (!c.inject_fault.empty() && (c.kind != ExperimentKind::validate_n2 || c.inject_fault != "epsilon_sign"))
        throw ConfigError("inject_fault supports only 'epsilon_sign' with validate-n2");

    switch (c.kind) {
        case ExperimentKind::spectrum:
            if (!(m.lambda_pump > 0.0)) throw ConfigError("spectrum needs lambda_pump > 0");
            if (m.drive_amp != 0.0) throw ConfigError("spectrum needs omega_drive_amp = 0");
            break;
        case ExperimentKind::g2sweep:
            if (!(m.drive_amp > 0.0)) throw ConfigError("g2sweep needs omega_drive_amp > 0");
            if (m.lambda_pump != 0.0) throw ConfigError("g2sweep needs lambda_pump = 0");
            break;
        case ExperimentKind::eigs:
            m.n_cut = std::max(m.n_cut, c.excitation);
            break;
        case ExperimentKind::validate_n2:
            if (m.n_levels != 2) throw ConfigError("validate-n2 needs N = 2");
            m.n_cut = std::max(m.n_cut, 5);
            break;
    }
    if (c.kind == ExperimentKind::eigs || c.kind == ExperimentKind::validate_n2) {
        m.lambda_pump = 0.0;
        m.drive_amp = 0.0;
    }
    validate(m);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_config(doc, kind);
}

std::vector<double> Table::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::out_of_range("no column " + std::string(name));
    std::size_t c = std::size_t(it - header.begin());
    if (!labels.empty()) {
        if (c == 0) throw std::out_of_range("column " + std::string(name) + " is not numeric");
        --c;
    }
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
}

std::string to_csv(const Table& table) {
    std::ostringstream os;
    for (std::size_t c = 0; c < table.header.size(); ++c) os << (c ? "," : "") << table.header[c];
    os << '\n';
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        bool first = true;
        if (!table.labels.empty()) {
            os << table.labels[r];
            first = false;
        }
        for (double v : table.rows[r]) {
            os << (first ? "" : ",") << format_number(v);
            first = false;
        }
        os << '\n';
    }
    return os.str();
}

ExperimentResult run_spectrum(const ExperimentConfig& config, int jobs) {
    const Stopwatch clock;
    const ModelSpec& m = config.model;
    const auto omegas = frequency_grid(m.omega0, config.half_width * m.g_eff, config.points);

    SpectrumOptions opts;
    opts.check_truncation = config.check_truncation;
    opts.jobs = jobs;
    opts.steady.auto_truncation = true;

    ExperimentResult out;
    out.name = config.name;
    out.meta["config"] = config.to_json();

    const SpectrumResult multi = emission_spectrum(m, omegas, opts);
    const double pd = multi.p_dark.value_or(0.0);
    std::vector<std::pair<std::string, std::vector<double>>> columns{{"S_multilevel", multi.values}};
    json n_cut{{"multilevel", multi.n_cut}};
    json change;
    if (multi.truncation_change) change["multilevel"] = *multi.truncation_change;
    json peaks{{"S_multilevel", peaks_json(omegas, multi.values, m.omega0, m.g_eff)}};

    std::vector<std::pair<std::string, ModelKind>> refs;
    if (config.compare_jc) refs.emplace_back("jc", ModelKind::jc);
    if (config.compare_tc) refs.emplace_back("tc", ModelKind::tc);
    for (const auto& [label, kind] : refs) {
        const SpectrumResult raw = emission_spectrum(reference_spec(m, kind), omegas, opts);
        const SpectrumResult scaled = rescale_reference(raw, pd);
        const std::string col = "S_" + label + "_rescaled";
        columns.emplace_back(col, scaled.values);
        n_cut[label] = raw.n_cut;
        if (raw.truncation_change) change[label] = *raw.truncation_change;
        peaks[col] = peaks_json(omegas, scaled.values, m.omega0, m.g_eff);
    }

    out.table.header.push_back("omega_over_geff");
    for (const auto& col : columns) out.table.header.push_back(col.first);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        std::vector<double> row{(omegas[i] - m.omega0) / m.g_eff};
        for (const auto& col : columns) row.push_back(col.second[i]);
        out.table.rows.push_back(std::move(row));
    }

    out.meta["p_dark"] = pd;
    out.meta["n_cut"] = n_cut;
    if (!change.is_null()) out.meta["truncation_change"] = change;
    out.meta["peaks_over_geff"] = peaks;
    out.meta["columns"] = out.table.header;
    out.meta["runtime_seconds"] = clock.seconds();
    return out;
}

ExperimentResult run_g2sweep(const ExperimentConfig& config, int jobs) {
    const Stopwatch clock;
    const ModelSpec& m = config.model;
    const auto x = frequency_grid(0.0, config.half_width, config.points);

    std::vector<std::pair<std::string, ModelSpec>> models{{"multilevel", m}};
    if (config.compare_jc) models.emplace_back("jc", reference_spec(m, ModelKind::jc));
    if (config.compare_tc) models.emplace_back("tc", reference_spec(m, ModelKind::tc));
    if (config.compare_oscillators) models.emplace_back("oscillators", reference_spec(m, ModelKind::oscillators));

    G2Options opts;
    opts.check_truncation = config.check_truncation;

    const std::size_t np = x.size();
    std::vector<double> values(models.size() * np, kNaN);
    std::vector<int> cuts(models.size() * np, 0);
    std::vector<double> changes(models.size() * np, 0.0);
    std::vector<char> undefined(models.size() * np, 0);
    parallel_for(values.size(), jobs, [&](std::size_t k) {
        const std::size_t mi = k / np, i = k % np;
        ModelSpec spec = models[mi].second;
        spec.omega_drive = m.omega0 + x[i] * m.g_eff;
        try {
            const G2Result r = g2_zero(spec, opts);
            values[k] = r.value;
            cuts[k] = r.n_cut;
            changes[k] = r.truncation_change.value_or(0.0);
        } catch (const std::domain_error&) {
            // No photons at this drive frequency: g2(0) is undefined.
            undefined[k] = 1;
        } catch (...) {
            rethrow_at(models[mi].first + " at omegaL_minus_omega0_over_geff = " + format_number(x[i]));
        }
    });

    ExperimentResult out;
    out.name = config.name;
    out.meta["config"] = config.to_json();
    out.table.header.push_back("omegaL_minus_omega0_over_geff");
    for (const auto& model : models) out.table.header.push_back("g2_" + model.first);
    for (std::size_t i = 0; i < np; ++i) {
        std::vector<double> row{x[i]};
        for (std::size_t mi = 0; mi < models.size(); ++mi) row.push_back(values[mi * np + i]);
        out.table.rows.push_back(std::move(row));
    }

    json n_cut, undefined_points, change;
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const std::string& label = models[mi].first;
        int lo = 0, hi = 0;
        for (std::size_t i = 0; i < np; ++i) {
            const int c = cuts[mi * np + i];
            if (c == 0) continue;
            lo = lo == 0 ? c : std::min(lo, c);
            hi = std::max(hi, c);
        }
        n_cut[label] = {{"min", lo}, {"max", hi}};
        undefined_points[label] = json::array();
        for (std::size_t i = 0; i < np; ++i)
            if (undefined[mi * np + i]) undefined_points[label].push_back(x[i]);
        if (config.check_truncation)
            change[label] = *std::max_element(changes.begin() + long(mi * np), changes.begin() + long((mi + 1) * np));
    }
    out.meta["n_cut"] = n_cut;
    out.meta["undefined_points"] = undefined_points;
    if (config.check_truncation) out.meta["truncation_change"] = change;
    out.meta["columns"] = out.table.header;
    out.meta["runtime_seconds"] = clock.seconds();
    return out;
}

ExperimentResult run_eigs(const ExperimentConfig& config, int /*jobs*/) {
    const Stopwatch clock;
    const ModelSpec& m = config.model;
    const int n = config.excitation;
    const double g = m.g_eff;
    const double ref = n * m.omega0;
    const auto x = frequency_grid(0.0, config.half_width, config.points);
    const bool analytic = m.n_levels == 2 && m.couplings.empty();
    const int branches = m.n_levels + 1;

    ExperimentResult out;
    out.name = config.name;
    out.meta["config"] = config.to_json();
    out.table.header.push_back("delta_over_geff");
    if (analytic) {
        out.table.header.insert(out.table.header.end(), {"E_minus", "E_dark", "E_plus"});
    } else {
        for (int b = 1; b <= branches; ++b) out.table.header.push_back("E_" + std::to_string(b));
    }
    out.table.header.insert(out.table.header.end(), {"E_jc_minus", "E_jc_plus"});
    if (analytic) out.table.header.push_back("E_dark_perturbative");

    double jc_dev = 0.0, dark_err = 0.0, block_dev = 0.0;
    for (double xi : x) {
        const double delta = xi * g;
        ModelSpec spec = m;
        spec.delta = delta;
        const Eigen::VectorXd numeric = sorted_eigenvalues(n2::numeric_block(spec, n));
        Eigen::VectorXd e = numeric;
        if (analytic) {
            e = sorted_eigenvalues(n2::block_matrix(n, m.omega0, g, delta, m.epsilon));
            block_dev = std::max(block_dev, (e - numeric).cwiseAbs().maxCoeff() / g);
        }
        const double root = std::sqrt(0.25 * delta * delta + n * g * g);
        const double jc_minus = 0.5 * delta - root, jc_plus = 0.5 * delta + root;
        const double lo = e(0) - ref, hi = e(branches - 1) - ref;
        jc_dev = std::max({jc_dev, std::abs(lo - jc_minus) / std::abs(jc_minus), std::abs(hi - jc_plus) / std::abs(jc_plus)});

        std::vector<double> row{xi};
        for (int b = 0; b < branches; ++b) row.push_back((e(b) - ref) / g);
        row.push_back(jc_minus / g);
        row.push_back(jc_plus / g);
        if (analytic) {
            const double pert = n2::perturbative_dark_energy(n, delta, g, m.epsilon);
            const double exact = e(1) - ref;
            if (std::abs(exact) > 1e-12 * g) dark_err = std::max(dark_err, std::abs(exact - pert) / std::abs(exact));
            row.push_back(pert / g);
        }
        out.table.rows.push_back(std::move(row));
    }

    out.meta["excitation"] = n;
    out.meta["max_relative_deviation_from_jc"] = jc_dev;
    if (analytic) {
        out.meta["max_relative_error_dark_perturbative"] = dark_err;
        out.meta["max_block_vs_full_hamiltonian"] = block_dev;
    }
    out.meta["columns"] = out.table.header;
    out.meta["runtime_seconds"] = clock.seconds();
    return out;
}

namespace {

struct Check {
    Check(std::string check_name, double tol) : name(std::move(check_name)), tolerance(tol) {}

    std::string name;
    double tolerance{0.0};
    double max_error{0.0};
    long evaluations{0};
    bool extra_failure{false};  // failures not expressed by max_error (labels, monotonicity)
    std::string note;
    json worst;

    void record(double error, const json& where) {
        if (std::isnan(error)) error = INFINITY;
        if (evaluations++ == 0 || error > max_error) {
            max_error = error;
            worst = where;
        }
    }
    bool passed() const { return !extra_failure && max_error <= tolerance; }
    json to_json() const {
        json j{{"name", name}, {"passed", passed()}, {"max_error", max_error}, {"tolerance", tolerance},
               {"evaluations", evaluations}, {"worst", worst}};
        if (!note.empty()) j["note"] = note;
        return j;
    }
};

Eigen::Matrix3d block_for_check(const ExperimentConfig& c, int n, double delta, double epsilon) {
    const double eps = c.inject_fault == "epsilon_sign" ? -epsilon : epsilon;
    return n2::block_matrix(n, c.model.omega0, c.model.g_eff, delta, eps);
}

// Eigenvectors of the numerical block, ordered -, D, + (ascending energy at delta = 0).
Eigen::Matrix3d numeric_eigenvectors(const Eigen::MatrixXd& block) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block);
    return solver.eigenvectors();
}

}  // namespace

ExperimentResult run_validate_n2(const ExperimentConfig& config, int jobs) {
    const Stopwatch clock;
    const double g = config.model.g_eff;
    const double w0 = config.model.omega0;
    std::vector<Check> checks;

    // Closed-form eigensystem against the numerical block.
    Check eigval{"eigenvalues_closed_form", 1e-10}, eigvec{"eigenvector_residual", 1e-10},
        ortho{"eigenvector_orthonormality", 1e-12};
    for (int n = 1; n <= 4; ++n)
        for (double e : {0.0, 0.05, 0.1, 0.25, 0.3}) {
            const double eps = e * g;
            const json where{{"n", n}, {"epsilon_over_geff", e}};
            const Eigen::Matrix3d b = block_for_check(config, n, 0.0, eps);
            const n2::BlockEigensystem es = n2::resonant_eigensystem(n, w0, g, eps);
            const Eigen::Vector3d closed(es.e_minus, es.e_dark, es.e_plus);
            eigval.record((closed - sorted_eigenvalues(b)).cwiseAbs().maxCoeff(), where);
            double residual = 0.0;
            for (const auto& [v, energy] : {std::pair{es.v_minus, es.e_minus}, std::pair{es.v_dark, es.e_dark},
                                            std::pair{es.v_plus, es.e_plus}})
                residual = std::max(residual, (b * v - energy * v).cwiseAbs().maxCoeff());
            eigvec.record(residual, where);
            Eigen::Matrix3d v;
            v << es.v_minus, es.v_dark, es.v_plus;
            ortho.record((v.transpose() * v - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), where);
        }

    // Full truncated Hamiltonian, restricted to fixed excitation number.
    Check full{"full_space_eigenvalues", 1e-10};
    for (double d : {0.0, 0.2})
        for (double e : {0.05, 0.25}) {
            ModelSpec spec = config.model;
            spec.delta = d * g;
            spec.epsilon = e * g;
            const Matrix h = build_hamiltonian(spec).matrix();
            const Eigen::VectorXd count = excitation_number(spec).matrix().diagonal().real();
            for (int n = 1; n <= spec.n_cut - 1; ++n) {
                std::vector<Index> idx;
                for (Index i = 0; i < count.size(); ++i)
                    if (std::abs(count(i) - n) < 1e-9) idx.push_back(i);
                Eigen::MatrixXd sub(Index(idx.size()), Index(idx.size()));
                for (std::size_t r = 0; r < idx.size(); ++r)
                    for (std::size_t c = 0; c < idx.size(); ++c) sub(Index(r), Index(c)) = h(idx[r], idx[c]).real();
                const Eigen::VectorXd expected = sorted_eigenvalues(block_for_check(config, n, spec.delta, spec.epsilon));
                const double err = sub.rows() == 3 ? (sorted_eigenvalues(sub) - expected).cwiseAbs().maxCoeff() : INFINITY;
                full.record(err, {{"n", n}, {"delta_over_geff", d}, {"epsilon_over_geff", e}});
            }
        }

    // |<E_f|a|E_i>|^2 from numerically diagonalized blocks embedded in the full space.
    Check jumps{"jump_matrix_elements", 1e-12};
    for (double e : {0.05, 0.25}) {
        ModelSpec spec = config.model;
        spec.delta = 0.0;
        spec.epsilon = e * g;
        const Matrix a = cavity_annihilation(spec).matrix();
        auto states = [&](int n) -> Matrix {
            const Matrix basis = n2::excitation_block_basis(spec, n);
            return basis * numeric_eigenvectors(n2::numeric_block(spec, n)).cast<cplx>();
        };
        for (int n = 1; n <= 4; ++n) {
            const Matrix upper = states(n);  // columns -, D, +
            const n2::JumpElements an = n2::jump_matrix_elements(n, g, spec.epsilon);
            const json where{{"n", n}, {"epsilon_over_geff", e}};
            if (n == 1) {
                const Matrix image = a * upper.col(1);
                jumps.record(std::abs(std::norm(image(0)) - *an.dark_to_ground), where);
                continue;
            }
            const Matrix lower = states(n - 1);
            const Matrix amp = lower.adjoint() * a * upper;  // amp(f, i) = <E_f|a|E_i>
            jumps.record(std::abs(std::norm(amp(1, 1)) - *an.dark_to_dark), where);
            jumps.record(std::abs(std::norm(amp(0, 1)) - *an.dark_to_polariton), where);
            jumps.record(std::abs(std::norm(amp(2, 1)) - *an.dark_to_polariton), where);
            jumps.record(std::abs(std::norm(amp(1, 0)) - *an.polariton_to_dark), where);
            jumps.record(std::abs(std::norm(amp(1, 2)) - *an.polariton_to_dark), where);
        }
    }

    // Non-Hermitian linewidths against loss plus dephasing estimates on an 11^3 grid.
    Check widths{"linewidth_composition", 0.035};
    {
        struct Point {
            int n;
            double e, k, d;
        };
        std::vector<Point> grid;
        for (int n = 1; n <= 2; ++n)
            for (int i = 0; i <= 10; ++i)
                for (int j = 0; j <= 10; ++j)
                    for (int l = 0; l <= 10; ++l) grid.push_back({n, 0.025 * i, 0.2 * j, 0.2 * l});
        std::vector<n2::Linewidths> numeric(grid.size());
        parallel_for(grid.size(), jobs, [&](std::size_t p) {
            ModelSpec spec = config.model;
            spec.delta = 0.0;
            spec.epsilon = grid[p].e * g;
            spec.kappa = grid[p].k * g;
            spec.gamma_d = grid[p].d * g;
            spec.n_cut = grid[p].n;
            numeric[p] = n2::nonhermitian_linewidths(spec, grid[p].n);
        });
        long ambiguous = 0;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const Point& q = grid[p];
            const json where{{"n", q.n}, {"epsilon_over_geff", q.e}, {"kappa_over_geff", q.k}, {"gamma_d_over_geff", q.d}};
            if (numeric[p].ambiguous) {
                ++ambiguous;
                widths.record(INFINITY, where);
                continue;
            }
            const n2::RatePair loss = n2::loss_rates(q.n, q.k * g, g, q.e * g);
            const n2::RatePair deph = n2::dephasing_broadenings(q.n, q.d * g, g, q.e * g);
            const double pol = loss.polariton + deph.polariton;
            const double dark = loss.dark + deph.dark;
            auto rel = [&](double num, double est) { return std::abs(num - est) / std::max(std::abs(est), 1e-9 * g); };
            widths.record(std::max({rel(numeric[p].plus, pol), rel(numeric[p].minus, pol), rel(numeric[p].dark, dark)}),
                          where);
        }
        if (ambiguous) {
            widths.extra_failure = true;
            widths.note = std::to_string(ambiguous) + " grid points with ambiguous eigenstate labels";
        }
    }

    // Second-order rate expansions against exact-eigenvector expectation values:
    // residual / (epsilon/g)^4 gives the fitted constant, and the residual must grow with epsilon.
    Check loss_fit{"loss_rate_expansion", INFINITY}, deph_fit{"dephasing_expansion", INFINITY};
    double loss_c = 0.0, deph_c = 0.0;
    for (int n = 1; n <= 4; ++n) {
        std::array<double, 3> prev_loss{}, prev_deph{};
        for (int i = 1; i <= 15; ++i) {
            const double e = 0.02 * i;
            const Eigen::Matrix3d v = numeric_eigenvectors(n2::block_matrix(n, w0, g, 0.0, e * g));
            const n2::RatePair loss = n2::loss_rates(n, 1.0, g, e * g);
            const n2::RatePair deph = n2::dephasing_broadenings(n, 1.0, g, e * g);
            const json where{{"n", n}, {"epsilon_over_geff", e}};
            for (int s = 0; s < 3; ++s) {
                const double photon = v(0, s) * v(0, s);
                const double exact_loss = n * photon + (n - 1) * (1.0 - photon);
                const double exact_deph = 1.0 - photon;
                const double est_loss = s == 1 ? loss.dark : loss.polariton;
                const double est_deph = s == 1 ? deph.dark : deph.polariton;
                const double r_loss = std::abs(exact_loss - est_loss), r_deph = std::abs(exact_deph - est_deph);
                const double e4 = std::pow(e, 4);
                loss_c = std::max(loss_c, r_loss / e4);
                deph_c = std::max(deph_c, r_deph / e4);
                loss_fit.record(r_loss, where);
                deph_fit.record(r_deph, where);
                const double slack = 1e-15;
                if (r_loss + slack < prev_loss[s]) loss_fit.extra_failure = true;
                if (r_deph + slack < prev_deph[s]) deph_fit.extra_failure = true;
                prev_loss[s] = r_loss;
                prev_deph[s] = r_deph;
            }
        }
    }
    loss_fit.note = "fitted C = " + format_number(loss_c) + (loss_fit.extra_failure ? "; residual not monotone" : "");
    deph_fit.note = "fitted C = " + format_number(deph_c) + (deph_fit.extra_failure ? "; residual not monotone" : "");

    checks = {eigval, eigvec, ortho, full, jumps, widths, loss_fit, deph_fit};

    ExperimentResult out;
    out.name = config.name;
    out.table.header = {"check", "max_error", "tolerance", "passed"};
    json report = json::array();
    for (const Check& c : checks) {
        out.table.labels.push_back(c.name);
        out.table.rows.push_back({c.max_error, c.tolerance, c.passed() ? 1.0 : 0.0});
        report.push_back(c.to_json());
        if (!c.passed() && out.passed) {
            out.passed = false;
            out.failure = "validate-n2: " + c.name + " failed: max error " + format_number(c.max_error) +
                          " (tolerance " + format_number(c.tolerance) + ") at " + c.worst.dump() +
                          (c.note.empty() ? "" : "; " + c.note);
        }
    }
    out.meta["config"] = config.to_json();
    out.meta["passed"] = out.passed;
    out.meta["checks"] = report;
    out.meta["fitted_c"] = {{"loss_rate", loss_c}, {"dephasing", deph_c}};
    out.meta["columns"] = out.table.header;
    out.meta["runtime_seconds"] = clock.seconds();
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int jobs) {
    switch (config.kind) {
        case ExperimentKind::spectrum: return run_spectrum(config, jobs);
        case ExperimentKind::g2sweep: return run_g2sweep(config, jobs);
        case ExperimentKind::eigs: return run_eigs(config, jobs);
        case ExperimentKind::validate_n2: return run_validate_n2(config, jobs);
    }
    throw ConfigError("unknown experiment");
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto write = [&](const std::string& file, const std::string& text) {
        std::ofstream os(out_dir / file, std::ios::binary);
        os << text;
        if (!os) throw std::runtime_error("cannot write " + (out_dir / file).string());
    };
    write(result.name + ".csv", to_csv(result.table));
    write(result.name + ".meta.json", result.meta.dump(2) + "\n");
    if (result.meta.contains("checks")) {
        const json report{{"passed", result.passed}, {"checks", result.meta["checks"]}};
        write(result.name + ".report.json", report.dump(2) + "\n");
    }
}

}  // namespace dicke
