#include "dicke/observables.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dicke/errors.hpp"
#include "dicke/parallel.hpp"

namespace dicke {

namespace {

// Liouville dimension up to which one Hessenberg reduction beats per-frequency LU.
constexpr Index kHessenbergLimit = 1100;

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

double relative_change(double reference, double other) {
    const double scale = std::abs(reference);
    if (scale == 0.0) return other == 0.0 ? 0.0 : INFINITY;
    return std::abs(other - reference) / scale;
}

SteadySolution solve_once(const ModelSpec& spec, const SolveOptions& options) {
    Superoperator generator = assemble(steady_state_hamiltonian(spec), build_jumps(spec));
    DensityMatrix rho = steady_state(generator, options);
    const double top = top_fock_population(rho, spec);
    return {spec, std::move(generator), std::move(rho), top};
}

}  // namespace

double top_fock_population(const DensityMatrix& rho, const ModelSpec& spec) {
    const SpaceLayout& layout = rho.layout();
    const Index dc = layout.dim(0);
    const Index de = layout.dim(1);
    const Matrix& m = rho.matrix();
    double cavity_top = 0.0;
    for (Index e = 0; e < de; ++e) cavity_top += m((dc - 1) * de + e, (dc - 1) * de + e).real();
    if (spec.kind != ModelKind::oscillators) return cavity_top;
    double mode_top = 0.0;
    for (Index n = 0; n < dc; ++n) mode_top += m(n * de + de - 1, n * de + de - 1).real();
    return std::max(cavity_top, mode_top);
}

SteadySolution solve_steady(const ModelSpec& spec, const SteadyOptions& options) {
    validate(spec);
    ModelSpec trial = spec;
    while (true) {
        SteadySolution sol = solve_once(trial, options.solve);
        if (sol.top_fock_population < kTopFockTolerance) return sol;
        if (!options.auto_truncation || trial.n_cut >= options.max_n_cut)
            throw ConvergenceError("Fock truncation not converged: top-level population " +
                                   fmt(sol.top_fock_population) + " at n_cut = " + std::to_string(trial.n_cut));
        ++trial.n_cut;
    }
}

std::vector<double> frequency_grid(double center, double half_width, int points) {
    if (points < 2) throw std::invalid_argument("frequency_grid: at least two points required");
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) out[i] = center + half_width * (2 * i - (points - 1)) / (points - 1);
    return out;
}

std::vector<double> default_spectrum_grid(const ModelSpec& spec, int points, double half_width_geff) {
    return frequency_grid(spec.omega0, half_width_geff * spec.g_eff, points);
}

RegressionProblem regression_problem(const Superoperator& generator, const DensityMatrix& rho, const Operator& a,
                                     const Operator* excitation) {
    const Index d = generator.hilbert_dim();
    const Vector source = vec((a * rho.op()).matrix());
    const Vector probe = vec(a.matrix());

    if (excitation != nullptr) {
        // vec index p = i + j d holds rho_ij; keep entries with n_i - n_j = -1.
        const Eigen::VectorXd levels = excitation->matrix().diagonal().real();
        std::vector<int> position(static_cast<std::size_t>(d * d), -1);
        std::vector<Index> kept;
        for (Index j = 0; j < d; ++j)
            for (Index i = 0; i < d; ++i)
                if (std::abs(levels(i) - levels(j) + 1.0) < 1e-9) {
                    position[std::size_t(i + j * d)] = int(kept.size());
                    kept.push_back(i + j * d);
                }

        bool closed = true;
        using Triplet = Eigen::Triplet<cplx>;
        std::vector<Triplet> triplets;
        const SparseMatrix& l = generator.matrix();
        for (std::size_t c = 0; c < kept.size() && closed; ++c)
            for (SparseMatrix::InnerIterator it(l, kept[c]); it; ++it) {
                const int r = position[std::size_t(it.row())];
                if (r < 0) {
                    closed = false;
                    break;
                }
                triplets.emplace_back(r, Index(c), it.value());
            }

        double outside = 0.0;
        Vector src(Index(kept.size())), prb(Index(kept.size()));
        for (std::size_t c = 0; c < kept.size(); ++c) {
            src(Index(c)) = source(kept[c]);
            prb(Index(c)) = probe(kept[c]);
        }
        outside = std::max((source.squaredNorm() - src.squaredNorm()) / std::max(source.squaredNorm(), 1e-300),
                           (probe.squaredNorm() - prb.squaredNorm()) / std::max(probe.squaredNorm(), 1e-300));
        if (closed && outside < 1e-20) {
            SparseMatrix reduced(Index(kept.size()), Index(kept.size()));
            reduced.setFromTriplets(triplets.begin(), triplets.end());
            reduced.makeCompressed();
            return {std::move(reduced), std::move(src), std::move(prb), true};
        }
    }

    // Rank-one deflation of the zero mode: add vec(rho) times the trace functional.
    const Vector rho_vec = vec(rho.matrix());
    std::vector<Eigen::Triplet<cplx>> triplets;
    const SparseMatrix& l = generator.matrix();
    triplets.reserve(std::size_t(l.nonZeros() + d * d * d));
    for (Index j = 0; j < l.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(l, j); it; ++it) triplets.emplace_back(it.row(), it.col(), it.value());
    for (Index k = 0; k < d; ++k)
        for (Index p = 0; p < d * d; ++p)
            if (rho_vec(p) != cplx(0.0)) triplets.emplace_back(p, k * d + k, rho_vec(p));
    SparseMatrix deflated(d * d, d * d);
    deflated.setFromTriplets(triplets.begin(), triplets.end());
    deflated.makeCompressed();
    return {std::move(deflated), source, probe, false};
}

std::vector<double> spectrum_values(const RegressionProblem& problem, std::span<const double> omegas,
                                    ResolventMethod method, int jobs) {
    if (method == ResolventMethod::automatic)
        method = problem.generator.rows() <= kHessenbergLimit ? ResolventMethod::hessenberg : ResolventMethod::direct;

    std::vector<double> out(omegas.size());
    if (method == ResolventMethod::hessenberg) {
        const ShiftedResolvent resolvent{Matrix(problem.generator)};
        const auto values = resolvent.bilinear(problem.probe, problem.source, omegas);
        for (std::size_t i = 0; i < omegas.size(); ++i) out[i] = -2.0 * values[i].real();
    } else {
        parallel_for(omegas.size(), jobs, [&](std::size_t i) {
            out[i] = -2.0 * problem.probe.dot(shifted_solve(problem.generator, omegas[i], problem.source)).real();
        });
    }
    return out;
}

std::vector<double> spectrum_values(const Superoperator& generator, const DensityMatrix& rho, const Operator& a,
                                    std::span<const double> omegas, ResolventMethod method, int jobs,
                                    const Operator* excitation) {
    return spectrum_values(regression_problem(generator, rho, a, excitation), omegas, method, jobs);
}

SpectrumResult emission_spectrum(const ModelSpec& spec, std::span<const double> omegas, const SpectrumOptions& options) {
    validate(spec);
    if (spec.drive_amp != 0.0) throw ConfigError("emission_spectrum: coherent drive must be zero");
    if (!(spec.lambda_pump > 0.0)) throw ConfigError("emission_spectrum: incoherent pump must be > 0");

    const SteadySolution sol = solve_steady(spec, options.steady);
    const Operator a = cavity_annihilation(sol.spec);
    const double coherence = std::abs(expectation(a, sol.rho.op()));
    if (!(coherence < kCoherenceTolerance))
        throw ConvergenceError("emission_spectrum: steady-state coherence |<a>| = " + fmt(coherence));

    SpectrumResult result;
    result.omegas.assign(omegas.begin(), omegas.end());
    const Operator excitation = excitation_number(sol.spec);
    result.values = spectrum_values(sol.generator, sol.rho, a, omegas, options.method, options.jobs, &excitation);
    result.spec = sol.spec;
    result.n_cut = sol.spec.n_cut;
    if (spec.kind == ModelKind::multilevel) result.p_dark = p_dark(sol.rho, sol.spec);

    const auto [lo, hi] = std::minmax_element(result.values.begin(), result.values.end());
    if (!result.values.empty() && *lo < -1e-8 * std::max(*hi, 0.0))
        throw ConvergenceError("emission_spectrum: negative spectral value " + fmt(*lo));

    if (options.check_truncation) {
        ModelSpec bigger = sol.spec;
        bigger.n_cut += 3;
        SteadyOptions strict = options.steady;
        strict.auto_truncation = false;
        const SteadySolution ref = solve_steady(bigger, strict);
        const Operator a_ref = cavity_annihilation(bigger);
        auto peaks = find_peaks(result.omegas, result.values);
        if (peaks.empty() && !result.values.empty())
            peaks.push_back({result.omegas[std::size_t(hi - result.values.begin())], *hi,
                             std::size_t(hi - result.values.begin())});
        std::vector<double> at(peaks.size());
        for (std::size_t p = 0; p < peaks.size(); ++p) at[p] = result.omegas[peaks[p].index];
        const Operator excitation_ref = excitation_number(bigger);
        const auto check =
            spectrum_values(ref.generator, ref.rho, a_ref, at, ResolventMethod::direct, options.jobs, &excitation_ref);
        double worst = 0.0;
        for (std::size_t p = 0; p < peaks.size(); ++p)
            worst = std::max(worst, relative_change(result.values[peaks[p].index], check[p]));
        result.truncation_change = worst;
        if (!(worst < kTruncationTolerance))
            throw ConvergenceError("emission_spectrum: n_cut " + std::to_string(sol.spec.n_cut) + " -> " +
                                   std::to_string(bigger.n_cut) + " changes peak values by " + fmt(worst));
    }
    return result;
}

SpectrumResult rescale_reference(SpectrumResult spectrum, double p_dark_value) {
    if (!(p_dark_value >= 0.0 && p_dark_value <= 1.0))
        throw std::invalid_argument("rescale_reference: p_dark must lie in [0, 1]");
    for (double& v : spectrum.values) v *= (1.0 - p_dark_value);
    return spectrum;
}

double g2_zero(const DensityMatrix& rho, const Operator& a) {
    const Operator n_op = a.dagger() * a;
    const double n = expectation(n_op, rho.op()).real();
    const double pairs = expectation(a.dagger() * n_op * a, rho.op()).real();
    if (!(n * n >= kG2ResolutionFloor))
        throw std::domain_error("g2_zero: photon number " + fmt(n) + " too small to resolve g2(0)");
    return pairs / (n * n);
}

G2Result g2_zero(const ModelSpec& spec, const G2Options& options) {
    validate(spec);
    if (!(spec.drive_amp > 0.0)) throw ConfigError("g2_zero: coherent drive must be > 0");
    if (spec.lambda_pump != 0.0) throw ConfigError("g2_zero: incoherent pump must be zero");

    ModelSpec trial = spec;
    SteadySolution sol = solve_steady(trial, options.steady);
    // Fail before raising n_cut: two-photon populations below this floor are not
    // resolved by a unit-trace double-precision state.
    const Operator a0 = cavity_annihilation(sol.spec);
    const double n0 = expectation(a0.dagger() * a0, sol.rho.op()).real();
    if (!(n0 * n0 >= kG2ResolutionFloor))
        throw std::domain_error("g2_zero: photon number " + fmt(n0) + " too small to resolve g2(0)");
    while (true) {
        const double weight = g2_truncation_weight(sol.rho, sol.spec);
        if (weight < options.tail_tolerance) break;
        if (!options.steady.auto_truncation || sol.spec.n_cut >= options.steady.max_n_cut)
            throw ConvergenceError("g2_zero: truncation weight " + fmt(weight) + " at n_cut = " +
                                   std::to_string(sol.spec.n_cut));
        trial.n_cut = sol.spec.n_cut + 1;
        sol = solve_steady(trial, options.steady);
    }
    G2Result out{g2_zero(sol.rho, cavity_annihilation(sol.spec)), sol.spec.n_cut, std::nullopt};
    if (options.check_truncation) {
        ModelSpec bigger = sol.spec;
        bigger.n_cut += 3;
        SteadyOptions strict = options.steady;
        strict.auto_truncation = false;
        const SteadySolution ref = solve_steady(bigger, strict);
        const double change = relative_change(out.value, g2_zero(ref.rho, cavity_annihilation(bigger)));
        out.truncation_change = change;
        if (!(change < kTruncationTolerance))
            throw ConvergenceError("g2_zero: n_cut " + std::to_string(sol.spec.n_cut) + " -> " +
                                   std::to_string(bigger.n_cut) + " changes g2(0) by " + fmt(change));
    }
    return out;
}

double g2_truncation_weight(const DensityMatrix& rho, const ModelSpec& spec) {
    const Operator a = cavity_annihilation(spec);
    const double n = expectation(a.dagger() * a, rho.op()).real();
    const double k = spec.n_cut;
    return top_fock_population(rho, spec) * k * (k - 1.0) / std::max(n * n, 1e-300);
}

DarkPopulation dark_population(const DensityMatrix& rho, const ModelSpec& spec) {
    const RadiationProjectors proj = radiation_projectors(spec);
    DarkPopulation out;
    for (const auto& d : proj.dark) out.value += expectation(d, rho.op()).real();
    out.complement = 1.0 - expectation(proj.bright + proj.ground, rho.op()).real();
    return out;
}

double p_dark(const DensityMatrix& rho, const ModelSpec& spec) {
    const DarkPopulation dp = dark_population(rho, spec);
    if (!(std::abs(dp.value - dp.complement) <= 1e-10))
        throw ConvergenceError("p_dark: dark sum " + fmt(dp.value) + " disagrees with complement " + fmt(dp.complement));
    return dp.value;
}

std::vector<Peak> find_peaks(std::span<const double> omegas, std::span<const double> values, double rel_floor) {
    if (omegas.size() != values.size()) throw std::invalid_argument("find_peaks: size mismatch");
    std::vector<Peak> peaks;
    if (values.size() < 3) return peaks;
    const double top = *std::max_element(values.begin(), values.end());
    if (!(top > 0.0)) return peaks;
    const double floor = rel_floor * top;
    auto logv = [&](std::size_t i) { return std::log(std::max(values[i], floor)); };
    for (std::size_t i = 1; i + 1 < values.size(); ++i) {
        if (values[i] <= floor) continue;
        const double l = logv(i - 1), c = logv(i), r = logv(i + 1);
        if (!(c > l && c >= r)) continue;
        const double curvature = l - 2.0 * c + r;
        double shift = curvature < 0.0 ? 0.5 * (l - r) / curvature : 0.0;
        shift = std::clamp(shift, -0.5, 0.5);
        const double step = 0.5 * (omegas[i + 1] - omegas[i - 1]);
        peaks.push_back({omegas[i] + shift * step, values[i], i});
    }
    return peaks;
}

}  // namespace dicke
