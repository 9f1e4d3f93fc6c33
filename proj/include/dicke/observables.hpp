// observables.hpp: cavity emission spectrum, g2(0), dark-state population
//
// Spectra follow S(w) = 2 Re int_0^inf <a^dagger(tau) a(0)> e^{-i w tau} dtau in
// arbitrary units, evaluated through the regression theorem as
// S(w) = -2 Re Tr[a^dagger (L - i w)^{-1} (a rho_ss)].

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dicke/hilbert.hpp"
#include "dicke/liouvillian.hpp"
#include "dicke/models.hpp"

namespace dicke {

// Steady states with more than this population in the top Fock level are not converged.
inline constexpr double kTopFockTolerance = 1e-8;
// Relative tolerance for the n_cut -> n_cut + 3 comparison.
inline constexpr double kTruncationTolerance = 1e-6;
// |Tr(a rho_ss)| above this makes the incoherent spectrum ill-posed.
inline constexpr double kCoherenceTolerance = 1e-10;
// g2(0) is reported undefined (std::domain_error) when <a^dagger a>^2 falls below this.
inline constexpr double kG2ResolutionFloor = 1e-24;

struct SteadySolution {
    ModelSpec spec;  // n_cut is the truncation actually used
    Superoperator generator;
    DensityMatrix rho;
    double top_fock_population{0.0};
};

// Largest population in the top level of any truncated bosonic factor.
double top_fock_population(const DensityMatrix& rho, const ModelSpec& spec);

struct SteadyOptions {
    SolveOptions solve;
    // Raise n_cut one step at a time until the top-level population is below
    // kTopFockTolerance, up to max_n_cut. Without it an unconverged state throws.
    bool auto_truncation{false};
    int max_n_cut{12};
};

// Steady state of the model, in the rotating frame when a coherent drive is present.
SteadySolution solve_steady(const ModelSpec& spec, const SteadyOptions& options = {});

std::vector<double> frequency_grid(double center, double half_width, int points);
std::vector<double> default_spectrum_grid(const ModelSpec& spec, int points = 401, double half_width_geff = 2.5);

enum class ResolventMethod { automatic, hessenberg, direct };

struct SpectrumOptions {
    ResolventMethod method{ResolventMethod::automatic};
    // Recompute at n_cut + 3 at every spectral peak and require kTruncationTolerance agreement.
    bool check_truncation{false};
    int jobs{1};
    SteadyOptions steady;
};

struct SpectrumResult {
    std::vector<double> omegas;
    std::vector<double> values;
    ModelSpec spec;
    std::optional<double> p_dark;
    int n_cut{0};
    std::optional<double> truncation_change;  // max relative change at peaks, when checked
};

// The regression problem S(w) = -2 Re probe^dagger (A - i w)^{-1} source. When the
// excitation-number operator is supplied and the generator conserves coherence order,
// A is L restricted to the sector holding a*rho (order -1), which excludes the
// steady-state zero mode. Otherwise A = L + vec(rho) Tr(.), equal to L on traceless
// vectors and nonsingular at w = 0.
struct RegressionProblem {
    SparseMatrix generator;
    Vector source;
    Vector probe;
    bool sector_reduced{false};
};

RegressionProblem regression_problem(const Superoperator& generator, const DensityMatrix& rho, const Operator& a,
                                     const Operator* excitation = nullptr);

std::vector<double> spectrum_values(const RegressionProblem& problem, std::span<const double> omegas,
                                    ResolventMethod method = ResolventMethod::automatic, int jobs = 1);

std::vector<double> spectrum_values(const Superoperator& generator, const DensityMatrix& rho, const Operator& a,
                                    std::span<const double> omegas, ResolventMethod method = ResolventMethod::automatic,
                                    int jobs = 1, const Operator* excitation = nullptr);

// Incoherently pumped spectrum; requires lambda_pump > 0 and no coherent drive.
SpectrumResult emission_spectrum(const ModelSpec& spec, std::span<const double> omegas, const SpectrumOptions& options = {});

SpectrumResult rescale_reference(SpectrumResult spectrum, double p_dark);

// <a^dagger a^dagger a a> / <a^dagger a>^2.
double g2_zero(const DensityMatrix& rho, const Operator& a);

struct G2Options {
    bool check_truncation{false};
    // Bound on the truncation weight below; n_cut is raised (steady.auto_truncation)
    // until it holds.
    double tail_tolerance{1e-10};
    SteadyOptions steady{SolveOptions{}, true, 12};
};

// Top-level population times n_cut (n_cut - 1) / <a^dagger a>^2: the size of the
// g2(0) numerator contribution that the truncation can distort.
double g2_truncation_weight(const DensityMatrix& rho, const ModelSpec& spec);

struct G2Result {
    double value{0.0};
    int n_cut{0};
    std::optional<double> truncation_change;
};

// Coherently driven g2(0) from the rotating-frame steady state; requires drive_amp > 0, lambda_pump = 0.
G2Result g2_zero(const ModelSpec& spec, const G2Options& options = {});

struct DarkPopulation {
    double value{0.0};       // sum_k Tr(rho |D_k><D_k|)
    double complement{0.0};  // 1 - Tr(rho (|B><B| + |G><G|))
};

DarkPopulation dark_population(const DensityMatrix& rho, const ModelSpec& spec);
double p_dark(const DensityMatrix& rho, const ModelSpec& spec);

struct Peak {
    double omega{0.0};  // refined by a parabola through log S at the three points around the maximum
    double value{0.0};
    std::size_t index{0};
};

// Strict local maxima of log S, ignoring points below rel_floor * max(S).
std::vector<Peak> find_peaks(std::span<const double> omegas, std::span<const double> values, double rel_floor = 1e-12);

}  // namespace dicke
