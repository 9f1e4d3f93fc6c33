#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dicke/errors.hpp"
#include "dicke/observables.hpp"

using namespace dicke;

namespace {

ModelSpec figure_spec(double kappa, double lambda_over_kappa, double gamma_d = 0.0, int n = 3, double epsilon = 0.05) {
    ModelSpec s;
    s.kind = ModelKind::multilevel;
    s.n_levels = n;
    s.epsilon = epsilon;
    s.kappa = kappa;
    s.lambda_pump = lambda_over_kappa * kappa;
    s.gamma_d = gamma_d;
    s.n_cut = 7;
    return s;
}

ModelSpec driven(ModelKind kind, double kappa, double omega_l, int n = 3) {
    ModelSpec s;
    s.kind = kind;
    s.n_levels = kind == ModelKind::jc ? 1 : n;
    s.epsilon = kind == ModelKind::multilevel && n > 1 ? 0.05 : 0.0;
    s.kappa = kappa;
    s.drive_amp = 0.01;
    s.omega_drive = omega_l;
    s.n_cut = 5;
    return s;
}

std::vector<double> peak_positions(const SpectrumResult& r) {
    std::vector<double> out;
    for (const Peak& p : find_peaks(r.omegas, r.values)) out.push_back(p.omega);
    return out;
}

bool has_peak_near(const std::vector<double>& peaks, double target, double tol) {
    return std::any_of(peaks.begin(), peaks.end(), [&](double p) { return std::abs(p - target) <= tol; });
}

}  // namespace

TEST_CASE("pumped single mode has a Lorentzian spectrum") {
    // a thermal mode: loss kappa, gain p; <a^dagger(tau) a> = nbar e^{(i w0 - (kappa - p)/2) tau}
    const double w0 = 0.3, kappa = 1.0, p = 0.05;
    const double width = kappa - p, nbar = p / width;
    const Operator a = fock_annihilation(14);
    const SpaceLayout layout = a.layout();
    const Superoperator l =
        assemble(w0 * (a.dagger() * a), {{"loss", std::sqrt(kappa) * a}, {"gain", std::sqrt(p) * a.dagger()}});
    const DensityMatrix rho = steady_state(l);
    const auto omegas = frequency_grid(w0, 2.0, 41);
    const Operator number = a.dagger() * a;
    for (const Operator* excitation : {static_cast<const Operator*>(nullptr), &number}) {
        for (ResolventMethod m : {ResolventMethod::direct, ResolventMethod::hessenberg}) {
            const auto s = spectrum_values(l, rho, a, omegas, m, 1, excitation);
            for (std::size_t i = 0; i < omegas.size(); ++i) {
                const double dw = omegas[i] - w0;
                const double lorentz = nbar * width / (dw * dw + width * width / 4);
                CHECK(std::abs(s[i] - lorentz) < 1e-8 * lorentz);
            }
        }
    }
    CHECK(layout.total_dim() == 15);
}

TEST_CASE("spectral features of the two pumping regimes") {
    SUBCASE("single-excitation regime") {
        const ModelSpec s = figure_spec(1.0, 0.01);
        const auto r = emission_spectrum(s, default_spectrum_grid(s));
        const auto peaks = peak_positions(r);
        // doublet near +-g_eff and a narrow central feature fed by the dark sublevels
        const auto top = std::max_element(r.values.begin(), r.values.end());
        CHECK(has_peak_near(peaks, -1.0, 0.1));
        CHECK(has_peak_near(peaks, 1.0, 0.1));
        CHECK(has_peak_near(peaks, 0.0, 0.05));
        CHECK(*std::min_element(r.values.begin(), r.values.end()) >= -1e-8 * *top);
    }
    SUBCASE("bi-excitation regime") {
        const ModelSpec s = figure_spec(0.05, 0.02);
        const auto peaks = peak_positions(emission_spectrum(s, default_spectrum_grid(s)));
        for (double x : {std::sqrt(2.0) - 1.0, std::sqrt(2.0) + 1.0}) {
            CHECK(has_peak_near(peaks, x, 0.02));
            CHECK(has_peak_near(peaks, -x, 0.02));
        }
    }
}

TEST_CASE("spectrum preconditions") {
    ModelSpec s = figure_spec(1.0, 0.01);
    s.lambda_pump = 0.0;
    CHECK_THROWS_AS(emission_spectrum(s, frequency_grid(0, 1, 5)), ConfigError);
    s = driven(ModelKind::jc, 1.0, 0.0);
    CHECK_THROWS_AS(emission_spectrum(s, frequency_grid(0, 1, 5)), ConfigError);
    s = figure_spec(1.0, 3.0);  // strong pump: the Fock tail is not converged at n_cut 7
    s.n_cut = 2;
    CHECK_THROWS_AS(emission_spectrum(s, frequency_grid(0, 1, 5)), ConvergenceError);
}

TEST_CASE("truncation and grid refinement stability") {
    ModelSpec s = figure_spec(0.05, 0.02);
    SpectrumOptions opts;
    opts.check_truncation = true;
    const auto coarse = emission_spectrum(s, default_spectrum_grid(s, 201), opts);
    REQUIRE(coarse.truncation_change);
    CHECK(*coarse.truncation_change < 1e-6);
    const auto fine = emission_spectrum(s, default_spectrum_grid(s, 401));
    const auto pc = peak_positions(coarse), pf = peak_positions(fine);
    const double step = coarse.omegas[1] - coarse.omegas[0];
    // the coarse grid cannot split the narrow central doublet, so match peaks one way
    CHECK(pc.size() <= pf.size());
    for (double p : pc) CHECK(has_peak_near(pf, p, step));
}

TEST_CASE("degenerate dark limit: peaks coincide with JC") {
    // epsilon = 0, gamma_d = 0: the dark sublevels decouple from the field
    for (double kappa : {1.0, 0.05}) {
        CAPTURE(kappa);
        ModelSpec s = figure_spec(kappa, kappa == 1.0 ? 0.01 : 0.02, 0.0, 3, 0.0);
        ModelSpec jc = s;
        jc.kind = ModelKind::jc;
        jc.n_levels = 1;
        const auto grid = default_spectrum_grid(s);
        const auto pm = peak_positions(emission_spectrum(s, grid));
        const auto pj = peak_positions(emission_spectrum(jc, grid));
        const double step = grid[1] - grid[0];
        for (double p : pj) CHECK(has_peak_near(pm, p, step));
        for (double p : pm) CHECK(has_peak_near(pj, p, step));
    }
}

TEST_CASE("degenerate dark limit: normalized line shapes match JC") {
    for (double kappa : {1.0, 0.05}) {
        CAPTURE(kappa);
        ModelSpec s = figure_spec(kappa, kappa == 1.0 ? 0.01 : 0.02, 0.0, 3, 0.0);
        ModelSpec jc = s;
        jc.kind = ModelKind::jc;
        jc.n_levels = 1;
        const auto grid = default_spectrum_grid(s);
        const auto m = emission_spectrum(s, grid).values, j = emission_spectrum(jc, grid).values;
        const double mm = *std::max_element(m.begin(), m.end()), mj = *std::max_element(j.begin(), j.end());
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(m[i] / mm - j[i] / mj));
        CHECK(worst <= 0.01);
        const auto pm = find_peaks(grid, m), pj = find_peaks(grid, j);
        CHECK(pm.size() == pj.size());
    }
}

TEST_CASE("dark-state population") {
    ModelSpec one = figure_spec(1.0, 0.01, 0.0, 1, 0.0);
    CHECK(emission_spectrum(one, frequency_grid(0, 1, 3)).p_dark.value() == 0.0);

    const auto grid = frequency_grid(0, 1, 3);
    const double p0 = *emission_spectrum(figure_spec(1.0, 0.01, 0.0, 3, 0.0), grid).p_dark;
    const double ph = *emission_spectrum(figure_spec(1.0, 0.01, 1.0, 3, 0.0), grid).p_dark;
    CHECK(p0 > 0.8);
    CHECK(ph < 0.5 * p0);

    ModelSpec s = figure_spec(1.0, 0.01);
    const SteadySolution sol = solve_steady(s);
    const DarkPopulation dp = dark_population(sol.rho, s);
    CHECK(std::abs(dp.value - dp.complement) < 1e-10);
}

TEST_CASE("reference rescaling") {
    SpectrumResult r;
    r.omegas = {0.0, 1.0, 2.0};
    r.values = {1.0, 4.0, 2.0};
    CHECK(rescale_reference(r, 0.0).values == r.values);
    for (double v : rescale_reference(r, 1.0).values) CHECK(v == 0.0);
    const auto half = rescale_reference(r, 0.25).values;
    for (std::size_t i = 0; i < 3; ++i) CHECK(half[i] == doctest::Approx(0.75 * r.values[i]));
    CHECK_THROWS(rescale_reference(r, 1.5));
    CHECK_THROWS(rescale_reference(r, -0.1));
}

TEST_CASE("g2 of a coherently driven empty cavity is 1") {
    const Operator a = fock_annihilation(10);
    const Operator h = 0.2 * (a.dagger() * a) + 0.3 * (a + a.dagger());
    const DensityMatrix rho = steady_state(assemble(h, {{"loss", a}}));
    CHECK(std::abs(g2_zero(rho, a) - 1.0) < 1e-9);

    Matrix vac = Matrix::Zero(11, 11);
    vac(0, 0) = 1.0;
    CHECK_THROWS_AS(g2_zero(DensityMatrix(Operator(a.layout(), vac)), a), std::domain_error);
}

TEST_CASE("g2 witnesses of nonlinearity") {
    SUBCASE("coupled oscillators never antibunch") {
        for (double x : {-2.0, -1.0, -0.5, 0.3, 1.0, 2.4}) {
            CAPTURE(x);
            CHECK(g2_zero(driven(ModelKind::oscillators, 0.05, x)).value >= 1.0 - 1e-9);
        }
    }
    SUBCASE("JC and multilevel antibunch at the first rung") {
        for (double x : {-1.0, 1.0}) {
            CHECK(g2_zero(driven(ModelKind::jc, 0.05, x)).value < 1.0);
            CHECK(g2_zero(driven(ModelKind::multilevel, 0.05, x)).value < 1.0);
        }
    }
    SUBCASE("one sublevel reproduces JC") {
        for (double x : {-1.7, -1.0, 0.4, 1.0}) {
            const double m = g2_zero(driven(ModelKind::multilevel, 0.05, x, 1)).value;
            const double j = g2_zero(driven(ModelKind::jc, 0.05, x)).value;
            CHECK(std::abs(m - j) < 1e-10);
        }
    }
    SUBCASE("truncation convergence") {
        G2Options opts;
        opts.check_truncation = true;
        const G2Result r = g2_zero(driven(ModelKind::multilevel, 0.05, 1.0), opts);
        REQUIRE(r.truncation_change);
        CHECK(*r.truncation_change < 1e-6);
    }
    SUBCASE("preconditions") {
        ModelSpec s = driven(ModelKind::jc, 1.0, 0.0);
        s.drive_amp = 0.0;
        CHECK_THROWS_AS(g2_zero(s), ConfigError);
    }
}

TEST_CASE("peak finder") {
    const auto x = frequency_grid(0.0, 3.0, 121);
    std::vector<double> y;
    for (double w : x) y.push_back(1.0 / ((w - 0.512) * (w - 0.512) + 0.01) + 0.3 / ((w + 1.7) * (w + 1.7) + 0.04));
    const auto peaks = find_peaks(x, y);
    REQUIRE(peaks.size() == 2);
    CHECK(std::abs(peaks[0].omega + 1.7) < 0.05 / 2);
    CHECK(std::abs(peaks[1].omega - 0.512) < 0.05 / 2);
    CHECK(find_peaks(x, std::vector<double>(x.size(), 1.0)).empty());
}
