#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "dicke/errors.hpp"
#include "dicke/liouvillian.hpp"
#include "dicke/observables.hpp"

using namespace dicke;

namespace {

const cplx I(0.0, 1.0);

SpaceLayout cavity(Index cutoff) { return SpaceLayout::single("cavity", cutoff + 1); }

Matrix random_hermitian(Index n, std::mt19937& rng) {
    std::normal_distribution<double> d;
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
    return 0.5 * (m + m.adjoint());
}

Matrix random_state(Index n, std::mt19937& rng) {
    const Matrix h = random_hermitian(n, rng);
    Matrix rho = h * h.adjoint();
    return rho / rho.trace();
}

ModelSpec busy_spec() {
    ModelSpec s;
    s.kind = ModelKind::multilevel;
    s.n_levels = 2;
    s.omega0 = 0.4;
    s.epsilon = 0.3;
    s.g_eff = 1.0;
    s.kappa = 0.8;
    s.gamma = 0.3;
    s.gamma_d = 0.5;
    s.lambda_pump = 0.6;
    s.n_cut = 3;
    return s;
}

Superoperator model_generator(const ModelSpec& s) { return assemble(steady_state_hamiltonian(s), build_jumps(s)); }

}  // namespace

TEST_CASE("column-stacking vectorization") {
    std::mt19937 rng(3);
    const Matrix a = random_hermitian(3, rng), b = Matrix::Random(3, 3), rho = random_state(3, rng);
    const Vector lhs = vec(a * rho * b);
    const Vector rhs = kron(b.transpose(), a) * vec(rho);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(unvec(vec(rho), 3) == rho);
}

TEST_CASE("single-photon decay rates") {
    const Operator a = fock_annihilation(2);
    const Superoperator l = assemble(Operator::zero(cavity(2)), {{"loss", std::sqrt(0.7) * a}});
    Matrix one = Matrix::Zero(3, 3);
    one(1, 1) = 1.0;
    const Matrix dot = l.apply(Operator(cavity(2), one)).matrix();
    CHECK(std::abs(dot(0, 0) - 0.7) < 1e-15);
    CHECK(std::abs(dot(1, 1) + 0.7) < 1e-15);
}

TEST_CASE("trace preservation on random Hermitian states") {
    const ModelSpec s = busy_spec();
    const Superoperator l = model_generator(s);
    std::mt19937 rng(42);
    const Index d = l.hilbert_dim();
    for (int trial = 0; trial < 100; ++trial) {
        const Operator rho(l.layout(), random_hermitian(d, rng));
        CHECK(std::abs(l.apply(rho).trace()) < 1e-10);
    }
}

TEST_CASE("Hamiltonian part is the commutator") {
    ModelSpec s = busy_spec();
    const Operator h = build_hamiltonian(s);
    const Superoperator l = assemble(h, {});
    std::mt19937 rng(5);
    const Operator rho(l.layout(), random_state(l.hilbert_dim(), rng));
    const Matrix expected = -I * commutator(h, rho).matrix();
    CHECK((l.apply(rho).matrix() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("steady states") {
    SUBCASE("lossy empty cavity relaxes to vacuum") {
        const Operator a = fock_annihilation(4);
        const DensityMatrix rho = steady_state(assemble(0.3 * (a.dagger() * a), {{"loss", a}}));
        Matrix vacuum = Matrix::Zero(5, 5);
        vacuum(0, 0) = 1.0;
        CHECK((rho.matrix() - vacuum).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("driven damped cavity amplitude") {
        // Heisenberg-Langevin: d<a>/dt = -(i delta + kappa/2)<a> - i Omega = 0
        const double kappa = 1.0, omega = 0.05;
        for (double detuning : {0.0, 0.4, -1.3}) {
            const Operator a = fock_annihilation(8);
            const Operator h = detuning * (a.dagger() * a) + omega * (a + a.dagger());
            const DensityMatrix rho = steady_state(assemble(h, {{"loss", std::sqrt(kappa) * a}}));
            const cplx expected = -I * omega / (kappa / 2 + I * detuning);
            CHECK(std::abs(expectation(a, rho.op()) - expected) < 1e-10);
        }
    }
    SUBCASE("dark-state trapping under symmetric pump") {
        ModelSpec s;
        s.kind = ModelKind::multilevel;
        s.n_levels = 3;
        s.kappa = 1.0;
        s.lambda_pump = 0.01;
        s.n_cut = 4;
        CHECK(p_dark(steady_state(model_generator(s)), s) > 0.8);
    }
    SUBCASE("invariants of the solved state") {
        const ModelSpec s = busy_spec();
        const DensityMatrix rho = steady_state(model_generator(s));
        CHECK(hermiticity_error(rho.op()) < 1e-10);
        CHECK(std::abs(rho.op().trace() - 1.0) < 1e-10);
        CHECK(rho.min_eigenvalue() >= -1e-8);
        CHECK(std::abs(expectation(cavity_annihilation(s), rho.op())) < 1e-10);
        CHECK(model_generator(s).apply(rho.op()).matrix().cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("no dissipation has no unique steady state") {
        const Operator a = fock_annihilation(3);
        CHECK_THROWS_AS(steady_state(assemble(a.dagger() * a, {})), SolverError);
        ModelSpec s = busy_spec();
        s.kappa = 0.0;
        s.gamma = 0.0;
        s.gamma_d = 0.0;
        s.lambda_pump = 0.0;
        CHECK_THROWS_AS(steady_state(model_generator(s)), SolverError);
    }
}

TEST_CASE("density matrix invariants are enforced") {
    const SpaceLayout l = cavity(1);
    Matrix m(2, 2);
    m << 0.5, 0.3, 0.0, 0.5;
    CHECK_THROWS_AS(DensityMatrix(Operator(l, m)), ConvergenceError);
    m << 0.6, 0.0, 0.0, 0.6;
    CHECK_THROWS_AS(DensityMatrix(Operator(l, m)), ConvergenceError);
    m << 1.2, 0.0, 0.0, -0.2;
    CHECK_THROWS_AS(DensityMatrix(Operator(l, m)), ConvergenceError);
}

TEST_CASE("resolvent solves") {
    SUBCASE("zero generator is a scalar shift") {
        const SpaceLayout l = cavity(1);
        const Superoperator zero(l, SparseMatrix(4, 4));
        const Vector v = Vector::Random(4);
        for (double w : {0.5, -2.0}) CHECK((resolvent_solve(zero, w, v) - v * (I / w)).norm() < 1e-14);
        CHECK_THROWS_AS(resolvent_solve(zero, 0.0, v), SolverError);
        try {
            resolvent_solve(zero, 0.0, v);
        } catch (const SolverError& e) {
            CHECK(std::string(e.what()).find("omega = 0") != std::string::npos);
        }
    }
    SUBCASE("linearity and Hessenberg agreement") {
        const Superoperator l = model_generator(busy_spec());
        const Vector v = Vector::Random(l.dim());
        const cplx alpha(0.3, -1.1);
        const Vector x = resolvent_solve(l, 0.7, v);
        CHECK((resolvent_solve(l, 0.7, alpha * v) - alpha * x).norm() < 1e-10 * x.norm());
        const ShiftedResolvent h(l);
        CHECK((h.solve(0.7, v) - x).norm() < 1e-10 * x.norm());
        const Vector r = l.matrix() * x - cplx(0.0, 0.7) * x - v;
        CHECK(r.cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("empty cavity emission is a Lorentzian") {
        // C(tau) = Tr[a^dagger e^{L tau}(a |1><1|)] = e^{(i w0 - kappa/2) tau}
        const double w0 = 0.6, kappa = 0.3;
        const Operator a = fock_annihilation(2);
        const Superoperator l = assemble(w0 * (a.dagger() * a), {{"loss", std::sqrt(kappa) * a}});
        Matrix one = Matrix::Zero(3, 3);
        one(1, 1) = 1.0;
        const Vector source = vec(a.matrix() * one), probe = vec(a.matrix());
        for (double w : {0.1, 0.45, 0.6, 0.75, 2.0}) {
            const double s = -2.0 * probe.dot(resolvent_solve(l, w, source)).real();
            const double lorentz = kappa / ((w - w0) * (w - w0) + kappa * kappa / 4);
            CHECK(std::abs(s - lorentz) < 1e-10 * lorentz);
        }
    }
}

TEST_CASE("time evolution") {
    const Operator a = fock_annihilation(2);
    const Superoperator l = assemble(0.5 * (a.dagger() * a), {{"loss", a}});
    Matrix one = Matrix::Zero(3, 3);
    one(1, 1) = 1.0;
    const Operator rho0(cavity(2), one);
    CHECK((evolve(l, rho0, 0.0).matrix() - one).norm() == 0.0);

    double worst_trace = 0.0;
    const DensityMatrix late = evolve(l, rho0, 20.0, [&](double, const Operator& rho) {
        worst_trace = std::max(worst_trace, std::abs(rho.trace() - 1.0));
    });
    CHECK(std::abs(late.matrix()(0, 0) - 1.0) < 1e-6);
    CHECK(worst_trace < 1e-8);
    CHECK_THROWS(evolve(l, rho0, -1.0));
}

TEST_CASE("steady state is the long-time limit") {
    std::vector<std::pair<Superoperator, SpaceLayout>> cases;
    {
        ModelSpec s = busy_spec();
        s.n_cut = 2;
        cases.emplace_back(model_generator(s), model_layout(s));
    }
    {
        ModelSpec s;
        s.kind = ModelKind::jc;
        s.kappa = 1.0;
        s.gamma = 0.5;
        s.drive_amp = 0.3;
        s.omega_drive = 0.2;
        s.n_cut = 4;
        cases.emplace_back(model_generator(s), model_layout(s));
    }
    {
        ModelSpec s;
        s.kind = ModelKind::tc;
        s.n_levels = 2;
        s.kappa = 1.2;
        s.gamma_d = 0.4;
        s.lambda_pump = 0.5;
        s.n_cut = 3;
        cases.emplace_back(model_generator(s), model_layout(s));
    }
    for (const auto& [l, layout] : cases) {
        const Index d = layout.total_dim();
        Matrix start = Matrix::Zero(d, d);
        start(0, 0) = 1.0;
        const DensityMatrix late = evolve(l, Operator(layout, start), 60.0);
        const DensityMatrix ss = steady_state(l);
        CHECK((late.matrix() - ss.matrix()).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("spectral gap of small generators") {
    ModelSpec s;
    s.kind = ModelKind::jc;
    s.kappa = 0.7;
    s.gamma = 0.2;
    s.lambda_pump = 0.1;
    s.n_cut = 1;  // Hilbert dim 4, Liouville dim 16
    const Superoperator l = model_generator(s);
    for (const Superoperator& gen : {l, assemble(build_hamiltonian(s), {{"loss", std::sqrt(0.7) * cavity_annihilation(s)},
                                                                         {"decay", build_jumps(s)[1].op}})}) {
        const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Matrix>(gen.dense()).eigenvalues();
        int zeros = 0;
        for (const cplx& z : ev) {
            if (std::abs(z) < 1e-10) ++zeros;
            else CHECK(z.real() < 0.0);
        }
        CHECK(zeros == 1);
    }
}
