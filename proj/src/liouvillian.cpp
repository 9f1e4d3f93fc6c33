#include "dicke/liouvillian.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SparseLU>
#ifdef DICKE_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "dicke/errors.hpp"

namespace dicke {

namespace {

using Triplets = std::vector<Eigen::Triplet<cplx>>;

struct Entry {
    Index row;
    Index col;
    cplx value;
};

std::vector<Entry> nonzeros(const Matrix& m) {
    std::vector<Entry> out;
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != cplx(0.0)) out.push_back({i, j, m(i, j)});
    return out;
}

// Appends scale * (a kron b) to the triplet list.
void add_kron(Triplets& t, const std::vector<Entry>& a, const std::vector<Entry>& b, Index b_dim, cplx scale) {
    for (const auto& x : a)
        for (const auto& y : b)
            t.emplace_back(x.row * b_dim + y.row, x.col * b_dim + y.col, scale * x.value * y.value);
}

std::vector<Entry> identity_entries(Index d) {
    std::vector<Entry> out;
    for (Index i = 0; i < d; ++i) out.push_back({i, i, cplx(1.0)});
    return out;
}

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double l1_norm(const SparseMatrix& m) {
    double best = 0.0;
    for (Index j = 0; j < m.outerSize(); ++j) {
        double s = 0.0;
        for (SparseMatrix::InnerIterator it(m, j); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return best;
}

std::string omega_text(double omega) {
    std::ostringstream os;
    os.precision(17);
    os << omega;
    return os.str();
}

// Dense or sparse factorization of a square system with a condition check and
// one step of iterative refinement.
class LinearSolver {
public:
    LinearSolver(const SparseMatrix& a, const SolveOptions& options, const std::string& what)
        : a_(a), options_(options), what_(what) {
        if (a.rows() <= options.dense_limit) {
            dense_.compute(Matrix(a));
            // PartialPivLU skips exact zero pivots, which rcond() alone does not always reveal.
            const auto pivots = dense_.matrixLU().diagonal().cwiseAbs();
            const double rc = pivots.size() == 0 ? 1.0 : std::min(dense_.rcond(), pivots.minCoeff() / pivots.maxCoeff());
            if (!(rc >= options.min_rcond)) fail("reciprocal condition number " + std::to_string(rc));
            use_dense_ = true;
        } else {
            sparse_.compute(a);
            if (sparse_.info() != Eigen::Success) fail("sparse LU factorization failed");
            check_sparse_condition();
        }
    }

    Vector solve(const Vector& b) const {
        Vector x = raw_solve(b);
        x += raw_solve(b - a_ * x);
        const double res = max_abs(a_ * x - b);
        const double scale = std::max(max_abs(b), 1e-300);
        if (!std::isfinite(res) || res > options_.residual_tol * scale)
            fail("residual " + std::to_string(res / scale) + " exceeds tolerance");
        return x;
    }

private:
    Vector raw_solve(const Vector& b) const {
        if (use_dense_) return dense_.solve(b);
        return sparse_.solve(b);
    }

    // Lower bound on cond_1 from a few solves with fixed pseudo-random right-hand sides.
    void check_sparse_condition() {
        std::mt19937_64 rng(0x5eed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        const double norm_a = l1_norm(a_);
        double worst = 0.0;
        for (int trial = 0; trial < 2; ++trial) {
            Vector b(a_.rows());
            for (Index i = 0; i < b.size(); ++i) b(i) = cplx(dist(rng), dist(rng));
            const Vector x = sparse_.solve(b);
            worst = std::max(worst, norm_a * x.lpNorm<1>() / b.lpNorm<1>());
        }
        if (!std::isfinite(worst) || worst > 1.0 / options_.min_rcond)
            fail("condition estimate " + std::to_string(worst));
    }

    [[noreturn]] void fail(const std::string& detail) const { throw SolverError(what_ + ": " + detail); }

    const SparseMatrix& a_;
    SolveOptions options_;
    std::string what_;
    bool use_dense_{false};
    Eigen::PartialPivLU<Matrix> dense_;
#ifdef DICKE_HAVE_UMFPACK
    Eigen::UmfPackLU<SparseMatrix> sparse_;
#else
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> sparse_;
#endif
};

SparseMatrix shifted(const SparseMatrix& l, double omega) {
    SparseMatrix id(l.rows(), l.cols());
    id.setIdentity();
    return l - cplx(0.0, omega) * id;
}

}  // namespace

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Index d) {
    if (v.size() != d * d) throw std::invalid_argument("unvec: size is not hilbert_dim^2");
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

Superoperator::Superoperator(SpaceLayout layout, SparseMatrix matrix)
    : layout_(std::move(layout)), matrix_(std::move(matrix)) {
    const Index d = layout_.total_dim();
    if (matrix_.rows() != d * d || matrix_.cols() != d * d)
        throw std::invalid_argument("Superoperator: matrix side must equal hilbert_dim^2");
}

Operator Superoperator::apply(const Operator& rho) const {
    if (!(rho.layout() == layout_)) throw std::invalid_argument("Superoperator::apply: layout mismatch");
    return Operator(layout_, unvec(matrix_ * vec(rho.matrix()), hilbert_dim()));
}

Superoperator assemble(const Operator& hamiltonian, const JumpSet& jumps) {
    const SpaceLayout& layout = hamiltonian.layout();
    const Index d = layout.total_dim();
    const auto id = identity_entries(d);
    const cplx minus_i(0.0, -1.0);

    Triplets t;
    // -i (I kron H - H^T kron I)
    const auto h = nonzeros(hamiltonian.matrix());
    const auto ht = nonzeros(hamiltonian.matrix().transpose());
    add_kron(t, id, h, d, minus_i);
    add_kron(t, ht, id, d, -minus_i);

    for (const auto& jump : jumps) {
        if (!(jump.op.layout() == layout))
            throw std::invalid_argument("assemble: jump '" + jump.label + "' layout mismatch");
        const Matrix& l = jump.op.matrix();
        const Matrix ldl = l.adjoint() * l;
        add_kron(t, nonzeros(l.conjugate()), nonzeros(l), d, 1.0);
        add_kron(t, id, nonzeros(ldl), d, -0.5);
        add_kron(t, nonzeros(ldl.transpose()), id, d, -0.5);
    }

    SparseMatrix m(d * d, d * d);
    m.setFromTriplets(t.begin(), t.end());
    m.prune(cplx(0.0), 0.0);
    m.makeCompressed();
    return Superoperator(layout, std::move(m));
}

DensityMatrix::DensityMatrix(const Operator& rho) : rho_(rho) {
    const double asym = hermiticity_error(rho);
    if (!(asym <= kHermiticityTol))
        throw ConvergenceError("density matrix: Hermiticity violated by " + std::to_string(asym));
    rho_ = Operator(rho.layout(), 0.5 * (rho.matrix() + rho.matrix().adjoint()));
    const double tr = rho_.trace().real();
    if (!(std::abs(tr - 1.0) <= kTraceTol))
        throw ConvergenceError("density matrix: trace " + omega_text(tr) + " differs from 1");
    const double lmin = min_eigenvalue();
    if (lmin < -kPositivityTol)
        throw ConvergenceError("density matrix: negative eigenvalue " + std::to_string(lmin));
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho_.matrix(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

DensityMatrix steady_state(const Superoperator& generator, const SolveOptions& options) {
    const Index d = generator.hilbert_dim();
    const Index n = generator.dim();

    Triplets t;
    t.reserve(static_cast<std::size_t>(generator.matrix().nonZeros() + d));
    for (Index j = 0; j < generator.matrix().outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(generator.matrix(), j); it; ++it)
            if (it.row() != 0) t.emplace_back(it.row(), it.col(), it.value());
    for (Index i = 0; i < d; ++i) t.emplace_back(0, i * d + i, cplx(1.0));
    SparseMatrix a(n, n);
    a.setFromTriplets(t.begin(), t.end());
    a.makeCompressed();

    Vector b = Vector::Zero(n);
    b(0) = 1.0;
    const LinearSolver solver(a, options, "steady_state");
    const Vector x = solver.solve(b);

    const double residual = max_abs(generator.matrix() * x);
    if (!(residual < options.residual_tol))
        throw SolverError("steady_state: generator residual " + std::to_string(residual) + " too large");
    return DensityMatrix(Operator(generator.layout(), unvec(x, d)));
}

Vector shifted_solve(const SparseMatrix& a, double omega, const Vector& v, const SolveOptions& options) {
    if (v.size() != a.rows()) throw std::invalid_argument("shifted_solve: vector size mismatch");
    const SparseMatrix system = shifted(a, omega);
    const LinearSolver solver(system, options, "resolvent solve at omega = " + omega_text(omega));
    return solver.solve(v);
}

Vector resolvent_solve(const Superoperator& generator, double omega, const Vector& v, const SolveOptions& options) {
    return shifted_solve(generator.matrix(), omega, v, options);
}

ShiftedResolvent::ShiftedResolvent(const Superoperator& generator) : ShiftedResolvent(generator.dense()) {}

ShiftedResolvent::ShiftedResolvent(const Matrix& generator) {
    if (generator.rows() != generator.cols()) throw std::invalid_argument("ShiftedResolvent: matrix must be square");
    Eigen::HessenbergDecomposition<Matrix> hd(generator);
    q_ = hd.matrixQ();
    hessenberg_ = hd.matrixH();
    scale_ = hessenberg_.cwiseAbs().maxCoeff();
}

Vector ShiftedResolvent::solve_reduced(double omega, Vector rhs) const {
    // Gaussian elimination with adjacent-row partial pivoting keeps the Hessenberg
    // structure, so the factorization of H - i omega costs O(n^2).
    const Index n = hessenberg_.rows();
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> u = hessenberg_;
    u.diagonal().array() -= cplx(0.0, omega);
    const double tiny = 1e-14 * std::max(scale_, std::abs(omega));
    for (Index k = 0; k + 1 < n; ++k) {
        if (std::abs(u(k + 1, k)) > std::abs(u(k, k))) {
            u.row(k).tail(n - k).swap(u.row(k + 1).tail(n - k));
            std::swap(rhs(k), rhs(k + 1));
        }
        if (std::abs(u(k, k)) <= tiny)
            throw SolverError("ShiftedResolvent: singular shift at omega = " + omega_text(omega));
        const cplx m = u(k + 1, k) / u(k, k);
        if (m != cplx(0.0)) {
            u.row(k + 1).tail(n - k) -= m * u.row(k).tail(n - k);
            rhs(k + 1) -= m * rhs(k);
        }
    }
    if (std::abs(u(n - 1, n - 1)) <= tiny)
        throw SolverError("ShiftedResolvent: singular shift at omega = " + omega_text(omega));
    for (Index k = n - 1; k >= 0; --k) {
        cplx s = rhs(k);
        const Index m = n - k - 1;
        if (m > 0) s -= u.row(k).tail(m).transpose().cwiseProduct(rhs.tail(m)).sum();
        rhs(k) = s / u(k, k);
    }
    return rhs;
}

Vector ShiftedResolvent::solve(double omega, const Vector& v) const {
    if (v.size() != dim()) throw std::invalid_argument("ShiftedResolvent::solve: vector size mismatch");
    return q_ * solve_reduced(omega, q_.adjoint() * v);
}

std::vector<cplx> ShiftedResolvent::bilinear(const Vector& w, const Vector& v, std::span<const double> omegas) const {
    if (v.size() != dim() || w.size() != dim()) throw std::invalid_argument("ShiftedResolvent::bilinear: size mismatch");
    const Vector qv = q_.adjoint() * v;
    const Vector qw = q_.adjoint() * w;
    std::vector<cplx> out;
    out.reserve(omegas.size());
    for (double omega : omegas) out.push_back(qw.dot(solve_reduced(omega, qv)));
    return out;
}

DensityMatrix evolve(const Superoperator& generator, const Operator& rho0, double t, const EvolutionObserver& observer) {
    if (t < 0.0) throw std::invalid_argument("evolve: t must be >= 0");
    if (!(rho0.layout() == generator.layout())) throw std::invalid_argument("evolve: layout mismatch");
    const Index d = generator.hilbert_dim();
    const SparseMatrix& l = generator.matrix();
    Vector x = vec(rho0.matrix());
    if (observer) observer(0.0, rho0);
    if (t == 0.0) return DensityMatrix(rho0);

    const double norm = std::max(l1_norm(l), 1e-300);
    const double h_max = 0.01 / norm;
    const auto steps = static_cast<long long>(std::ceil(t / h_max));
    const double h = t / static_cast<double>(steps);
    const double bound = 10.0 * std::max(1.0, x.lpNorm<1>());
    for (long long s = 1; s <= steps; ++s) {
        const Vector k1 = l * x;
        const Vector k2 = l * (x + 0.5 * h * k1);
        const Vector k3 = l * (x + 0.5 * h * k2);
        const Vector k4 = l * (x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double size = x.lpNorm<1>();
        if (!std::isfinite(size) || size > bound)
            throw SolverError("evolve: integration became unstable at t = " + omega_text(s * h));
        if (observer) observer(s * h, Operator(generator.layout(), unvec(x, d)));
    }
    return DensityMatrix(Operator(generator.layout(), unvec(x, d)));
}

}  // namespace dicke
