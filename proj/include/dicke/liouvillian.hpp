// liouvillian.hpp: GKSL generator, steady states and resolvent solves
//
// Density matrices are vectorized by column stacking, vec(A rho B) = (B^T kron A) vec(rho),
// which is the native layout of a column-major Eigen matrix.

#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "dicke/hilbert.hpp"
#include "dicke/models.hpp"

namespace dicke {

using SparseMatrix = Eigen::SparseMatrix<cplx>;

Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Index hilbert_dim);

class Superoperator {
public:
    Superoperator(SpaceLayout layout, SparseMatrix matrix);

    const SpaceLayout& layout() const { return layout_; }
    Index hilbert_dim() const { return layout_.total_dim(); }
    Index dim() const { return matrix_.rows(); }
    const SparseMatrix& matrix() const { return matrix_; }
    Matrix dense() const { return Matrix(matrix_); }

    Operator apply(const Operator& rho) const;

private:
    SpaceLayout layout_;
    SparseMatrix matrix_;
};

// rho_dot = -i[H, rho] + sum_L (L rho L^dagger - 1/2 {L^dagger L, rho}).
Superoperator assemble(const Operator& hamiltonian, const JumpSet& jumps);

// Hermitian, unit-trace, positive semidefinite state. Construction validates
// within the tolerances below and stores the Hermitized matrix.
class DensityMatrix {
public:
    static constexpr double kHermiticityTol = 1e-8;
    static constexpr double kTraceTol = 1e-10;
    static constexpr double kPositivityTol = 1e-8;

    explicit DensityMatrix(const Operator& rho);

    const Operator& op() const { return rho_; }
    const Matrix& matrix() const { return rho_.matrix(); }
    const SpaceLayout& layout() const { return rho_.layout(); }
    double min_eigenvalue() const;

private:
    Operator rho_;
};

struct SolveOptions {
    // Liouville-space dimension above which sparse LU replaces dense LU.
    Index dense_limit{1100};
    // Reciprocal condition numbers below this are rejected as singular.
    double min_rcond{1e-13};
    // Max-norm residual bound, relative to the right-hand side.
    double residual_tol{1e-9};
};

// Solves L rho = 0 with Tr(rho) = 1 by replacing the first row with the trace functional.
DensityMatrix steady_state(const Superoperator& generator, const SolveOptions& options = {});

// Solves (A - i omega) x = v for a plain Liouville-space matrix A.
Vector shifted_solve(const SparseMatrix& a, double omega, const Vector& v, const SolveOptions& options = {});

// Solves (L - i omega) x = v.
Vector resolvent_solve(const Superoperator& generator, double omega, const Vector& v,
                       const SolveOptions& options = {});

// Hessenberg form L = Q H Q^dagger computed once; each shifted solve is then O(dim^2).
class ShiftedResolvent {
public:
    explicit ShiftedResolvent(const Superoperator& generator);
    explicit ShiftedResolvent(const Matrix& generator);

    Index dim() const { return hessenberg_.rows(); }

    // x solving (L - i omega) x = v.
    Vector solve(double omega, const Vector& v) const;

    // w^dagger (L - i omega)^{-1} v for each omega.
    std::vector<cplx> bilinear(const Vector& w, const Vector& v, std::span<const double> omegas) const;

private:
    Vector solve_reduced(double omega, Vector rhs) const;

    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> hessenberg_;
    Matrix q_;
    double scale_{0.0};
};

using EvolutionObserver = std::function<void(double t, const Operator& rho)>;

// Fixed-step RK4 integration of rho_dot = L rho; step <= 0.01 / ||L||_1. Validation only.
DensityMatrix evolve(const Superoperator& generator, const Operator& rho0, double t,
                     const EvolutionObserver& observer = {});

}  // namespace dicke
