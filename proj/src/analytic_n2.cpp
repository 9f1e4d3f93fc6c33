#include "dicke/analytic_n2.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace dicke::n2 {

namespace {

void require_n(int n, const char* what) {
    if (n < 1) throw std::invalid_argument(std::string(what) + ": excitation number must be >= 1");
}

}  // namespace

Eigen::Matrix3d block_matrix(int n, double omega0, double g_eff, double delta, double epsilon) {
    require_n(n, "block_matrix");
    const double diag = n * omega0;
    const double c = g_eff * std::sqrt(double(n));
    Eigen::Matrix3d b;
    b << diag, c, 0.0,
         c, diag + delta, -0.5 * epsilon,
         0.0, -0.5 * epsilon, diag + delta;
    return b;
}

BlockEigensystem resonant_eigensystem(int n, double omega0, double g_eff, double epsilon, double delta) {
    require_n(n, "resonant_eigensystem");
    if (delta != 0.0) throw std::invalid_argument("resonant_eigensystem: closed forms need delta = 0");
    const double root_n = std::sqrt(double(n));
    const double s = std::sqrt(4.0 * g_eff * g_eff * n + epsilon * epsilon);
    const double split = g_eff * std::sqrt(n + epsilon * epsilon / (4.0 * g_eff * g_eff));

    BlockEigensystem es;
    es.n = n;
    es.e_plus = n * omega0 + split;
    es.e_minus = n * omega0 - split;
    es.e_dark = n * omega0;
    const double photon = 2.0 * g_eff * root_n / s;
    const double mix = -epsilon / std::sqrt(8.0 * g_eff * g_eff * n + 2.0 * epsilon * epsilon);
    es.v_plus << photon / std::sqrt(2.0), 1.0 / std::sqrt(2.0), mix;
    es.v_minus << photon / std::sqrt(2.0), -1.0 / std::sqrt(2.0), mix;
    es.v_dark << epsilon / s, 0.0, photon;
    return es;
}

double perturbative_dark_energy(int n, double delta, double g_eff, double epsilon) {
    require_n(n, "perturbative_dark_energy");
    return delta * (1.0 - epsilon * epsilon / (4.0 * g_eff * g_eff * n));
}

RatePair loss_rates(int n, double kappa, double g_eff, double epsilon) {
    require_n(n, "loss_rates");
    const double x = epsilon * epsilon / (4.0 * n * g_eff * g_eff);
    return {kappa * (n - 1.0 + x), kappa * (n - 0.5 - 0.5 * x)};
}

RatePair dephasing_broadenings(int n, double gamma_d, double g_eff, double epsilon) {
    require_n(n, "dephasing_broadenings");
    const double x = epsilon * epsilon / (4.0 * n * g_eff * g_eff);
    return {gamma_d * (1.0 - x), 0.5 * gamma_d * (1.0 + x)};
}

JumpElements jump_matrix_elements(int n, double g_eff, double epsilon) {
    require_n(n, "jump_matrix_elements");
    const double g2 = g_eff * g_eff;
    const double e2 = epsilon * epsilon;
    JumpElements out;
    out.n = n;
    if (n == 1) {
        out.dark_to_ground = e2 / (4.0 * g2 + e2);
        return out;
    }
    out.dark_to_dark = n - 4.0 * g2 * n / (4.0 * g2 * n + e2);
    out.dark_to_polariton = 0.0;
    out.polariton_to_dark = 2.0 * g2 * e2 / ((4.0 * g2 * (n - 1) + e2) * (4.0 * g2 * n + e2));
    return out;
}

Matrix excitation_block_basis(const ModelSpec& spec, int n) {
    if (spec.kind != ModelKind::multilevel) throw std::invalid_argument("excitation_block_basis: multilevel model required");
    require_n(n, "excitation_block_basis");
    if (n > spec.n_cut) throw std::invalid_argument("excitation_block_basis: n exceeds the Fock truncation");
    const Index levels = spec.n_levels + 1;
    const Index dim = (spec.n_cut + 1) * levels;
    const Matrix u = radiation_basis(couplings(spec)).matrix();

    Matrix basis = Matrix::Zero(dim, levels);
    basis(n * levels, 0) = 1.0;  // |G, n>
    for (Index c = 1; c < levels; ++c)
        for (Index k = 1; k < levels; ++k) basis((n - 1) * levels + k, c) = u(k, c);
    return basis;
}

Eigen::MatrixXd numeric_block(const ModelSpec& spec, int n) {
    const Matrix basis = excitation_block_basis(spec, n);
    const Matrix block = basis.adjoint() * build_hamiltonian(spec).matrix() * basis;
    return block.real();
}

Linewidths nonhermitian_linewidths(const ModelSpec& spec, int n) {
    if (spec.kind != ModelKind::multilevel || spec.n_levels != 2)
        throw std::invalid_argument("nonhermitian_linewidths: multilevel N = 2 spec required");
    if (spec.delta != 0.0) throw std::invalid_argument("nonhermitian_linewidths: delta must be 0");

    ModelSpec closed = spec;
    closed.lambda_pump = 0.0;
    closed.drive_amp = 0.0;
    const Matrix basis = excitation_block_basis(closed, n);
    const Operator a = cavity_annihilation(closed);
    const RadiationProjectors proj = radiation_projectors(closed);
    const Operator excited = proj.bright + proj.dark.front();
    const cplx i(0.0, 1.0);
    const Matrix h_eff = build_hamiltonian(closed).matrix() - i * (0.5 * spec.kappa) * (a.dagger() * a).matrix() -
                         i * (0.5 * spec.gamma_d) * excited.matrix();
    const Matrix block = basis.adjoint() * h_eff * basis;

    Eigen::ComplexEigenSolver<Matrix> solver(block);
    if (solver.info() != Eigen::Success) throw std::runtime_error("nonhermitian_linewidths: eigensolver failed");

    // epsilon = 0 references in the {G, B, D} block coordinates: -, D, +.
    const double r = 1.0 / std::sqrt(2.0);
    std::array<Eigen::Vector3cd, 3> refs;
    refs[0] << r, -r, 0.0;
    refs[1] << 0.0, 0.0, 1.0;
    refs[2] << r, r, 0.0;

    Linewidths out;
    out.n = n;
    std::array<int, 3> label{};
    std::array<bool, 3> taken{};
    for (int j = 0; j < 3; ++j) {
        const Eigen::Vector3cd v = solver.eigenvectors().col(j).normalized();
        int best = 0;
        double best_overlap = -1.0;
        for (int k = 0; k < 3; ++k) {
            const double ov = std::norm(refs[k].dot(v));
            if (ov > best_overlap) {
                best_overlap = ov;
                best = k;
            }
        }
        if (taken[best] || best_overlap <= 0.5) out.ambiguous = true;
        taken[best] = true;
        label[j] = best;
    }
    if (out.ambiguous) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        out.plus = out.minus = out.dark = nan;
        return out;
    }
    for (int j = 0; j < 3; ++j) {
        const double width = -2.0 * solver.eigenvalues()(j).imag();
        if (label[j] == 0) out.minus = width;
        if (label[j] == 1) out.dark = width;
        if (label[j] == 2) out.plus = width;
    }
    return out;
}

}  // namespace dicke::n2
