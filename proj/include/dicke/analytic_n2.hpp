// analytic_n2.hpp: closed-form results for two degenerate-ish sublevels
//
// For N = 2 with equal couplings the Hamiltonian splits into 3x3 blocks of fixed
// excitation number n, written in the basis {|G,n>, |B,n-1>, |D,n-1>}. At zero
// mean detuning the blocks diagonalize in closed form; these functions provide
// that eigensystem, perturbative decay and dephasing rates, and annihilation
// operator matrix elements between the dressed states.

#pragma once

#include <optional>

#include <Eigen/Dense>

#include "dicke/hilbert.hpp"
#include "dicke/models.hpp"

namespace dicke::n2 {

Eigen::Matrix3d block_matrix(int n, double omega0, double g_eff, double delta, double epsilon);

struct BlockEigensystem {
    int n{1};
    double e_plus{0.0};
    double e_minus{0.0};
    double e_dark{0.0};
    Eigen::Vector3d v_plus;
    Eigen::Vector3d v_minus;
    Eigen::Vector3d v_dark;
};

// Closed forms at delta = 0; any other delta is rejected.
BlockEigensystem resonant_eigensystem(int n, double omega0, double g_eff, double epsilon, double delta = 0.0);

// Quasi-dark energy relative to n*omega0 from second-order perturbation theory.
double perturbative_dark_energy(int n, double delta, double g_eff, double epsilon);

struct RatePair {
    double dark{0.0};
    double polariton{0.0};  // shared by the + and - branches
};

// Photon-loss rates kappa <E|a^dagger a|E>, expanded to second order in epsilon.
RatePair loss_rates(int n, double kappa, double g_eff, double epsilon);

// Dephasing broadenings gamma_d sum_k |<e_k|E>|^2, expanded to second order in epsilon.
RatePair dephasing_broadenings(int n, double gamma_d, double g_eff, double epsilon);

struct Linewidths {
    int n{1};
    double plus{0.0};
    double minus{0.0};
    double dark{0.0};
    bool ambiguous{false};  // labels could not be assigned one-to-one; widths are NaN
};

// -2 Im of the eigenvalues of H - i kappa/2 a^dagger a - i gamma_d/2 sum_k |e_k><e_k|
// restricted to excitation number n, labelled by overlap with the epsilon = 0 states.
// Requires a multilevel spec with N = 2, delta = 0 and n_cut >= n.
Linewidths nonhermitian_linewidths(const ModelSpec& spec, int n);

// |<E_f|a|E_i>|^2 for transitions involving quasi-dark states. Entries that do
// not exist for the given n are empty.
struct JumpElements {
    int n{1};
    std::optional<double> dark_to_ground;     // E_{1,D} -> |G,0>, n = 1 only
    std::optional<double> dark_to_dark;       // E_{n,D} -> E_{n-1,D}
    std::optional<double> dark_to_polariton;  // E_{n,D} -> E_{n-1,+-}
    std::optional<double> polariton_to_dark;  // E_{n,+-} -> E_{n-1,D}
};
JumpElements jump_matrix_elements(int n, double g_eff, double epsilon);

// Isometry (model dim x (N+1)) whose columns are |G,n>, |B,n-1>, |D_1,n-1>, ...
// for a multilevel spec; requires 1 <= n <= n_cut.
Matrix excitation_block_basis(const ModelSpec& spec, int n);

// Full numerical Hamiltonian restricted to excitation number n in that basis.
Eigen::MatrixXd numeric_block(const ModelSpec& spec, int n);

}  // namespace dicke::n2
