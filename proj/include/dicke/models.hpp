// models.hpp: Hamiltonians, drives and jump operators
//
// Four emitter models share the same truncated cavity mode (factor 0):
//   multilevel   ground |G> plus N excited sublevels |e_k>, coupled with g_eff/sqrt(N) each
//   jc           a single two-level emitter (Jaynes-Cummings)
//   tc           N two-level atoms as one spin-N/2 (Tavis-Cummings)
//   oscillators  a second bosonic mode b truncated like the cavity
// Energies are in units with hbar = 1; g_eff usually sets the scale.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dicke/hilbert.hpp"

namespace dicke {

enum class ModelKind { multilevel, jc, tc, oscillators };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
    ModelKind kind{ModelKind::multilevel};
    int n_levels{1};               // N: sublevels (multilevel) or atoms (tc)
    double omega0{0.0};            // cavity frequency
    double delta{0.0};             // mean emitter detuning
    double epsilon{0.0};           // full detuning spread, multilevel only
    double g_eff{1.0};
    double kappa{0.0};             // cavity loss
    std::optional<double> gamma;   // emitter decay; defaults to 1e-4 g_eff
    double gamma_d{0.0};           // emitter dephasing
    double lambda_pump{0.0};       // total incoherent pump
    double drive_amp{0.0};         // coherent cavity drive Omega
    double omega_drive{0.0};       // drive frequency omega_L
    int n_cut{7};                  // Fock truncation (highest retained photon number)
    std::vector<double> couplings; // optional per-sublevel g_k override (multilevel)

    double gamma_rate() const { return gamma.value_or(1e-4 * g_eff); }
};

// Throws ConfigError on unphysical or inconsistent parameters.
void validate(const ModelSpec& spec);

// Cavity first, emitter second.
SpaceLayout model_layout(const ModelSpec& spec);

// Equally spaced sublevel detunings over [delta - eps/2, delta + eps/2].
std::vector<double> detunings(const ModelSpec& spec);

// Per-sublevel couplings: the override if given, else N copies of g_eff/sqrt(N).
std::vector<double> couplings(const ModelSpec& spec);

double g_eff_of(std::span<const double> couplings);

Operator cavity_annihilation(const ModelSpec& spec);

// a^dagger a plus the model's emitter excitation count.
Operator excitation_number(const ModelSpec& spec);

Operator build_hamiltonian(const ModelSpec& spec);

// Emitter-factor unitary whose columns are |G>, |B>, |D_1>..|D_{N-1}> in the
// bare basis. Dark states come from Gram-Schmidt on |e_1>..|e_N> in index order.
Operator radiation_basis(std::span<const double> couplings);

// Projectors on the full model space built from radiation_basis(couplings(spec)).
struct RadiationProjectors {
    Operator ground;
    Operator bright;
    std::vector<Operator> dark;
};
RadiationProjectors radiation_projectors(const ModelSpec& spec);

struct JumpOperator {
    std::string label;
    Operator op;
};
using JumpSet = std::vector<JumpOperator>;

JumpSet build_jumps(const ModelSpec& spec);

// Coherent drive in the frame rotating at omega_L: H_int = H - omega_L * N_tot,
// V_drive = Omega (a + a^dagger). Their sum is time independent.
struct RotatingFrameDrive {
    Operator h_int;
    Operator v_drive;

    Operator total() const { return h_int + v_drive; }
};
RotatingFrameDrive rotating_frame_drive(const ModelSpec& spec);

// Lab-frame descriptor H + Omega (a e^{i omega_L t} + h.c.); not used by the
// steady-state solvers.
struct LabFrameDrive {
    Operator hamiltonian;
    Operator drive_lowering;  // Omega * a
    double omega_drive{0.0};

    Operator at(double t) const;
};
LabFrameDrive lab_frame_drive(const ModelSpec& spec);

// Hamiltonian used by the steady-state solvers: H when Omega = 0, otherwise the
// rotating-frame H_int + V_drive.
Operator steady_state_hamiltonian(const ModelSpec& spec);

// Spin-j matrices (dim 2j+1) in ascending m order: S_z and S_+.
Matrix spin_z(int two_j);
Matrix spin_raise(int two_j);

}  // namespace dicke
