#include "dicke/models.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dicke/errors.hpp"

namespace dicke {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::multilevel: return "multilevel";
        case ModelKind::jc: return "jc";
        case ModelKind::tc: return "tc";
        case ModelKind::oscillators: return "oscillators";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "multilevel") return ModelKind::multilevel;
    if (name == "jc") return ModelKind::jc;
    if (name == "tc") return ModelKind::tc;
    if (name == "oscillators") return ModelKind::oscillators;
    throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

void validate(const ModelSpec& spec) {
    auto fail = [](const std::string& msg) { throw ConfigError("model spec: " + msg); };
    if (spec.n_levels < 1) fail("N must be >= 1");
    if (spec.kind == ModelKind::jc && spec.n_levels != 1) fail("jc model requires N = 1");
    if (!(spec.g_eff > 0.0)) fail("g_eff must be > 0");
    if (spec.epsilon < 0.0) fail("epsilon must be >= 0");
    if (spec.kind != ModelKind::multilevel && spec.epsilon != 0.0) fail("epsilon must be 0 for non-multilevel models");
    if (spec.kappa < 0.0 || spec.gamma_rate() < 0.0 || spec.gamma_d < 0.0 || spec.lambda_pump < 0.0 || spec.drive_amp < 0.0)
        fail("rates and drive amplitudes must be >= 0");
    if (spec.lambda_pump != 0.0 && spec.drive_amp != 0.0) fail("incoherent pump and coherent drive cannot both be nonzero");
    if (spec.n_cut < 1) fail("n_cut must be >= 1");
    if (!spec.couplings.empty()) {
        if (spec.kind != ModelKind::multilevel) fail("per-level couplings apply to the multilevel model only");
        if (static_cast<int>(spec.couplings.size()) != spec.n_levels) fail("couplings override must have N entries");
    }
}

SpaceLayout model_layout(const ModelSpec& spec) {
    Index emitter_dim = 0;
    switch (spec.kind) {
        case ModelKind::multilevel:
        case ModelKind::tc: emitter_dim = spec.n_levels + 1; break;
        case ModelKind::jc: emitter_dim = 2; break;
        case ModelKind::oscillators: emitter_dim = spec.n_cut + 1; break;
    }
    return SpaceLayout({Factor{std::string(kCavityLabel), spec.n_cut + 1}, Factor{std::string(kEmitterLabel), emitter_dim}});
}

std::vector<double> detunings(const ModelSpec& spec) {
    const int n = spec.n_levels;
    if (n == 1) return {spec.delta};
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out[k] = spec.delta - 0.5 * spec.epsilon + k * spec.epsilon / (n - 1);
    return out;
}

std::vector<double> couplings(const ModelSpec& spec) {
    if (!spec.couplings.empty()) return spec.couplings;
    return std::vector<double>(static_cast<std::size_t>(spec.n_levels), spec.g_eff / std::sqrt(double(spec.n_levels)));
}

double g_eff_of(std::span<const double> g) {
    return std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
}

Matrix spin_z(int two_j) {
    Matrix m = Matrix::Zero(two_j + 1, two_j + 1);
    for (int k = 0; k <= two_j; ++k) m(k, k) = k - 0.5 * two_j;
    return m;
}

Matrix spin_raise(int two_j) {
    const double j = 0.5 * two_j;
    Matrix m = Matrix::Zero(two_j + 1, two_j + 1);
    for (int k = 0; k < two_j; ++k) {
        const double mz = k - j;
        m(k + 1, k) = std::sqrt((j - mz) * (j + mz + 1.0));
    }
    return m;
}

namespace {

// Emitter-factor operators lifted to the model layout.
struct EmitterOps {
    SpaceLayout layout;
    Factor emitter;

    explicit EmitterOps(const ModelSpec& spec) : layout(model_layout(spec)), emitter(layout.factor(1)) {}

    Operator lift_matrix(const Matrix& m) const {
        return lift(Operator(SpaceLayout({emitter}), m), layout, 1);
    }
    Operator flip(Index i, Index j) const { return lift(transition(emitter, i, j), layout, 1); }
};

Matrix bosonic_lowering(Index dim) {
    Matrix b = Matrix::Zero(dim, dim);
    for (Index n = 1; n < dim; ++n) b(n - 1, n) = std::sqrt(double(n));
    return b;
}

// Emitter excitation count on the emitter factor.
Matrix emitter_excitations(const ModelSpec& spec, Index dim) {
    Matrix m = Matrix::Zero(dim, dim);
    switch (spec.kind) {
        case ModelKind::multilevel:
        case ModelKind::jc:
            for (Index k = 1; k < dim; ++k) m(k, k) = 1.0;
            break;
        case ModelKind::tc:
        case ModelKind::oscillators:
            for (Index k = 0; k < dim; ++k) m(k, k) = double(k);
            break;
    }
    return m;
}

}  // namespace

Operator cavity_annihilation(const ModelSpec& spec) {
    const SpaceLayout layout = model_layout(spec);
    return lift(fock_annihilation(spec.n_cut), layout, 0);
}

Operator excitation_number(const ModelSpec& spec) {
    const EmitterOps ops(spec);
    const Operator a = cavity_annihilation(spec);
    return a.dagger() * a + ops.lift_matrix(emitter_excitations(spec, ops.emitter.dim));
}

Operator build_hamiltonian(const ModelSpec& spec) {
    validate(spec);
    const EmitterOps ops(spec);
    const Operator a = cavity_annihilation(spec);
    const Operator ad = a.dagger();
    Operator h = spec.omega0 * (ad * a);

    switch (spec.kind) {
        case ModelKind::multilevel: {
            const auto dets = detunings(spec);
            const auto g = couplings(spec);
            for (int k = 0; k < spec.n_levels; ++k) {
                h += (spec.omega0 + dets[k]) * ops.flip(k + 1, k + 1);
                const Operator raise = a * ops.flip(k + 1, 0);  // a |e_k><G|
                h += g[k] * (raise + raise.dagger());
            }
            break;
        }
        case ModelKind::jc: {
            h += (spec.omega0 + spec.delta) * ops.flip(1, 1);
            const Operator raise = a * ops.flip(1, 0);
            h += spec.g_eff * (raise + raise.dagger());
            break;
        }
        case ModelKind::tc: {
            // omega0 J_z / 2 with J_z the sum of Pauli z matrices, i.e. omega0 S_z.
            h += (spec.omega0 + spec.delta) * ops.lift_matrix(spin_z(spec.n_levels));
            const Operator jp = ops.lift_matrix(spin_raise(spec.n_levels));
            const Operator raise = jp * a;
            h += (spec.g_eff / std::sqrt(double(spec.n_levels))) * (raise + raise.dagger());
            break;
        }
        case ModelKind::oscillators: {
            const Operator b = ops.lift_matrix(bosonic_lowering(ops.emitter.dim));
            h += (spec.omega0 + spec.delta) * (b.dagger() * b);
            const Operator hop = ad * b;
            h += spec.g_eff * (hop + hop.dagger());
            break;
        }
    }
    return h;
}

Operator radiation_basis(std::span<const double> g) {
    const Index n = static_cast<Index>(g.size());
    if (n < 1) throw std::invalid_argument("radiation_basis: at least one coupling required");
    const double norm = g_eff_of(g);
    if (!(norm > 0.0)) throw std::invalid_argument("radiation_basis: all couplings are zero");

    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n + 1, n + 1);
    u(0, 0) = 1.0;
    for (Index k = 0; k < n; ++k) u(k + 1, 1) = g[k] / norm;

    Index filled = 2;
    for (Index k = 0; k < n && filled <= n; ++k) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
        v(k + 1) = 1.0;
        // Two passes of modified Gram-Schmidt keep the columns orthonormal to rounding.
        for (int pass = 0; pass < 2; ++pass)
            for (Index c = 1; c < filled; ++c) v -= u.col(c).dot(v) * u.col(c);
        const double len = v.norm();
        if (len < 1e-10) continue;  // linearly dependent on the previous columns
        u.col(filled++) = v / len;
    }
    return Operator(SpaceLayout::single(std::string(kEmitterLabel), n + 1), u.cast<cplx>());
}

RadiationProjectors radiation_projectors(const ModelSpec& spec) {
    if (spec.kind != ModelKind::multilevel) throw std::invalid_argument("radiation_projectors: multilevel model required");
    const EmitterOps ops(spec);
    const auto g = couplings(spec);
    const Matrix u = radiation_basis(g).matrix();
    auto proj = [&](Index c) { return ops.lift_matrix(u.col(c) * u.col(c).adjoint()); };
    RadiationProjectors out{proj(0), proj(1), {}};
    for (Index c = 2; c < u.cols(); ++c) out.dark.push_back(proj(c));
    return out;
}

JumpSet build_jumps(const ModelSpec& spec) {
    validate(spec);
    const EmitterOps ops(spec);
    const Operator a = cavity_annihilation(spec);
    const double gamma = spec.gamma_rate();
    JumpSet jumps;
    jumps.push_back({"cavity_loss", std::sqrt(spec.kappa) * a});

    switch (spec.kind) {
        case ModelKind::multilevel: {
            const int n = spec.n_levels;
            for (int k = 1; k <= n; ++k)
                jumps.push_back({"decay_" + std::to_string(k), std::sqrt(gamma) * ops.flip(0, k)});
            for (int k = 1; k <= n; ++k)
                jumps.push_back({"dephasing_" + std::to_string(k), std::sqrt(spec.gamma_d) * ops.flip(k, k)});
            for (int k = 1; k <= n; ++k)
                jumps.push_back({"pump_" + std::to_string(k), std::sqrt(spec.lambda_pump / n) * ops.flip(k, 0)});
            break;
        }
        case ModelKind::jc:
            jumps.push_back({"decay", std::sqrt(gamma) * ops.flip(0, 1)});
            jumps.push_back({"dephasing", std::sqrt(spec.gamma_d) * ops.flip(1, 1)});
            jumps.push_back({"pump", std::sqrt(spec.lambda_pump) * ops.flip(1, 0)});
            break;
        case ModelKind::tc: {
            const Matrix jp = spin_raise(spec.n_levels);
            jumps.push_back({"decay", std::sqrt(gamma) * ops.lift_matrix(jp.adjoint())});
            jumps.push_back({"dephasing", std::sqrt(spec.gamma_d) * ops.lift_matrix(spin_z(spec.n_levels))});
            jumps.push_back({"pump", std::sqrt(spec.lambda_pump) * ops.lift_matrix(jp)});
            break;
        }
        case ModelKind::oscillators: {
            const Operator b = ops.lift_matrix(bosonic_lowering(ops.emitter.dim));
            jumps.push_back({"decay", std::sqrt(gamma) * b});
            jumps.push_back({"dephasing", std::sqrt(spec.gamma_d) * (b.dagger() * b)});
            jumps.push_back({"pump", std::sqrt(spec.lambda_pump) * b.dagger()});
            break;
        }
    }
    return jumps;
}

RotatingFrameDrive rotating_frame_drive(const ModelSpec& spec) {
    const Operator h = build_hamiltonian(spec);
    const Operator a = cavity_annihilation(spec);
    return {h - spec.omega_drive * excitation_number(spec), spec.drive_amp * (a + a.dagger())};
}

Operator LabFrameDrive::at(double t) const {
    const Operator phased = std::polar(1.0, omega_drive * t) * drive_lowering;
    return hamiltonian + phased + phased.dagger();
}

LabFrameDrive lab_frame_drive(const ModelSpec& spec) {
    return {build_hamiltonian(spec), spec.drive_amp * cavity_annihilation(spec), spec.omega_drive};
}

Operator steady_state_hamiltonian(const ModelSpec& spec) {
    if (spec.drive_amp == 0.0) return build_hamiltonian(spec);
    return rotating_frame_drive(spec).total();
}

}  // namespace dicke
