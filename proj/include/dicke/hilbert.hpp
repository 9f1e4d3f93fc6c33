// hilbert.hpp: composite Hilbert-space layouts and dense operator algebra
//
// Operators are dense complex matrices tagged with the layout they act on.
// Multi-factor layouts use the Kronecker ordering of their factor list, so
// for the cavity-first convention index = n * dim(emitter) + emitter_level.

#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dicke {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr std::string_view kCavityLabel = "cavity";
inline constexpr std::string_view kEmitterLabel = "emitter";

struct Factor {
    std::string label;
    Index dim{1};

    bool operator==(const Factor&) const = default;
};

class SpaceLayout {
public:
    SpaceLayout() = default;
    explicit SpaceLayout(std::vector<Factor> factors);

    static SpaceLayout single(std::string label, Index dim);

    const std::vector<Factor>& factors() const { return factors_; }
    const Factor& factor(std::size_t slot) const;
    std::size_t size() const { return factors_.size(); }
    Index dim(std::size_t slot) const { return factor(slot).dim; }
    Index total_dim() const;
    std::size_t slot_of(std::string_view label) const;

    bool operator==(const SpaceLayout&) const = default;

private:
    std::vector<Factor> factors_;
};

class Operator {
public:
    Operator() = default;
    Operator(SpaceLayout layout, Matrix matrix);

    static Operator identity(const SpaceLayout& layout);
    static Operator zero(const SpaceLayout& layout);

    const SpaceLayout& layout() const { return layout_; }
    const Matrix& matrix() const { return matrix_; }
    Index dim() const { return matrix_.rows(); }

    Operator dagger() const;
    cplx trace() const { return matrix_.trace(); }

    Operator& operator+=(const Operator& rhs);
    Operator& operator-=(const Operator& rhs);
    Operator& operator*=(cplx s);

private:
    SpaceLayout layout_;
    Matrix matrix_;
};

Operator operator+(Operator lhs, const Operator& rhs);
Operator operator-(Operator lhs, const Operator& rhs);
Operator operator*(const Operator& lhs, const Operator& rhs);
Operator operator*(cplx s, Operator op);
Operator operator*(double s, Operator op);

Operator dagger(const Operator& op);
Operator commutator(const Operator& a, const Operator& b);

// Tr(op * rho).
cplx expectation(const Operator& op, const Operator& rho);

// max |A - A^dagger| over all entries.
double hermiticity_error(const Operator& op);

// Truncated bosonic annihilation operator on Fock states |0>..|cutoff>.
Operator fock_annihilation(Index cutoff, std::string label = std::string(kCavityLabel));

// |i><j| on a single factor.
Operator transition(const Factor& factor, Index i, Index j);

// Embed a single-factor operator into `layout` at `slot`, identities elsewhere.
Operator lift(const Operator& op, const SpaceLayout& layout, std::size_t slot);

// Kronecker product of plain matrices, left factor outermost.
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace dicke
