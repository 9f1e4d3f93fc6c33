#include "dicke/hilbert.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace dicke {

SpaceLayout::SpaceLayout(std::vector<Factor> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::invalid_argument("SpaceLayout: at least one factor required");
    std::set<std::string> seen;
    for (const auto& f : factors_) {
        if (f.dim < 1) throw std::invalid_argument("SpaceLayout: factor '" + f.label + "' has dim < 1");
        if (!seen.insert(f.label).second)
            throw std::invalid_argument("SpaceLayout: duplicate factor label '" + f.label + "'");
    }
}

SpaceLayout SpaceLayout::single(std::string label, Index dim) {
    return SpaceLayout({Factor{std::move(label), dim}});
}

const Factor& SpaceLayout::factor(std::size_t slot) const {
    if (slot >= factors_.size()) throw std::out_of_range("SpaceLayout: slot out of range");
    return factors_[slot];
}

Index SpaceLayout::total_dim() const {
    Index d = 1;
    for (const auto& f : factors_) d *= f.dim;
    return d;
}

std::size_t SpaceLayout::slot_of(std::string_view label) const {
    for (std::size_t i = 0; i < factors_.size(); ++i)
        if (factors_[i].label == label) return i;
    throw std::out_of_range("SpaceLayout: no factor labelled '" + std::string(label) + "'");
}

Operator::Operator(SpaceLayout layout, Matrix matrix) : layout_(std::move(layout)), matrix_(std::move(matrix)) {
    if (matrix_.rows() != matrix_.cols()) throw std::invalid_argument("Operator: matrix must be square");
    if (matrix_.rows() != layout_.total_dim())
        throw std::invalid_argument("Operator: matrix side " + std::to_string(matrix_.rows()) +
                                    " does not match layout dimension " + std::to_string(layout_.total_dim()));
}

Operator Operator::identity(const SpaceLayout& layout) {
    return Operator(layout, Matrix::Identity(layout.total_dim(), layout.total_dim()));
}

Operator Operator::zero(const SpaceLayout& layout) {
    return Operator(layout, Matrix::Zero(layout.total_dim(), layout.total_dim()));
}

Operator Operator::dagger() const { return Operator(layout_, matrix_.adjoint()); }

namespace {
void require_same_layout(const Operator& a, const Operator& b, const char* what) {
    if (!(a.layout() == b.layout())) throw std::invalid_argument(std::string(what) + ": layout mismatch");
}
}  // namespace

Operator& Operator::operator+=(const Operator& rhs) {
    require_same_layout(*this, rhs, "operator+");
    matrix_ += rhs.matrix_;
    return *this;
}

Operator& Operator::operator-=(const Operator& rhs) {
    require_same_layout(*this, rhs, "operator-");
    matrix_ -= rhs.matrix_;
    return *this;
}

Operator& Operator::operator*=(cplx s) {
    matrix_ *= s;
    return *this;
}

Operator operator+(Operator lhs, const Operator& rhs) { return lhs += rhs; }
Operator operator-(Operator lhs, const Operator& rhs) { return lhs -= rhs; }

Operator operator*(const Operator& lhs, const Operator& rhs) {
    require_same_layout(lhs, rhs, "operator*");
    return Operator(lhs.layout(), lhs.matrix() * rhs.matrix());
}

Operator operator*(cplx s, Operator op) { return op *= s; }
Operator operator*(double s, Operator op) { return op *= cplx(s, 0.0); }

Operator dagger(const Operator& op) { return op.dagger(); }

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

cplx expectation(const Operator& op, const Operator& rho) {
    require_same_layout(op, rho, "expectation");
    // Tr(AB) = sum_ij A_ij B_ji without forming the product.
    return (op.matrix().transpose().cwiseProduct(rho.matrix())).sum();
}

double hermiticity_error(const Operator& op) {
    return (op.matrix() - op.matrix().adjoint()).cwiseAbs().maxCoeff();
}

Operator fock_annihilation(Index cutoff, std::string label) {
    if (cutoff < 1) throw std::invalid_argument("fock_annihilation: cutoff must be >= 1");
    Matrix a = Matrix::Zero(cutoff + 1, cutoff + 1);
    for (Index n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return Operator(SpaceLayout::single(std::move(label), cutoff + 1), std::move(a));
}

Operator transition(const Factor& factor, Index i, Index j) {
    if (i < 0 || j < 0 || i >= factor.dim || j >= factor.dim)
        throw std::out_of_range("transition: level index out of range for factor '" + factor.label + "'");
    Matrix m = Matrix::Zero(factor.dim, factor.dim);
    m(i, j) = 1.0;
    return Operator(SpaceLayout({factor}), std::move(m));
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Operator lift(const Operator& op, const SpaceLayout& layout, std::size_t slot) {
    const Factor& target = layout.factor(slot);
    if (op.layout().size() != 1 || op.dim() != target.dim)
        throw std::invalid_argument("lift: operator dimension " + std::to_string(op.dim()) +
                                    " does not match factor '" + target.label + "' of dim " +
                                    std::to_string(target.dim));
    Matrix out = Matrix::Identity(1, 1);
    for (std::size_t s = 0; s < layout.size(); ++s) {
        if (s == slot)
            out = kron(out, op.matrix());
        else
            out = kron(out, Matrix::Identity(layout.dim(s), layout.dim(s)));
    }
    return Operator(layout, std::move(out));
}

}  // namespace dicke
