#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "ridgecond/error.hpp"

namespace ridgecond {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense real symmetric matrix. Symmetry is exact: the lower triangle is
/// always a mirror of the upper one, whatever the construction path.
class SymMatrix {
public:
    /// Validating constructor for caller-supplied data. Rejects non-square,
    /// empty, non-finite, or visibly asymmetric input; small asymmetries
    /// (relative 1e-8) are averaged away.
    explicit SymMatrix(const Matrix& m) : a_(m)
    {
        if (m.rows() != m.cols() || m.rows() < 1) {
            throw Error(ErrorKind::InvalidInput,
                        "symmetric matrix must be square with dim >= 1, got " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        }
        if (!m.allFinite()) {
            throw Error(ErrorKind::InvalidInput, "matrix has non-finite entries");
        }
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
            throw Error(ErrorKind::InvalidInput, "matrix is not symmetric");
        }
        mirror_upper();
    }

    /// Builds from a matrix that is symmetric up to rounding (e.g. V D V^T)
    /// by averaging with its transpose. No validation.
    static SymMatrix symmetrized(const Matrix& m)
    {
        SymMatrix s;
        s.a_ = 0.5 * (m + m.transpose());
        return s;
    }

    static SymMatrix identity(Index p) { return symmetrized(Matrix::Identity(p, p)); }
    static SymMatrix zero(Index p) { return symmetrized(Matrix::Zero(p, p)); }
    static SymMatrix diagonal(const Vector& d)
    {
        return SymMatrix(Matrix(d.asDiagonal()));
    }

    Index dim() const noexcept { return a_.rows(); }
    double operator()(Index j, Index k) const { return a_(j, k); }
    const Matrix& matrix() const noexcept { return a_; }

    double max_abs() const { return a_.cwiseAbs().maxCoeff(); }

    friend SymMatrix operator+(const SymMatrix& x, const SymMatrix& y)
    {
        return symmetrized(x.a_ + y.a_);
    }
    friend SymMatrix operator-(const SymMatrix& x, const SymMatrix& y)
    {
        return symmetrized(x.a_ - y.a_);
    }
    friend SymMatrix operator*(double c, const SymMatrix& x) { return symmetrized(c * x.a_); }

private:
    SymMatrix() = default;

    void mirror_upper()
    {
        a_.triangularView<Eigen::StrictlyLower>() = a_.transpose().triangularView<Eigen::StrictlyLower>();
    }

    Matrix a_;
};

} // namespace ridgecond
