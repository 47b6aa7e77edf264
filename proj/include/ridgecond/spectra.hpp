#pragma once

// Symmetric eigendecomposition and spectral matrix functions.
//
// Eigenvalues are always reported in descending order. Each eigenvector is
// normalised so that its largest-magnitude component is non-negative, which
// makes decompositions of non-degenerate matrices reproducible.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <concepts>
#include <string>

#include "ridgecond/sym_matrix.hpp"

namespace ridgecond {

inline constexpr double kPsdClampTolerance = 1e-10;

struct SpectralDecomp {
    Vector eigenvalues;  // d_1 >= ... >= d_p
    Matrix eigenvectors; // column j pairs with eigenvalues[j]

    Index dim() const noexcept { return eigenvalues.size(); }
};

namespace detail {

inline void check_solver(Eigen::ComputationInfo info)
{
    if (info != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "symmetric eigensolver did not converge");
    }
}

inline void fix_signs(Matrix& v)
{
    for (Index j = 0; j < v.cols(); ++j) {
        Index arg = 0;
        v.col(j).cwiseAbs().maxCoeff(&arg);
        if (v(arg, j) < 0.0) v.col(j) = -v.col(j);
    }
}

} // namespace detail

inline SpectralDecomp decompose(const SymMatrix& a)
{
    const Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::ComputeEigenvectors);
    detail::check_solver(solver.info());
    SpectralDecomp out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();
    detail::fix_signs(out.eigenvectors);
    return out;
}

/// Eigenvalues only, descending. Cheaper than `decompose` when the
/// eigenvectors are not needed.
inline Vector eigenvalues(const SymMatrix& a)
{
    const Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::EigenvaluesOnly);
    detail::check_solver(solver.info());
    return solver.eigenvalues().reverse();
}

/// V * diag(f(d)) * V^T.
template <class F>
    requires std::invocable<F&, double>
SymMatrix reconstruct(const SpectralDecomp& d, F&& f)
{
    Vector mapped(d.dim());
    for (Index j = 0; j < d.dim(); ++j) {
        mapped[j] = f(d.eigenvalues[j]);
        if (!std::isfinite(mapped[j])) {
            throw Error(ErrorKind::InvalidInput,
                        "scalar map is not finite at eigenvalue " + std::to_string(d.eigenvalues[j]));
        }
    }
    return SymMatrix::symmetrized(d.eigenvectors * mapped.asDiagonal() * d.eigenvectors.transpose());
}

/// Principal square root of a positive semi-definite matrix. Eigenvalues in
/// [-1e-10, 0) are treated as zero.
inline SymMatrix matrix_sqrt(const SymMatrix& a)
{
    const SpectralDecomp d = decompose(a);
    const double smallest = d.eigenvalues[d.dim() - 1];
    if (smallest < -kPsdClampTolerance) {
        throw Error(ErrorKind::NotPositiveSemiDefinite,
                    "smallest eigenvalue " + std::to_string(smallest) + " is below -1e-10");
    }
    return reconstruct(d, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

} // namespace ridgecond
