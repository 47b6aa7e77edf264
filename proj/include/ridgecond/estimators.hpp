#pragma once

// Ridge-type covariance estimators and their precision counterparts:
//
//   ArchI : (1 - l) S + l T,                               l in (0, 1]
//   ArchII: S + l I,                                       l in (0, inf)
//   Alt   : [l I + (S - l T)^2 / 4]^{1/2} + (S - l T) / 2, l in (0, inf)
//
// Alt is a spectral function of M = S - l T for any symmetric T, so it is
// evaluated from a single eigendecomposition of M.

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "ridgecond/spectra.hpp"

namespace ridgecond {

enum class EstimatorKind { ArchI, ArchII, Alt };

inline const char* to_string(EstimatorKind k) noexcept
{
    switch (k) {
    case EstimatorKind::ArchI: return "arch1";
    case EstimatorKind::ArchII: return "arch2";
    case EstimatorKind::Alt: return "alt";
    }
    return "?";
}

/// Shrinkage target description. The matrix itself is produced by
/// `target_matrix`, since the data-driven kinds depend on the input.
class TargetSpec {
public:
    enum class Kind { Null, ScalarUnit, DiagAverageEV, DiagReciprocalVariance, Custom };

    static TargetSpec null() { return TargetSpec(Kind::Null); }
    static TargetSpec scalar(double phi)
    {
        if (!(phi > 0.0) || !std::isfinite(phi)) {
            throw Error(ErrorKind::InvalidInput, "scalar target requires phi > 0");
        }
        TargetSpec t(Kind::ScalarUnit);
        t.phi_ = phi;
        return t;
    }
    static TargetSpec average_eigenvalue() { return TargetSpec(Kind::DiagAverageEV); }
    static TargetSpec reciprocal_variance() { return TargetSpec(Kind::DiagReciprocalVariance); }
    static TargetSpec custom(SymMatrix m)
    {
        TargetSpec t(Kind::Custom);
        t.custom_ = std::move(m);
        return t;
    }

    Kind kind() const noexcept { return kind_; }
    double phi() const noexcept { return phi_; }
    const std::optional<SymMatrix>& custom_matrix() const noexcept { return custom_; }

    /// Whether the built target is always a non-negative multiple of I.
    bool is_scalar() const noexcept
    {
        return kind_ == Kind::Null || kind_ == Kind::ScalarUnit || kind_ == Kind::DiagAverageEV;
    }

    std::string describe() const
    {
        switch (kind_) {
        case Kind::Null: return "null";
        case Kind::ScalarUnit: return "scalar";
        case Kind::DiagAverageEV: return "dupv";
        case Kind::DiagReciprocalVariance: return "depv";
        case Kind::Custom: return "custom";
        }
        return "?";
    }

private:
    explicit TargetSpec(Kind k) : kind_(k) {}

    Kind kind_;
    double phi_ = 0.0;
    std::optional<SymMatrix> custom_;
};

inline bool is_positive_definite(const SymMatrix& a)
{
    return eigenvalues(a)[a.dim() - 1] > 0.0;
}

/// Builds T for the given input matrix. With `require_pd`, a Custom target
/// that is not positive definite is rejected.
inline SymMatrix target_matrix(const TargetSpec& spec, const SymMatrix& s, bool require_pd = false)
{
    const Index p = s.dim();
    switch (spec.kind()) {
    case TargetSpec::Kind::Null:
        return SymMatrix::zero(p);
    case TargetSpec::Kind::ScalarUnit:
        return spec.phi() * SymMatrix::identity(p);
    case TargetSpec::Kind::DiagAverageEV: {
        // trace == sum of eigenvalues
        const double trace = s.matrix().trace();
        if (!(trace > 0.0)) {
            throw Error(ErrorKind::SingularTarget, "average eigenvalue of input is not positive");
        }
        return (static_cast<double>(p) / trace) * SymMatrix::identity(p);
    }
    case TargetSpec::Kind::DiagReciprocalVariance: {
        Vector d(p);
        for (Index j = 0; j < p; ++j) {
            if (s(j, j) == 0.0) {
                throw Error(ErrorKind::SingularTarget,
                            "zero diagonal entry at index " + std::to_string(j));
            }
            d[j] = 1.0 / s(j, j);
        }
        return SymMatrix::diagonal(d);
    }
    case TargetSpec::Kind::Custom: {
        const SymMatrix& t = *spec.custom_matrix();
        if (t.dim() != p) {
            throw Error(ErrorKind::InvalidInput, "custom target dimension " + std::to_string(t.dim()) +
                                                     " does not match input dimension " +
                                                     std::to_string(p));
        }
        if (require_pd && !is_positive_definite(t)) {
            throw Error(ErrorKind::TargetNotPD, "custom target is not positive definite");
        }
        return t;
    }
    }
    throw Error(ErrorKind::InvalidInput, "unknown target kind");
}

/// Returns phi when t is exactly phi * I, otherwise nothing.
inline std::optional<double> scalar_target_value(const SymMatrix& t)
{
    const double phi = t(0, 0);
    for (Index j = 0; j < t.dim(); ++j) {
        for (Index k = 0; k < t.dim(); ++k) {
            if (t(j, k) != (j == k ? phi : 0.0)) return std::nullopt;
        }
    }
    return phi;
}

inline void check_penalty(EstimatorKind kind, double lambda)
{
    if (!std::isfinite(lambda) || !(lambda > 0.0)) {
        throw Error(ErrorKind::PenaltyOutOfDomain,
                    std::string(to_string(kind)) + " requires lambda > 0, got " + std::to_string(lambda));
    }
    if (kind == EstimatorKind::ArchI && lambda > 1.0) {
        throw Error(ErrorKind::PenaltyOutOfDomain,
                    "arch1 requires lambda in (0, 1], got " + std::to_string(lambda));
    }
}

/// Rejects (estimator, target) pairs outside the estimator's contract:
/// ArchI needs a positive definite target, the null target is Alt-only.
inline void check_target(EstimatorKind kind, const TargetSpec& spec, const SymMatrix& t)
{
    if (kind == EstimatorKind::ArchII) return;
    if (spec.kind() == TargetSpec::Kind::Null && kind != EstimatorKind::Alt) {
        throw Error(ErrorKind::InvalidInput, "the null target is only permitted with the alt estimator");
    }
    if (kind == EstimatorKind::ArchI && !is_positive_definite(t)) {
        throw Error(ErrorKind::TargetNotPD, "arch1 requires a positive definite target");
    }
}

inline void check_dims(const SymMatrix& s, const SymMatrix& t)
{
    if (s.dim() != t.dim()) {
        throw Error(ErrorKind::InvalidInput, "input and target dimensions differ");
    }
}

inline SymMatrix ridge_arch1(const SymMatrix& s, const SymMatrix& t, double lambda)
{
    check_penalty(EstimatorKind::ArchI, lambda);
    check_dims(s, t);
    if (lambda == 1.0) return t;
    // s + l (t - s) keeps t == s a fixed point in floating point.
    return SymMatrix::symmetrized(s.matrix() + lambda * (t.matrix() - s.matrix()));
}

inline SymMatrix ridge_arch2(const SymMatrix& s, double lambda)
{
    check_penalty(EstimatorKind::ArchII, lambda);
    Matrix out = s.matrix();
    out.diagonal().array() += lambda;
    return SymMatrix::symmetrized(out);
}

/// sqrt(lambda + m^2/4) + m/2, written to avoid cancellation for m < 0.
inline double alt_spectral_map(double m, double lambda)
{
    const double root = std::hypot(std::sqrt(lambda), 0.5 * m);
    return m >= 0.0 ? root + 0.5 * m : lambda / (root - 0.5 * m);
}

/// Eigenvalue map of the Alt estimator under the target phi * I.
inline double ridge_alt_eigmap(double d, double phi, double lambda)
{
    if (!(lambda > 0.0)) {
        throw Error(ErrorKind::PenaltyOutOfDomain, "alt requires lambda > 0");
    }
    if (!(phi >= 0.0)) {
        throw Error(ErrorKind::InvalidInput, "alt eigenvalue map requires phi >= 0");
    }
    return alt_spectral_map(d - lambda * phi, lambda);
}

inline SymMatrix ridge_alt(const SymMatrix& s, const SymMatrix& t, double lambda)
{
    check_penalty(EstimatorKind::Alt, lambda);
    check_dims(s, t);
    const SpectralDecomp inner = decompose(SymMatrix::symmetrized(s.matrix() - lambda * t.matrix()));
    try {
        return reconstruct(inner, [lambda](double m) { return alt_spectral_map(m, lambda); });
    } catch (const Error& e) {
        throw Error(ErrorKind::NumericalFailure, e.what());
    }
}

/// Dispatches to the estimator family. ArchII ignores `t`.
inline SymMatrix ridge_estimate(EstimatorKind kind, const SymMatrix& s, const SymMatrix& t, double lambda)
{
    switch (kind) {
    case EstimatorKind::ArchI: return ridge_arch1(s, t, lambda);
    case EstimatorKind::ArchII: return ridge_arch2(s, lambda);
    case EstimatorKind::Alt: return ridge_alt(s, t, lambda);
    }
    throw Error(ErrorKind::InvalidInput, "unknown estimator");
}

/// Eigenvalue map of a rotation-equivariant configuration (target phi * I).
inline double equivariant_eigmap(EstimatorKind kind, double d, double phi, double lambda)
{
    switch (kind) {
    case EstimatorKind::ArchI: return (1.0 - lambda) * d + lambda * phi;
    case EstimatorKind::ArchII: return d + lambda;
    case EstimatorKind::Alt: return alt_spectral_map(d - lambda * phi, lambda);
    }
    return d;
}

inline constexpr double kNearSingularRatio = 1e-14;

/// Inverse of a positive definite estimate through its eigendecomposition.
inline SymMatrix precision_of(const SymMatrix& estimate)
{
    const SpectralDecomp d = decompose(estimate);
    const double largest = d.eigenvalues[0];
    const double smallest = d.eigenvalues[d.dim() - 1];
    if (!(largest > 0.0) || smallest <= kNearSingularRatio * largest) {
        throw Error(ErrorKind::NearSingular, "smallest eigenvalue " + std::to_string(smallest) +
                                                 " is too small relative to largest " +
                                                 std::to_string(largest));
    }
    return reconstruct(d, [](double x) { return 1.0 / x; });
}

} // namespace ridgecond
