#pragma once

// Condition numbers of ridge estimates along a log-equidistant penalty grid,
// plus the interpretational aids (digit loss, finite-difference acceleration)
// and the knee heuristic for a minimal well-conditioned penalty.

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ridgecond/estimators.hpp"

namespace ridgecond {

enum class ConditionNorm { Spectral, One };

class PenaltyGrid {
public:
    PenaltyGrid(double lambda_min, double lambda_max, int steps)
        : lambda_min_(lambda_min), lambda_max_(lambda_max), steps_(steps)
    {
        if (!(lambda_min > 0.0) || !std::isfinite(lambda_max) || !(lambda_min < lambda_max)) {
            throw Error(ErrorKind::InvalidInput, "penalty grid requires 0 < lambda_min < lambda_max");
        }
        if (steps < 3) {
            throw Error(ErrorKind::InvalidInput,
                        "penalty grid requires at least 3 steps, got " + std::to_string(steps));
        }
        const double lo = std::log(lambda_min);
        tau_ = (std::log(lambda_max) - lo) / (steps - 1);
        values_.resize(static_cast<std::size_t>(steps));
        for (int s = 0; s < steps; ++s) values_[s] = std::exp(lo + s * tau_);
        values_.front() = lambda_min;
        values_.back() = lambda_max;
    }

    double lambda_min() const noexcept { return lambda_min_; }
    double lambda_max() const noexcept { return lambda_max_; }
    int steps() const noexcept { return steps_; }
    double tau() const noexcept { return tau_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](std::size_t s) const { return values_[s]; }

private:
    double lambda_min_;
    double lambda_max_;
    int steps_;
    double tau_ = 0.0;
    std::vector<double> values_;
};

inline constexpr int kInfiniteDigitLoss = std::numeric_limits<int>::max();

struct Knee {
    double lambda;
    std::size_t index;
};

struct ConditionPath {
    PenaltyGrid grid;
    std::vector<double> cond;
    ConditionNorm norm = ConditionNorm::Spectral;
    bool fast_path = false;
    // Aids; empty until attach_aids() is called.
    std::vector<int> digits_lost;
    std::vector<std::optional<double>> acceleration; // entry i <-> grid index i + 1
    std::optional<Knee> knee;
};

// ---------------------------------------------------------------------------
// Condition numbers

/// d_1 / d_p; +inf for singular (d_p <= 0) input.
inline double spectral_condition_from_eigenvalues(const Vector& d)
{
    const double largest = d.maxCoeff();
    const double smallest = d.minCoeff();
    if (!(largest > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "largest eigenvalue is not positive");
    }
    if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
    return largest / smallest;
}

inline double spectral_condition(const SymMatrix& a)
{
    return spectral_condition_from_eigenvalues(eigenvalues(a));
}

inline double max_abs_column_sum(const Matrix& a)
{
    return a.cwiseAbs().colwise().sum().maxCoeff();
}

inline double one_norm_condition(const SymMatrix& a, const SymMatrix& a_inv)
{
    return max_abs_column_sum(a.matrix()) * max_abs_column_sum(a_inv.matrix());
}

namespace detail {

inline double one_norm_condition_spectral(const SpectralDecomp& d, const Vector& mapped)
{
    if (mapped.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
    const Matrix& v = d.eigenvectors;
    const Matrix est = v * mapped.asDiagonal() * v.transpose();
    const Matrix inv = v * mapped.cwiseInverse().asDiagonal() * v.transpose();
    return max_abs_column_sum(est) * max_abs_column_sum(inv);
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < count; i += threads) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace detail

struct PathOptions {
    ConditionNorm norm = ConditionNorm::Spectral;
    // Worker threads for the per-grid-point (slow) path.
    unsigned threads = 1;
    // Skip the one-decomposition shortcut even when it applies.
    bool force_slow = false;
};

/// Condition number of the estimate at every grid value, with an explicit
/// target matrix. When the configuration is rotation equivariant (ArchII, or
/// a target exactly equal to phi * I) a single eigendecomposition of `s`
/// serves the whole grid; otherwise every grid point is decomposed.
inline ConditionPath condition_path(const SymMatrix& s, EstimatorKind kind, const SymMatrix& target,
                                    const PenaltyGrid& grid, const PathOptions& options = {})
{
    check_dims(s, target);
    check_penalty(kind, grid.lambda_min());
    check_penalty(kind, grid.lambda_max());

    ConditionPath path{grid, std::vector<double>(grid.values().size()), options.norm, false, {}, {}, std::nullopt};
    const std::optional<double> phi =
        kind == EstimatorKind::ArchII ? std::optional<double>(0.0) : scalar_target_value(target);
    const auto& lambdas = grid.values();

    if (phi && !options.force_slow) {
        path.fast_path = true;
        if (options.norm == ConditionNorm::Spectral) {
            const Vector d = eigenvalues(s);
            Vector mapped(d.size());
            for (std::size_t i = 0; i < lambdas.size(); ++i) {
                for (Index j = 0; j < d.size(); ++j) {
                    mapped[j] = equivariant_eigmap(kind, d[j], *phi, lambdas[i]);
                }
                path.cond[i] = spectral_condition_from_eigenvalues(mapped);
            }
        } else {
            const SpectralDecomp d = decompose(s);
            Vector mapped(d.dim());
            for (std::size_t i = 0; i < lambdas.size(); ++i) {
                for (Index j = 0; j < d.dim(); ++j) {
                    mapped[j] = equivariant_eigmap(kind, d.eigenvalues[j], *phi, lambdas[i]);
                }
                path.cond[i] = detail::one_norm_condition_spectral(d, mapped);
            }
        }
        return path;
    }

    detail::parallel_for(lambdas.size(), options.threads, [&](std::size_t i) {
        const double lambda = lambdas[i];
        if (options.norm == ConditionNorm::Spectral) {
            if (kind == EstimatorKind::Alt) {
                // Alt is a monotone spectral map of M = s - lambda t.
                const Vector m = eigenvalues(SymMatrix::symmetrized(s.matrix() - lambda * target.matrix()));
                Vector mapped = m.unaryExpr([lambda](double x) { return alt_spectral_map(x, lambda); });
                path.cond[i] = spectral_condition_from_eigenvalues(mapped);
            } else {
                path.cond[i] = spectral_condition(ridge_estimate(kind, s, target, lambda));
            }
        } else {
            if (kind == EstimatorKind::Alt) {
                const SpectralDecomp m =
                    decompose(SymMatrix::symmetrized(s.matrix() - lambda * target.matrix()));
                Vector mapped = m.eigenvalues.unaryExpr([lambda](double x) { return alt_spectral_map(x, lambda); });
                path.cond[i] = detail::one_norm_condition_spectral(m, mapped);
            } else {
                const SpectralDecomp d = decompose(ridge_estimate(kind, s, target, lambda));
                path.cond[i] = detail::one_norm_condition_spectral(d, d.eigenvalues);
            }
        }
    });
    return path;
}

/// Builds the target from `spec` and validates the (estimator, target) pair
/// before computing the path.
inline ConditionPath condition_path(const SymMatrix& s, EstimatorKind kind, const TargetSpec& spec,
                                    const PenaltyGrid& grid, const PathOptions& options = {})
{
    if (kind == EstimatorKind::ArchII) {
        return condition_path(s, kind, SymMatrix::identity(s.dim()), grid, options);
    }
    const SymMatrix t = target_matrix(spec, s, kind == EstimatorKind::ArchI);
    check_target(kind, spec, t);
    return condition_path(s, kind, t, grid, options);
}

// ---------------------------------------------------------------------------
// Aids

/// floor(log10(cond)); kInfiniteDigitLoss for an infinite condition number.
inline int digits_lost(double cond)
{
    if (std::isinf(cond) && cond > 0) return kInfiniteDigitLoss;
    if (!(cond >= 1.0 - 1e-12)) {
        throw Error(ErrorKind::InvalidInput, "condition number must be >= 1, got " + std::to_string(cond));
    }
    return std::max(0, static_cast<int>(std::floor(std::log10(cond))));
}

/// Central second difference in ln(lambda) at the interior grid points.
/// Entries whose stencil touches a non-finite value are empty.
inline std::vector<std::optional<double>> acceleration(std::span<const double> cond, double tau)
{
    if (cond.size() < 3) {
        throw Error(ErrorKind::InvalidInput, "acceleration needs at least 3 grid points");
    }
    std::vector<std::optional<double>> out(cond.size() - 2);
    const double tau2 = tau * tau;
    for (std::size_t s = 1; s + 1 < cond.size(); ++s) {
        const double a = cond[s - 1], b = cond[s], c = cond[s + 1];
        if (std::isfinite(a) && std::isfinite(b) && std::isfinite(c)) {
            out[s - 1] = (c - 2.0 * b + a) / tau2;
        }
    }
    return out;
}

inline std::vector<std::optional<double>> acceleration(const ConditionPath& path)
{
    if (path.norm != ConditionNorm::Spectral) {
        throw Error(ErrorKind::InvalidInput, "acceleration is defined for the spectral condition path only");
    }
    return acceleration(path.cond, path.grid.tau());
}

inline void attach_aids(ConditionPath& path)
{
    path.digits_lost.clear();
    path.digits_lost.reserve(path.cond.size());
    for (double c : path.cond) path.digits_lost.push_back(digits_lost(c));
    path.acceleration = acceleration(path);
}

inline int default_knee_window(int steps) { return std::max(3, steps / 100); }
inline constexpr double kDefaultKneeTolerance = 0.01;

/// First grid index k such that the `window` successive relative drops
/// (cond[s] - cond[s+1]) / cond[s], s = k .. k+window-1, are all <= rel_tol.
inline std::optional<Knee> find_knee(const ConditionPath& path, double rel_tol, int window)
{
    if (path.norm != ConditionNorm::Spectral) {
        throw Error(ErrorKind::InvalidInput, "knee detection needs the spectral condition path");
    }
    if (!(rel_tol > 0.0 && rel_tol < 1.0) || window < 1) {
        throw Error(ErrorKind::InvalidInput, "knee detection needs 0 < rel_tol < 1 and window >= 1");
    }
    const auto& c = path.cond;
    std::size_t run = 0;
    for (std::size_t s = 0; s + 1 < c.size(); ++s) {
        const bool flat = std::isfinite(c[s]) && std::isfinite(c[s + 1]) &&
                          (c[s] - c[s + 1]) / c[s] <= rel_tol;
        run = flat ? run + 1 : 0;
        if (run == static_cast<std::size_t>(window)) {
            const std::size_t k = s + 1 - run;
            return Knee{path.grid[k], k};
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Diagnostics

inline void check_equicorrelation(int p, double rho)
{
    if (p < 2) throw Error(ErrorKind::InvalidInput, "equicorrelation needs p >= 2");
    const double lower = -1.0 / (p - 1);
    if (!(rho > lower && rho < 1.0)) {
        throw Error(ErrorKind::InvalidInput, "equicorrelation rho must lie in (" + std::to_string(lower) + ", 1)");
    }
}

/// (1 - rho) I + rho J.
inline SymMatrix equicorrelation_matrix(int p, double rho)
{
    check_equicorrelation(p, rho);
    Matrix m = Matrix::Constant(p, p, rho);
    m.diagonal().setOnes();
    return SymMatrix::symmetrized(m);
}

/// Closed form 1 + p rho / (1 - rho): the ratio of the leading eigenvalue
/// p rho + 1 - rho to the repeated eigenvalue 1 - rho. This is the spectral
/// condition number for rho >= 0 and its reciprocal for rho < 0.
inline double equicorr_condition(int p, double rho)
{
    check_equicorrelation(p, rho);
    return 1.0 + p * rho / (1.0 - rho);
}

/// Eigenvalues of (1 - mix) Sigma + c mix I given the eigenvalues of Sigma.
inline Vector contaminated_eigenvalues(const Vector& d, double c, double mix)
{
    if (!(c > 0.0)) throw Error(ErrorKind::InvalidInput, "contamination scale c must be positive");
    if (!(mix >= 0.0 && mix <= 1.0)) throw Error(ErrorKind::InvalidInput, "mixing proportion must lie in [0, 1]");
    for (Index j = 1; j < d.size(); ++j) {
        if (d[j] > d[j - 1]) throw Error(ErrorKind::InvalidInput, "eigenvalues must be in descending order");
    }
    return ((1.0 - mix) * d.array() + c * mix).matrix();
}

} // namespace ridgecond
