#pragma once

// Cross-validated penalty selection: held-out Gaussian negative
// log-likelihood averaged over folds, minimised over ln(lambda) with Brent's
// bracketed minimiser.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "ridgecond/condpath.hpp"
#include "ridgecond/ingest.hpp"

namespace ridgecond {

struct CVConfig {
    // 0 means leave-one-out; otherwise the number of folds (>= 2).
    int folds = 0;
    double lambda_lo = 1e-5;
    double lambda_hi = 20.0;
    EstimatorKind estimator = EstimatorKind::Alt;
    TargetSpec target = TargetSpec::average_eigenvalue();
    bool use_correlation = false;
    // Training covariance with divisor n - 1 instead of n.
    bool unbiased = false;
    // Absolute tolerance on ln(lambda).
    double tol = 1e-6;
    int max_iter = 200;
    // K-fold only: shuffle rows before the round-robin assignment.
    std::optional<std::uint64_t> shuffle_seed;
};

struct CVResult {
    double lambda_opt = 0.0;
    double score_opt = 0.0;
    int evaluations = 0;
    std::vector<std::pair<double, double>> bracket_history; // (lambda, score) per evaluation
};

inline constexpr double kLn2Pi = 1.8378770664093454835606594728112;

/// Mean over rows of 1/2 [p ln(2 pi) - ln|Omega| + y^T Omega y].
inline double neg_loglik(const Matrix& test_rows, const SymMatrix& precision)
{
    if (test_rows.cols() != precision.dim()) {
        throw Error(ErrorKind::InvalidInput, "test rows and precision dimensions differ");
    }
    const Eigen::LLT<Matrix> llt(precision.matrix());
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::InvalidInput, "precision matrix is not positive definite");
    }
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const Matrix ly = llt.matrixU() * test_rows.transpose(); // columns: L^T y, so |L^T y|^2 = y^T Omega y
    const double p = static_cast<double>(precision.dim());
    double total = 0.0;
    for (Index i = 0; i < test_rows.rows(); ++i) {
        total += 0.5 * (p * kLn2Pi - logdet + ly.col(i).squaredNorm());
    }
    return total / static_cast<double>(test_rows.rows());
}

/// Fold membership: LOO puts each row in its own fold; K-fold assigns row i
/// (after an optional seeded shuffle) to fold i mod K.
inline std::vector<std::vector<Index>> fold_assignment(Index n, int folds, std::optional<std::uint64_t> seed)
{
    const bool loo = folds == 0 || folds == n;
    const Index k = loo ? n : folds;
    if (!loo && (folds < 2 || folds > n)) {
        throw Error(ErrorKind::InvalidInput,
                    "fold count must lie in [2, n], got " + std::to_string(folds));
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    if (!loo && seed) {
        std::mt19937_64 rng(*seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(k));
    for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i % k)].push_back(order[static_cast<std::size_t>(i)]);
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

/// Precomputes per-fold training statistics so that repeated evaluations at
/// different penalties only redo the estimator-dependent work. For rotation
/// equivariant configurations each fold keeps the eigendecomposition of its
/// training matrix and scoring is O(n p) per penalty.
class CrossValidator {
public:
    CrossValidator(const Matrix& data, CVConfig cfg) : cfg_(std::move(cfg))
    {
        const Index n = data.rows();
        if (n < 2 || data.cols() < 1) throw Error(ErrorKind::InvalidInput, "cross-validation needs n >= 2, p >= 1");
        if (!data.allFinite()) throw Error(ErrorKind::InvalidInput, "data contains non-finite values");
        if (!(cfg_.lambda_lo > 0.0) || !(cfg_.lambda_lo < cfg_.lambda_hi)) {
            throw Error(ErrorKind::InvalidInput, "cross-validation needs 0 < lambda_lo < lambda_hi");
        }
        check_penalty(cfg_.estimator, cfg_.lambda_lo);
        check_penalty(cfg_.estimator, cfg_.lambda_hi);

        for (const auto& members : fold_assignment(n, cfg_.folds, cfg_.shuffle_seed)) {
            folds_.push_back(make_fold(data, members));
        }
    }

    const CVConfig& config() const noexcept { return cfg_; }
    std::size_t fold_count() const noexcept { return folds_.size(); }
    /// Training matrix (covariance or correlation) of fold k.
    const SymMatrix& training_matrix(std::size_t k) const { return folds_.at(k).train; }
    /// Held-out rows of fold k after centring/scaling with training statistics.
    const Matrix& held_out(std::size_t k) const { return folds_.at(k).test; }

    /// Mean over folds of the held-out negative log-likelihood.
    double score(double lambda) const
    {
        check_penalty(cfg_.estimator, lambda);
        double total = 0.0;
        for (const Fold& f : folds_) total += fold_score(f, lambda);
        return total / static_cast<double>(folds_.size());
    }

    /// Same quantity through explicit estimate -> precision -> neg_loglik.
    /// Slower; kept as a cross-check of the spectral shortcut.
    double score_via_precision(double lambda) const
    {
        check_penalty(cfg_.estimator, lambda);
        double total = 0.0;
        for (const Fold& f : folds_) {
            const SymMatrix est = ridge_estimate(cfg_.estimator, f.train, f.target, lambda);
            total += neg_loglik(f.test, precision_of(est));
        }
        return total / static_cast<double>(folds_.size());
    }

private:
    struct Fold {
        Matrix test; // centred (and scaled) with training statistics
        SymMatrix train;
        SymMatrix target;
        std::optional<double> phi;
        // Equivariant configurations only.
        Vector eigenvalues;
        Matrix rotated_test; // test * V
    };

    Fold make_fold(const Matrix& data, const std::vector<Index>& members) const
    {
        const Index n = data.rows(), p = data.cols();
        const Index m = static_cast<Index>(members.size());
        Matrix train(n - m, p), test(m, p);
        std::vector<bool> held(static_cast<std::size_t>(n), false);
        for (Index i : members) held[static_cast<std::size_t>(i)] = true;
        for (Index i = 0, r = 0, t = 0; i < n; ++i) {
            if (held[static_cast<std::size_t>(i)]) test.row(t++) = data.row(i);
            else train.row(r++) = data.row(i);
        }
        if (train.rows() < 2) throw Error(ErrorKind::InvalidInput, "training fold has fewer than 2 rows");

        const Eigen::RowVectorXd mean = train.colwise().mean();
        SymMatrix s = cfg_.unbiased ? cov_unbiased(train) : cov_ml(train);
        if (!s.matrix().allFinite()) throw Error(ErrorKind::InvalidInput, "training covariance is not finite");
        test.rowwise() -= mean;
        if (cfg_.use_correlation) {
            const Vector sd = s.matrix().diagonal().cwiseSqrt();
            s = to_correlation(s);
            test = test * sd.cwiseInverse().asDiagonal();
        }

        SymMatrix target = SymMatrix::identity(p);
        std::optional<double> phi = 0.0;
        if (cfg_.estimator != EstimatorKind::ArchII) {
            target = target_matrix(cfg_.target, s, cfg_.estimator == EstimatorKind::ArchI);
            check_target(cfg_.estimator, cfg_.target, target);
            phi = scalar_target_value(target);
        }
        Fold f{std::move(test), std::move(s), std::move(target), phi, {}, {}};
        if (phi) {
            const SpectralDecomp d = decompose(f.train);
            f.eigenvalues = d.eigenvalues;
            f.rotated_test = f.test * d.eigenvectors;
        }
        return f;
    }

    // 1/2 [p ln 2pi + sum ln e_j + sum z_j^2 / e_j] averaged over test rows,
    // with e the estimate's eigenvalues and z the test row in its eigenbasis.
    static double spectral_score(const Vector& e, const Matrix& z)
    {
        if (!(e.minCoeff() > 0.0) || !e.allFinite()) {
            throw Error(ErrorKind::NumericalFailure, "estimate is not positive definite");
        }
        const double p = static_cast<double>(e.size());
        const double logdet = e.array().log().sum();
        const Vector inv = e.cwiseInverse();
        double total = 0.0;
        for (Index i = 0; i < z.rows(); ++i) {
            total += 0.5 * (p * kLn2Pi + logdet + z.row(i).array().square().matrix().dot(inv));
        }
        return total / static_cast<double>(z.rows());
    }

    double fold_score(const Fold& f, double lambda) const
    {
        if (f.phi) {
            const Vector e = f.eigenvalues.unaryExpr(
                [&](double d) { return equivariant_eigmap(cfg_.estimator, d, *f.phi, lambda); });
            return spectral_score(e, f.rotated_test);
        }
        SpectralDecomp d;
        if (cfg_.estimator == EstimatorKind::Alt) {
            d = decompose(SymMatrix::symmetrized(f.train.matrix() - lambda * f.target.matrix()));
            d.eigenvalues = d.eigenvalues.unaryExpr([lambda](double x) { return alt_spectral_map(x, lambda); });
        } else {
            d = decompose(ridge_estimate(cfg_.estimator, f.train, f.target, lambda));
        }
        return spectral_score(d.eigenvalues, f.test * d.eigenvectors);
    }

    CVConfig cfg_;
    std::vector<Fold> folds_;
};

inline double cv_score(const Matrix& data, double lambda, const CVConfig& cfg)
{
    return CrossValidator(data, cfg).score(lambda);
}

// ---------------------------------------------------------------------------
// Brent minimisation

struct BrentResult {
    double x = 0.0;
    double fx = 0.0;
    int evaluations = 0;
    std::vector<std::pair<double, double>> history; // (x, f(x)) per evaluation
};

/// Bracketed scalar minimisation (golden section + successive parabolic
/// interpolation). Only evaluates inside [lo, hi]; the endpoints are scored
/// last so boundary minima are returned exactly.
inline BrentResult brent_minimize(const std::function<double(double)>& f, double lo, double hi, double tol,
                                  int max_iter)
{
    if (!(lo < hi)) throw Error(ErrorKind::InvalidInput, "brent_minimize needs lo < hi");
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "brent_minimize needs tol > 0");
    if (max_iter < 3) throw Error(ErrorKind::InvalidInput, "brent_minimize needs max_iter >= 3");

    BrentResult res;
    double best_x = lo, best_f = std::numeric_limits<double>::infinity();
    auto eval = [&](double x) {
        if (res.evaluations >= max_iter) throw ConvergenceError(best_x, best_f, res.evaluations);
        const double fx = f(x);
        if (!std::isfinite(fx)) {
            throw Error(ErrorKind::NumericalFailure, "objective is not finite at " + std::to_string(x));
        }
        ++res.evaluations;
        res.history.emplace_back(x, fx);
        if (fx < best_f) {
            best_f = fx;
            best_x = x;
        }
        return fx;
    };

    const double golden = 0.5 * (3.0 - std::sqrt(5.0));
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
    double a = lo, b = hi;
    double x = a + golden * (b - a), w = x, v = x;
    double fx = eval(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;

    // Leave room for the two endpoint evaluations.
    const int interior_budget = max_iter - 2;
    for (;;) {
        const double m = 0.5 * (a + b);
        const double tol1 = eps * std::abs(x) + tol / 3.0;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
        if (res.evaluations >= interior_budget) throw ConvergenceError(best_x, best_f, res.evaluations);

        double p = 0.0, q = 0.0, r = 0.0;
        if (std::abs(e) > tol1) {
            r = (x - w) * (fx - fv);
            q = (x - v) * (fx - fw);
            p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            else q = -q;
            r = e;
            e = d;
        }
        if (std::abs(p) < std::abs(0.5 * q * r) && p > q * (a - x) && p < q * (b - x)) {
            d = p / q; // parabolic step
            const double u = x + d;
            if (u - a < tol2 || b - u < tol2) d = x < m ? tol1 : -tol1;
        } else {
            e = (x < m ? b : a) - x; // golden-section step
            d = golden * e;
        }
        const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
        const double fu = eval(u);
        if (fu <= fx) {
            (u < x ? b : a) = x;
            v = w, fv = fw;
            w = x, fw = fx;
            x = u, fx = fu;
        } else {
            (u < x ? a : b) = u;
            if (fu <= fw || w == x) {
                v = w, fv = fw;
                w = u, fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u, fv = fu;
            }
        }
    }

    res.x = x;
    res.fx = fx;
    for (double edge : {lo, hi}) {
        const double fe = eval(edge);
        if (fe < res.fx) {
            res.x = edge;
            res.fx = fe;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Penalty selection

/// Minimises the cross-validated score over ln(lambda) in
/// [ln lambda_lo, ln lambda_hi].
inline CVResult select_penalty(const Matrix& data, const CVConfig& cfg)
{
    const CrossValidator cv(data, cfg);
    const double lo = cfg.lambda_lo, hi = cfg.lambda_hi;
    auto clamp = [&](double x) { return std::clamp(std::exp(x), lo, hi); };
    const BrentResult br = brent_minimize([&](double x) { return cv.score(clamp(x)); }, std::log(lo), std::log(hi),
                                          cfg.tol, cfg.max_iter);
    CVResult out;
    out.lambda_opt = clamp(br.x);
    out.score_opt = br.fx;
    out.evaluations = br.evaluations;
    out.bracket_history.reserve(br.history.size());
    for (const auto& [x, fx] : br.history) out.bracket_history.emplace_back(clamp(x), fx);
    return out;
}

inline CVResult select_penalty(const Dataset& data, const CVConfig& cfg)
{
    return select_penalty(data.values(), cfg);
}

/// Scores a log-equidistant grid over [lambda_lo, lambda_hi].
inline std::vector<std::pair<double, double>> cv_grid_scan(const Matrix& data, const CVConfig& cfg, int steps)
{
    const CrossValidator cv(data, cfg);
    const PenaltyGrid grid(cfg.lambda_lo, cfg.lambda_hi, steps);
    std::vector<std::pair<double, double>> out;
    out.reserve(grid.values().size());
    for (double l : grid.values()) out.emplace_back(l, cv.score(l));
    return out;
}

} // namespace ridgecond
