#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ridgecond/condpath.hpp"
#include "support/expect_error.hpp"
#include "support/random.hpp"

using namespace ridgecond;
using ridgecond::testing::rel_diff;
using ridgecond::testing::Rng;

namespace {

SymMatrix diag(std::initializer_list<double> d)
{
    Vector v(static_cast<Index>(d.size()));
    Index i = 0;
    for (double x : d) v[i++] = x;
    return SymMatrix::diagonal(v);
}

ConditionPath path_from(const PenaltyGrid& grid, std::vector<double> cond)
{
    return ConditionPath{grid, std::move(cond), ConditionNorm::Spectral, false, {}, {}, std::nullopt};
}

// Exhaustive scan: every start index, every offset in the window.
std::optional<std::size_t> knee_by_scan(const std::vector<double>& c, double tol, std::size_t window)
{
    for (std::size_t k = 0; k + window < c.size(); ++k) {
        bool ok = true;
        for (std::size_t s = k; s < k + window; ++s) ok = ok && (c[s] - c[s + 1]) / c[s] <= tol;
        if (ok) return k;
    }
    return std::nullopt;
}

} // namespace

TEST(PenaltyGrid, LogEquidistantWithExactEndpoints)
{
    const PenaltyGrid g(1e-5, 20.0, 137);
    EXPECT_EQ(g[0], 1e-5);
    EXPECT_EQ(g[136], 20.0);
    EXPECT_EQ(g.values().size(), 137u);
    EXPECT_NEAR(g.tau(), (std::log(20.0) - std::log(1e-5)) / 136, 1e-15);
    for (std::size_t s = 1; s < g.values().size(); ++s) {
        EXPECT_NEAR(std::log(g[s]) - std::log(g[s - 1]), g.tau(), 1e-12);
    }
}

TEST(PenaltyGrid, RejectsInvalidDomains)
{
    EXPECT_ERROR_KIND(PenaltyGrid(0.0, 1.0, 10), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(PenaltyGrid(-1.0, 1.0, 10), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(PenaltyGrid(1.0, 1.0, 10), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(PenaltyGrid(2.0, 1.0, 10), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(PenaltyGrid(1.0, 2.0, 2), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(PenaltyGrid(1.0, INFINITY, 5), ErrorKind::InvalidInput);
}

TEST(SpectralCondition, Examples)
{
    EXPECT_EQ(spectral_condition(diag({3.0, 1.0})), 3.0);
    EXPECT_EQ(spectral_condition(diag({3.0, 0.0})), INFINITY);
    EXPECT_EQ(spectral_condition(diag({3.0, -1e-18})), INFINITY);
    EXPECT_LE(rel_diff(spectral_condition(equicorrelation_matrix(10, 0.5)), 11.0), 1e-12);
    EXPECT_ERROR_KIND(spectral_condition(SymMatrix::zero(3)), ErrorKind::InvalidInput);
}

TEST(SpectralCondition, ScaleInvariant)
{
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        const SymMatrix a = rng.well_conditioned(rng.integer(1, 20));
        const double c = std::exp(rng.uniform(-20.0, 20.0));
        EXPECT_LE(rel_diff(spectral_condition(c * a), spectral_condition(a)), 1e-12);
    }
}

TEST(SpectralCondition, CovarianceAndPrecisionAgree)
{
    Rng rng(22);
    for (int rep = 0; rep < 50; ++rep) {
        const Index p = rng.integer(1, 30);
        const SymMatrix a = rng.well_conditioned(p);
        EXPECT_LE(rel_diff(spectral_condition(a), spectral_condition(precision_of(a))), 1e-9);
    }
}

TEST(OneNormCondition, Examples)
{
    EXPECT_EQ(one_norm_condition(SymMatrix::identity(3), SymMatrix::identity(3)), 1.0);
    EXPECT_EQ(one_norm_condition(diag({3.0, 1.0}), diag({1.0 / 3.0, 1.0})), 3.0);
    Matrix a(2, 2), inv(2, 2);
    a << 2, 1, 1, 2;
    inv << 2.0 / 3, -1.0 / 3, -1.0 / 3, 2.0 / 3;
    EXPECT_NEAR(one_norm_condition(SymMatrix(a), SymMatrix(inv)), 3.0, 1e-15);
}

TEST(ConditionPath, ArchIIOnDiagonalHasClosedForm)
{
    const PenaltyGrid g(std::exp(-4.0), std::exp(4.0), 101);
    const ConditionPath path = condition_path(diag({3.0, 0.0}), EstimatorKind::ArchII, TargetSpec::null(), g);
    EXPECT_TRUE(path.fast_path);
    for (std::size_t s = 0; s < path.cond.size(); ++s) {
        EXPECT_LE(rel_diff(path.cond[s], (3.0 + g[s]) / g[s]), 1e-13);
    }
}

TEST(ConditionPath, AltExampleOneEndpoints)
{
    const PenaltyGrid g(1e-10, 1e4, 50);
    const ConditionPath path = condition_path(diag({3.0, 0.0}), EstimatorKind::Alt, TargetSpec::scalar(2.0), g);
    EXPECT_TRUE(path.fast_path);
    EXPECT_LE(rel_diff(path.cond.front(), 300002.99999833316667), 1e-10);
    EXPECT_NEAR(path.cond.back(), 1.00015, 1e-4);
}

TEST(ConditionPath, ArchIAtFullShrinkageReachesTargetCondition)
{
    const PenaltyGrid g(0.01, 1.0, 20);
    const ConditionPath path = condition_path(diag({5.0, 1.0, 0.0}), EstimatorKind::ArchI, TargetSpec::scalar(1.0), g);
    EXPECT_EQ(path.cond.back(), 1.0);
    EXPECT_ERROR_KIND(condition_path(diag({1.0}), EstimatorKind::ArchI, TargetSpec::scalar(1.0), PenaltyGrid(0.1, 2, 5)),
                      ErrorKind::PenaltyOutOfDomain);
}

TEST(ConditionPath, FastPathMatchesSlowPath)
{
    Rng rng(23);
    for (int rep = 0; rep < 12; ++rep) {
        const Index p = rng.integer(2, 20);
        const SymMatrix s = rng.psd(p, rng.integer(1, 25));
        for (auto kind : {EstimatorKind::ArchI, EstimatorKind::ArchII, EstimatorKind::Alt}) {
            const PenaltyGrid g = kind == EstimatorKind::ArchI ? PenaltyGrid(1e-4, 1.0, 40) : PenaltyGrid(1e-4, 1e3, 40);
            const SymMatrix t = rng.uniform(0.3, 3.0) * SymMatrix::identity(p);
            for (auto norm : {ConditionNorm::Spectral, ConditionNorm::One}) {
                PathOptions fast{norm, 1, false}, slow{norm, 2, true};
                const ConditionPath a = condition_path(s, kind, t, g, fast);
                const ConditionPath b = condition_path(s, kind, t, g, slow);
                ASSERT_TRUE(a.fast_path);
                ASSERT_FALSE(b.fast_path);
                for (std::size_t i = 0; i < a.cond.size(); ++i) {
                    if (std::isinf(a.cond[i]) || std::isinf(b.cond[i])) {
                        EXPECT_EQ(a.cond[i], b.cond[i]);
                    } else {
                        EXPECT_LE(rel_diff(a.cond[i], b.cond[i]), 1e-9)
                            << to_string(kind) << " norm " << static_cast<int>(norm) << " i " << i;
                    }
                }
            }
        }
    }
}

TEST(ConditionPath, NonScalarTargetUsesSlowPath)
{
    Rng rng(24);
    const SymMatrix s = rng.psd(6, 4);
    const ConditionPath path =
        condition_path(s, EstimatorKind::Alt, TargetSpec::reciprocal_variance(), PenaltyGrid(1e-3, 10, 30));
    EXPECT_FALSE(path.fast_path);
    const SymMatrix t = target_matrix(TargetSpec::reciprocal_variance(), s);
    for (std::size_t i = 0; i < path.cond.size(); i += 7) {
        EXPECT_LE(rel_diff(path.cond[i], spectral_condition(ridge_alt(s, t, path.grid[i]))), 1e-9);
    }
}

TEST(ConditionPath, OneNormMatchesDirectComputation)
{
    Rng rng(25);
    const SymMatrix s = rng.psd(5, 8);
    const SymMatrix t = target_matrix(TargetSpec::reciprocal_variance(), s);
    const ConditionPath path = condition_path(s, EstimatorKind::ArchI, t, PenaltyGrid(1e-2, 1, 10),
                                              PathOptions{ConditionNorm::One, 1, false});
    for (std::size_t i = 0; i < path.cond.size(); ++i) {
        const SymMatrix e = ridge_arch1(s, t, path.grid[i]);
        Matrix inv = e.matrix().inverse();
        EXPECT_LE(rel_diff(path.cond[i], max_abs_column_sum(e.matrix()) * max_abs_column_sum(inv)), 1e-9);
        EXPECT_GE(path.cond[i], 1.0);
    }
}

TEST(ConditionPath, ThreadedSlowPathIsIdenticalToSerial)
{
    Rng rng(26);
    const SymMatrix s = rng.psd(12, 5);
    const SymMatrix t = rng.well_conditioned(12);
    const PenaltyGrid g(1e-4, 1e2, 64);
    const ConditionPath a = condition_path(s, EstimatorKind::Alt, t, g, PathOptions{ConditionNorm::Spectral, 1, false});
    const ConditionPath b = condition_path(s, EstimatorKind::Alt, t, g, PathOptions{ConditionNorm::Spectral, 4, false});
    EXPECT_EQ(a.cond, b.cond);
}

TEST(ConditionPath, MonotoneNonIncreasingForScalarTargets)
{
    Rng rng(27);
    for (int rep = 0; rep < 20; ++rep) {
        const Index p = rng.integer(2, 25);
        const SymMatrix s = rng.psd(p, rng.integer(1, 30));
        const double dp = eigenvalues(s).minCoeff();
        // For alt the path only falls throughout when phi * dp <= 1.
        const double phi = std::min(rng.uniform(0.2, 3.0), dp > 0 ? 1.0 / dp : INFINITY);
        for (auto kind : {EstimatorKind::ArchI, EstimatorKind::ArchII, EstimatorKind::Alt}) {
            const PenaltyGrid g = kind == EstimatorKind::ArchI ? PenaltyGrid(1e-6, 1.0, 200) : PenaltyGrid(1e-6, 1e6, 200);
            const ConditionPath path = condition_path(s, kind, TargetSpec::scalar(phi), g);
            for (std::size_t i = 1; i < path.cond.size(); ++i) {
                EXPECT_LE(path.cond[i], path.cond[i - 1] * (1 + 1e-12)) << to_string(kind) << " i " << i;
            }
        }
    }
}

TEST(ConditionPath, AltRisesFirstWhenEveryEigenvalueExceedsInversePhi)
{
    // Eigenvalues 10 and 5 with phi = 1: the smaller eigenvalue moves away
    // from its lambda = 0 value faster than the larger one.
    const SymMatrix s = diag({10.0, 5.0});
    const PenaltyGrid g(1e-3, 1e6, 181);
    const ConditionPath path = condition_path(s, EstimatorKind::Alt, TargetSpec::scalar(1.0), g);
    EXPECT_NEAR(path.cond.front(), 2.0, 1e-3);
    const double peak = *std::max_element(path.cond.begin(), path.cond.end());
    EXPECT_GT(peak, 2.6);
    EXPECT_NEAR(path.cond.back(), 1.0, 1e-4);
}

TEST(DigitsLost, Examples)
{
    EXPECT_EQ(digits_lost(184.95), 2);
    EXPECT_EQ(digits_lost(9456.0), 3);
    EXPECT_EQ(digits_lost(1.0), 0);
    EXPECT_EQ(digits_lost(10.0), 1);
    EXPECT_EQ(digits_lost(9.999999), 0);
    EXPECT_EQ(digits_lost(INFINITY), kInfiniteDigitLoss);
    EXPECT_ERROR_KIND(digits_lost(0.5), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(digits_lost(std::nan("")), ErrorKind::InvalidInput);
}

TEST(Acceleration, ConstantPathIsZero)
{
    const PenaltyGrid g(0.1, 10, 9);
    const auto acc = acceleration(path_from(g, std::vector<double>(9, 4.2)));
    ASSERT_EQ(acc.size(), 7u);
    for (const auto& a : acc) EXPECT_EQ(a, 0.0);
}

TEST(Acceleration, ExactForLowOrderPolynomialsInLogPenalty)
{
    const PenaltyGrid g(std::exp(-3.0), std::exp(5.0), 33);
    std::vector<double> sq, cube;
    for (double l : g.values()) {
        const double x = std::log(l);
        sq.push_back(1.0 + x * x);
        cube.push_back(50.0 + x * x * x);
    }
    const auto a2 = acceleration(sq, g.tau());
    const auto a3 = acceleration(cube, g.tau());
    for (std::size_t i = 0; i < a2.size(); ++i) {
        EXPECT_NEAR(*a2[i], 2.0, 1e-11);
        EXPECT_NEAR(*a3[i], 6.0 * std::log(g[i + 1]), 1e-10);
    }
}

TEST(Acceleration, ConvergesAtSecondOrder)
{
    // cond = (3 + lambda) / lambda = 1 + 3 exp(-x), second derivative 3 exp(-x).
    // Error measured at ln(lambda) = 0, the midpoint of every odd-sized grid.
    auto mid_error = [](int steps) {
        const PenaltyGrid g(std::exp(-2.0), std::exp(2.0), steps);
        std::vector<double> c;
        for (double l : g.values()) c.push_back((3.0 + l) / l);
        const auto acc = acceleration(c, g.tau());
        return std::abs(*acc[static_cast<std::size_t>(steps / 2 - 1)] - 3.0);
    };
    for (int s : {17, 33, 65}) {
        const double order = std::log2(mid_error(s) / mid_error(2 * s - 1));
        EXPECT_GE(order, 1.9) << "S=" << s;
    }
}

TEST(Acceleration, InfiniteStencilsAreEmpty)
{
    const PenaltyGrid g(0.1, 10, 5);
    ConditionPath path = path_from(g, {INFINITY, 5.0, 3.0, 2.0, 1.5});
    attach_aids(path);
    ASSERT_EQ(path.acceleration.size(), 3u);
    EXPECT_FALSE(path.acceleration[0].has_value());
    EXPECT_TRUE(path.acceleration[1].has_value());
    EXPECT_EQ(path.digits_lost[0], kInfiniteDigitLoss);
    EXPECT_EQ(path.digits_lost[1], 0);

    ConditionPath one = path;
    one.norm = ConditionNorm::One;
    EXPECT_ERROR_KIND(acceleration(one), ErrorKind::InvalidInput);
}

TEST(FindKnee, FlatPathStartsAtZero)
{
    const PenaltyGrid g(0.1, 10, 20);
    const auto k = find_knee(path_from(g, std::vector<double>(20, 7.0)), 0.01, 3);
    ASSERT_TRUE(k.has_value());
    EXPECT_EQ(k->index, 0u);
    EXPECT_EQ(k->lambda, 0.1);
}

TEST(FindKnee, MatchesExhaustiveScan)
{
    for (int steps : {50, 200, 1000}) {
        const PenaltyGrid g(1e-5, 1e5, steps);
        std::vector<double> c;
        for (double l : g.values()) c.push_back((3.0 + l) / l);
        for (int window : {1, 3, 5, 12}) {
            const auto k = find_knee(path_from(g, c), 0.01, window);
            const auto oracle = knee_by_scan(c, 0.01, static_cast<std::size_t>(window));
            ASSERT_EQ(k.has_value(), oracle.has_value());
            if (k) {
                EXPECT_EQ(k->index, *oracle) << "steps " << steps << " window " << window;
                EXPECT_EQ(k->lambda, g[k->index]);
            }
        }
    }
}

TEST(FindKnee, RandomPathsMatchScan)
{
    Rng rng(28);
    for (int rep = 0; rep < 200; ++rep) {
        const int steps = rng.integer(3, 60);
        const PenaltyGrid g(0.01, 100, steps);
        std::vector<double> c{rng.uniform(50, 100)};
        for (int s = 1; s < steps; ++s) c.push_back(c.back() * (1.0 - rng.uniform(0.0, 0.03)));
        const int window = rng.integer(1, 6);
        const auto k = find_knee(path_from(g, c), 0.01, window);
        const auto oracle = knee_by_scan(c, 0.01, static_cast<std::size_t>(window));
        ASSERT_EQ(k.has_value(), oracle.has_value());
        if (k) {
            EXPECT_EQ(k->index, *oracle);
        }
    }
}

TEST(FindKnee, SteepPathHasNoKnee)
{
    const PenaltyGrid g(1, 1e6, 30);
    std::vector<double> c;
    for (double l : g.values()) c.push_back(1e8 / l);
    EXPECT_FALSE(find_knee(path_from(g, c), 0.01, 3).has_value());
}

TEST(FindKnee, InfiniteValuesAreNeverFlat)
{
    const PenaltyGrid g(1, 10, 6);
    const auto k = find_knee(path_from(g, {INFINITY, INFINITY, 2.0, 2.0, 2.0, 2.0}), 0.01, 3);
    ASSERT_TRUE(k.has_value());
    EXPECT_EQ(k->index, 2u);
    EXPECT_ERROR_KIND(find_knee(path_from(g, std::vector<double>(6, 1.0)), 0.0, 3), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(find_knee(path_from(g, std::vector<double>(6, 1.0)), 0.1, 0), ErrorKind::InvalidInput);
}

TEST(Equicorrelation, ClosedFormAndEigenvalues)
{
    EXPECT_EQ(equicorr_condition(5, 0.0), 1.0);
    EXPECT_LE(rel_diff(equicorr_condition(10, 0.5), 11.0), 1e-15);
    for (auto [p, rho] : {std::pair{10, 0.5}, {100, 0.9}, {7, 0.2}}) {
        const Vector e = eigenvalues(equicorrelation_matrix(p, rho));
        EXPECT_NEAR(e[0], p * rho + 1 - rho, 1e-10 * p);
        for (Index j = 1; j < p; ++j) EXPECT_NEAR(e[j], 1 - rho, 1e-10 * p);
        EXPECT_LE(rel_diff(spectral_condition(equicorrelation_matrix(p, rho)), equicorr_condition(p, rho)), 1e-10);
    }
}

TEST(Equicorrelation, NegativeCorrelationGivesReciprocal)
{
    const double closed = equicorr_condition(5, -0.1);
    EXPECT_LT(closed, 1.0);
    EXPECT_LE(rel_diff(spectral_condition(equicorrelation_matrix(5, -0.1)), 1.0 / closed), 1e-10);
}

TEST(Equicorrelation, RejectsOutOfRange)
{
    EXPECT_ERROR_KIND(equicorr_condition(1, 0.5), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(equicorr_condition(5, 1.0), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(equicorr_condition(5, -0.25), ErrorKind::InvalidInput);
    EXPECT_NO_THROW(equicorr_condition(5, -0.2499));
}

TEST(Contamination, Examples)
{
    Vector d(2);
    d << 3.0, 0.0;
    EXPECT_EQ(contaminated_eigenvalues(d, 2.0, 0.0), d);
    EXPECT_EQ(contaminated_eigenvalues(d, 2.0, 1.0), Vector::Constant(2, 2.0));
    const Vector half = contaminated_eigenvalues(d, 2.0, 0.5);
    EXPECT_EQ(half[0], 2.5);
    EXPECT_EQ(half[1], 1.0);
    EXPECT_ERROR_KIND(contaminated_eigenvalues(d.reverse(), 2.0, 0.5), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(contaminated_eigenvalues(d, 0.0, 0.5), ErrorKind::InvalidInput);
    EXPECT_ERROR_KIND(contaminated_eigenvalues(d, 1.0, 1.5), ErrorKind::InvalidInput);
}

TEST(Contamination, MatchesDecompositionOfMixture)
{
    Rng rng(29);
    for (int rep = 0; rep < 30; ++rep) {
        const Index p = rng.integer(1, 20);
        const SymMatrix sigma = rng.psd(p, rng.integer(1, 25));
        const double c = rng.uniform(0.1, 5.0), mix = rng.uniform(0.0, 1.0);
        const Vector law = contaminated_eigenvalues(eigenvalues(sigma), c, mix);
        const Vector direct = eigenvalues((1 - mix) * sigma + (c * mix) * SymMatrix::identity(p));
        EXPECT_LE((law - direct).cwiseAbs().maxCoeff(), 1e-9);
    }
}
