#pragma once

// Cyclic Jacobi eigenvalue routine used only as an independent check on the
// library's eigensolver. Sweeps until the off-diagonal Frobenius norm drops
// below 1e-12 * ||A||_F, at most 100 sweeps.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace ridgecond::testing {

struct JacobiResult {
    Eigen::VectorXd values; // descending
    Eigen::MatrixXd vectors;
    int sweeps = 0;
};

inline JacobiResult jacobi_eigen(Eigen::MatrixXd a)
{
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double fro = a.norm();
    auto off = [&] {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k)
                if (j != k) s += a(j, k) * a(j, k);
        return std::sqrt(s);
    };
    int sweep = 0;
    for (; sweep < 100 && off() > 1e-12 * fro; ++sweep) {
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (off() > 1e-12 * fro) throw std::runtime_error("jacobi oracle did not converge");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
    JacobiResult r;
    r.values.resize(n);
    r.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r.values[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        r.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    r.sweeps = sweep;
    return r;
}

} // namespace ridgecond::testing
