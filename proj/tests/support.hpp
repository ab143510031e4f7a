#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace testsupport {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd gaussian(Index n, Index p, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x5eedULL);
    std::normal_distribution<double> z(0.0, 1.0);
    MatrixXd m(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) m(i, j) = z(rng);
    return m;
}

inline VectorXd gaussian_vec(Index n, std::uint64_t seed) { return gaussian(n, 1, seed).col(0); }

inline MatrixXd unit_columns(MatrixXd m) {
    for (Index j = 0; j < m.cols(); ++j) {
        double ss = 0.0;
        for (Index i = 0; i < m.rows(); ++i) ss += m(i, j) * m(i, j);
        m.col(j) /= std::sqrt(ss);
    }
    return m;
}

// Classical Gram-Schmidt, written out.
inline MatrixXd orthonormal(Index n, Index p, std::uint64_t seed) {
    MatrixXd a = gaussian(n, p, seed);
    for (Index j = 0; j < p; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (Index k = 0; k < j; ++k) {
                double d = 0.0;
                for (Index i = 0; i < n; ++i) d += a(i, k) * a(i, j);
                for (Index i = 0; i < n; ++i) a(i, j) -= d * a(i, k);
            }
        double ss = 0.0;
        for (Index i = 0; i < n; ++i) ss += a(i, j) * a(i, j);
        for (Index i = 0; i < n; ++i) a(i, j) /= std::sqrt(ss);
    }
    return a;
}

// Normal equations solved by Gauss-Jordan elimination with partial pivoting.
inline VectorXd normal_equations(const MatrixXd& x, const VectorXd& y) {
    const Index p = x.cols();
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (Index j = 0; j < p; ++j) {
        for (Index k = 0; k < p; ++k)
            for (Index i = 0; i < x.rows(); ++i) a[j][k] += x(i, j) * x(i, k);
        for (Index i = 0; i < x.rows(); ++i) a[j][p] += x(i, j) * y(i);
    }
    for (Index c = 0; c < p; ++c) {
        Index piv = c;
        for (Index r = c + 1; r < p; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (Index r = 0; r < p; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (Index k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
        }
    }
    VectorXd b(p);
    for (Index j = 0; j < p; ++j) b(j) = a[j][p] / a[j][j];
    return b;
}

inline double soft(double z, double lam) {
    if (z > lam) return z - lam;
    if (z < -lam) return z + lam;
    return 0.0;
}

// Two-sample Kolmogorov-Smirnov: true when equality is rejected at level alpha
// (asymptotic critical value).
inline bool ks_rejects(std::vector<double> a, std::vector<double> b, double alpha) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    const double crit = std::sqrt(-0.5 * std::log(alpha / 2.0)) * std::sqrt((n + m) / (n * m));
    return d > crit;
}

// Smallest eigenvalue of a symmetric 2x2 matrix.
inline double min_eig_2x2(double a, double b, double d) {
    const double tr = a + d;
    const double det = a * d - b * b;
    return tr / 2.0 - std::sqrt(tr * tr / 4.0 - det);
}

}  // namespace testsupport
