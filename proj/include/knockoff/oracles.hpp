#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "knockoff/errors.hpp"
#include "knockoff/filter.hpp"
#include "knockoff/knockoffs.hpp"
#include "knockoff/model.hpp"

namespace knockoff::oracle {

/// Reverse-time stopping rule over (j, B_1 + ... + B_j, number of ones in B_{j+1..n}).
///
/// threshold: stop at the largest j with (a + S_j + w * tail_ones) / max(j - S_j, 1) <= c.
/// fixed: stop at j = min(fixed_j, n).
struct StoppingRule {
    enum class Kind { threshold, fixed };
    Kind kind = Kind::threshold;
    double a = 1.0;
    double w = 0.0;
    double c = 1.0;
    Index fixed_j = 0;

    bool stops(Index j, Index partial_sum, Index tail_ones) const {
        if (kind == Kind::fixed) return j == fixed_j;
        const double num = a + static_cast<double>(partial_sum) + w * static_cast<double>(tail_ones);
        return num / static_cast<double>(std::max<Index>(j - partial_sum, 1)) <= c;
    }

    static StoppingRule at(Index j) {
        StoppingRule r;
        r.kind = Kind::fixed;
        r.fixed_j = j;
        return r;
    }
};

struct BernoulliStoppingInstance {
    std::vector<double> rho;  // P(B_i = 1)
    double rho_floor = 1.0;
    StoppingRule rule;
};

/// E[(1 + J) / (1 + B_1 + ... + B_J)] by weighting all 2^n outcomes. J scans from n
/// down to 1 and is 0 when the rule never fires.
inline double lemma1_exact(const BernoulliStoppingInstance& inst) {
    const auto n = static_cast<Index>(inst.rho.size());
    if (n > 16) throw ConfigError("exact enumeration supports n <= 16, got " + std::to_string(n));
    for (double r : inst.rho)
        if (!(r > 0.0 && r <= 1.0)) throw ConfigError("rho_i must lie in (0, 1]");
    const Index fixed = inst.rule.kind == StoppingRule::Kind::fixed ? std::min(inst.rule.fixed_j, n) : -1;

    std::vector<Index> prefix(static_cast<std::size_t>(n) + 1);
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double weight = 1.0;
        prefix[0] = 0;
        for (Index i = 0; i < n; ++i) {
            const bool one = (mask >> i) & 1u;
            const double r = inst.rho[static_cast<std::size_t>(i)];
            weight *= one ? r : 1.0 - r;
            prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + (one ? 1 : 0);
        }
        if (weight == 0.0) continue;
        const Index sn = prefix[static_cast<std::size_t>(n)];
        Index stop = 0;
        for (Index j = n; j >= 1; --j) {
            const Index sj = prefix[static_cast<std::size_t>(j)];
            const bool fire = fixed >= 0 ? j == fixed : inst.rule.stops(j, sj, sn - sj);
            if (fire) {
                stop = j;
                break;
            }
        }
        total += weight * static_cast<double>(1 + stop) /
                 static_cast<double>(1 + prefix[static_cast<std::size_t>(stop)]);
    }
    return total;
}

struct GramReport {
    double gram_diff = 0.0;
    double cross_diff = 0.0;
    double diff_diag = 0.0;
    double diff_sum = 0.0;

    double max() const { return std::max({gram_diff, cross_diff, diff_diag, diff_sum}); }
};

/// The four knockoff Gram residuals, computed entry by entry with explicit inner
/// products rather than matrix products.
inline GramReport gram_check(const MatrixXd& X, const MatrixXd& Xt, const VectorXd& s) {
    if (X.rows() != Xt.rows() || X.cols() != Xt.cols() || s.size() != X.cols())
        throw DimensionError("gram_check: inconsistent dimensions");
    const Index n = X.rows();
    const Index p = X.cols();
    GramReport r;
    for (Index j = 0; j < p; ++j) {
        for (Index k = 0; k < p; ++k) {
            double xx = 0.0, tt = 0.0, xt = 0.0, dd = 0.0, ds = 0.0;
            for (Index i = 0; i < n; ++i) {
                const double a = X(i, j), b = X(i, k), c = Xt(i, j), d = Xt(i, k);
                xx += a * b;
                tt += c * d;
                xt += a * d;
                dd += (a - c) * (b - d);
                ds += (a - c) * (b + d);
            }
            const double sjk = j == k ? s(j) : 0.0;
            r.gram_diff = std::max(r.gram_diff, std::abs(xx - tt));
            r.cross_diff = std::max(r.cross_diff, std::abs(xt - (xx - sjk)));
            r.diff_diag = std::max(r.diff_diag, std::abs(dd - 2.0 * sjk));
            r.diff_sum = std::max(r.diff_sum, std::abs(ds));
        }
    }
    return r;
}

inline GramReport gram_check(const KnockoffPair& pair) {
    return gram_check(pair.X.values(), pair.X_tilde.values(), pair.s);
}

/// Largest violation of M_{j,k} = M_{j,k+p} = M_{j+p,k} = M_{j+p,k+p} (j != k) and
/// M_{j,j} = M_{j+p,j+p} for M = [X Xt]' theta [X Xt].
inline double pairwise_exchangeability_gap(const MatrixXd& X, const MatrixXd& Xt, const MatrixXd& theta) {
    const Index p = X.cols();
    MatrixXd a(X.rows(), 2 * p);
    a << X, Xt;
    const MatrixXd m = a.transpose() * theta * a;
    double gap = 0.0;
    for (Index j = 0; j < p; ++j) {
        gap = std::max(gap, std::abs(m(j, j) - m(j + p, j + p)));
        for (Index k = 0; k < p; ++k) {
            if (j == k) continue;
            const double base = m(j, k);
            gap = std::max({gap, std::abs(base - m(j, k + p)), std::abs(base - m(j + p, k)),
                            std::abs(base - m(j + p, k + p))});
        }
    }
    return gap;
}

inline double scalar_lasso_oracle(const VectorXd& x, const VectorXd& y, double lambda) {
    const double z = x.dot(y);
    const double mag = std::max(std::abs(z) - lambda, 0.0);
    return z > 0.0 ? mag : (z < 0.0 ? -mag : 0.0);
}

/// Recompute W after swapping X_j and Xt_j for j in swap and compare with the
/// original W: entries in swap must flip sign, the rest must be unchanged.
///
/// For coef-diff the comparison is absolute with tolerance tol. For path statistics
/// an entry also passes when the two magnitudes are at most one grid step apart with
/// matching signs, or when one side is 0 (a tie that a one-step shift resolves).
inline bool swap_antisymmetry_check(const StatOptions& opt, const MatrixXd& X, const MatrixXd& Xt, const VectorXd& y,
                                    const VectorXd& s, const IndexList& swap, double tol) {
    const Index p = X.cols();
    MatrixXd a(X.rows(), 2 * p);
    a << X, Xt;
    MatrixXd b = a;
    std::vector<char> in(static_cast<std::size_t>(p), 0);
    for (Index j : swap) {
        in[static_cast<std::size_t>(j)] = 1;
        b.col(j) = a.col(j + p);
        b.col(j + p) = a.col(j);
    }
    const VectorXd w0 = compute_statistic(a, y, s, opt).w;
    const VectorXd w1 = compute_statistic(b, y, s, opt).w;
    const bool path = opt.rule == StatRule::lasso_entry || opt.rule == StatRule::sqrt_lasso_entry;
    const double step = std::pow(opt.path.lambda_min_ratio, -1.0 / (opt.path.grid_size - 1));
    for (Index j = 0; j < p; ++j) {
        const double expect = in[static_cast<std::size_t>(j)] ? -w0(j) : w0(j);
        const double got = w1(j);
        if (std::abs(got - expect) <= tol) continue;
        if (!path) return false;
        if (sign_of(got) != sign_of(expect) && got != 0.0 && expect != 0.0) return false;
        const double hi = std::max(std::abs(got), std::abs(expect));
        const double lo = std::min(std::abs(got), std::abs(expect));
        if (lo > 0.0 && hi / lo > step * (1.0 + 1e-9)) return false;
    }
    return true;
}

}  // namespace knockoff::oracle
