#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "knockoff/errors.hpp"
#include "knockoff/knockoffs.hpp"
#include "knockoff/model.hpp"
#include "knockoff/random.hpp"
#include "knockoff/solvers.hpp"

namespace knockoff {

enum class StatRule { lasso_entry, coef_diff, omp_entry, sqrt_lasso_entry };

inline std::string to_string(StatRule r) {
    switch (r) {
        case StatRule::lasso_entry: return "lasso-entry";
        case StatRule::coef_diff: return "coef-diff";
        case StatRule::omp_entry: return "omp-entry";
        case StatRule::sqrt_lasso_entry: return "sqrt-lasso-entry";
    }
    return "unknown";
}

inline StatRule parse_stat_rule(const std::string& s) {
    if (s == "lasso-entry") return StatRule::lasso_entry;
    if (s == "coef-diff") return StatRule::coef_diff;
    if (s == "omp-entry") return StatRule::omp_entry;
    if (s == "sqrt-lasso-entry") return StatRule::sqrt_lasso_entry;
    throw ConfigError("unknown statistic '" + s + "' (expected lasso-entry, coef-diff, omp-entry or sqrt-lasso-entry)");
}

struct StatVector {
    VectorXd w;
    StatRule rule = StatRule::lasso_entry;

    Index size() const noexcept { return w.size(); }
};

struct SelectionResult {
    IndexList selected;
    std::map<Index, int> signs;
    double threshold = std::numeric_limits<double>::infinity();
    bool plus = false;
    double q = 0.0;
};

inline void check_q(double q) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("q must lie in (0, 1), got " + std::to_string(q));
}

namespace detail {

inline Index half_width(Index coords) {
    if (coords % 2 != 0)
        throw PairingError("augmented statistic input has an odd number of coordinates (" + std::to_string(coords) + ")");
    return coords / 2;
}

// Signed pair score: +a when the feature scores strictly higher, -b when the knockoff
// does, 0 on ties.
inline double pair_score(double feature, double knock) {
    if (feature > knock) return feature;
    if (knock > feature) return -knock;
    return 0.0;
}

}  // namespace detail

/// W_j = max(entry(j), entry(j+m)), signed by which of the pair enters first.
inline StatVector stat_lasso_entry(const EntryPath& path) {
    const Index m = detail::half_width(path.size());
    StatVector out{VectorXd::Zero(m), StatRule::lasso_entry};
    for (Index j = 0; j < m; ++j) out.w(j) = detail::pair_score(path.entry_lambda(j), path.entry_lambda(j + m));
    return out;
}

/// Entry penalty rescaled by the residual norm at that grid point.
inline StatVector stat_sqrt_lasso_entry(const EntryPath& path) {
    const Index m = detail::half_width(path.size());
    auto scaled = [&](Index c) {
        const int step = path.entry_step[static_cast<std::size_t>(c)];
        if (step < 0) return 0.0;
        const double r = path.residual_norms(step);
        return r > 0.0 ? path.entry_lambda(c) / r : std::numeric_limits<double>::max();
    };
    StatVector out{VectorXd::Zero(m), StatRule::sqrt_lasso_entry};
    for (Index j = 0; j < m; ++j) out.w(j) = detail::pair_score(scaled(j), scaled(j + m));
    return out;
}

inline StatVector stat_coef_diff(const VectorXd& beta_hat, const VectorXd& beta_tilde) {
    if (beta_hat.size() != beta_tilde.size())
        throw DimensionError("coefficient vectors have different lengths");
    return {beta_hat.cwiseAbs() - beta_tilde.cwiseAbs(), StatRule::coef_diff};
}

/// OMP order over 2m columns: the pair's first arrival at step t (1-based) scores K + 1 - t.
inline StatVector stat_omp_entry(const IndexList& order, Index coords) {
    const Index m = detail::half_width(coords);
    const auto k = static_cast<double>(order.size());
    VectorXd rank = VectorXd::Zero(coords);
    for (std::size_t t = 0; t < order.size(); ++t) rank(order[t]) = k - static_cast<double>(t);
    StatVector out{VectorXd::Zero(m), StatRule::omp_entry};
    for (Index j = 0; j < m; ++j) out.w(j) = detail::pair_score(rank(j), rank(j + m));
    return out;
}

struct StatOptions {
    StatRule rule = StatRule::lasso_entry;
    double kappa = 0.7;
    PathConfig path;
    SqrtLassoConfig sqrt;
    std::uint64_t seed = 0;  // square-root Lasso penalty draws
};

/// Compute W on an augmented design [X Xt] (n x 2m). Coordinates with s_j below kZeroS
/// get W_j = 0.
inline StatVector compute_statistic(const MatrixXd& augmented, const VectorXd& y, const VectorXd& s,
                                    const StatOptions& opt, const SignConstraints& constraints = {}) {
    const Index m = detail::half_width(augmented.cols());
    if (s.size() != m) throw DimensionError("s length does not match the augmented design");
    if (augmented.rows() != y.size()) throw DimensionError("design rows and response length differ");
    StatVector w;
    switch (opt.rule) {
        case StatRule::lasso_entry:
            w = stat_lasso_entry(lasso_path(augmented, y, opt.path, constraints));
            break;
        case StatRule::sqrt_lasso_entry:
            w = stat_sqrt_lasso_entry(lasso_path(augmented, y, opt.path, constraints));
            break;
        case StatRule::coef_diff: {
            const VectorXd b = sqrt_lasso_fit(augmented, y, opt.kappa, constraints, opt.seed, opt.sqrt).coef;
            w = stat_coef_diff(b.head(m), b.tail(m));
            break;
        }
        case StatRule::omp_entry: {
            if (!constraints.empty())
                throw ConfigError("omp-entry does not support sign restrictions");
            const Index k = std::min<Index>(2 * m, augmented.rows());
            w = stat_omp_entry(omp(augmented, y, k, true), 2 * m);
            break;
        }
    }
    for (Index j = 0; j < m; ++j)
        if (s(j) < kZeroS) w.w(j) = 0.0;
    return w;
}

inline StatVector compute_statistic(const KnockoffPair& pair, const Response& y, const StatOptions& opt,
                                    const SignConstraints& constraints = {}) {
    check_pair(pair.X, y);
    return compute_statistic(pair.augmented(), y.values(), pair.s, opt, constraints);
}

/// Smallest candidate t in {|W_j| > 0} whose estimated FDP is at most q; +inf if none.
inline double knockoff_threshold(const StatVector& w, double q, bool plus) {
    check_q(q);
    std::vector<double> cands;
    for (Index j = 0; j < w.size(); ++j)
        if (w.w(j) != 0.0) cands.push_back(std::abs(w.w(j)));
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    for (double t : cands) {
        Index neg = 0;
        Index pos = 0;
        for (Index j = 0; j < w.size(); ++j) {
            if (w.w(j) <= -t) ++neg;
            if (w.w(j) >= t) ++pos;
        }
        const double num = static_cast<double>(neg) + (plus ? 1.0 : 0.0);
        if (pos > 0 && num / static_cast<double>(pos) <= q) return t;
    }
    return std::numeric_limits<double>::infinity();
}

inline IndexList select(const StatVector& w, double threshold) {
    IndexList out;
    if (std::isinf(threshold)) return out;
    for (Index j = 0; j < w.size(); ++j)
        if (w.w(j) >= threshold) out.push_back(j);
    return out;
}

/// sign((X_j - Xt_j)' y) for each selected j; an exact zero counts as +1.
inline std::map<Index, int> estimate_signs(const MatrixXd& X, const MatrixXd& X_tilde, const VectorXd& y,
                                           const IndexList& selected) {
    std::map<Index, int> out;
    for (Index j : selected) {
        const double v = (X.col(j) - X_tilde.col(j)).dot(y);
        out[j] = v < 0.0 ? -1 : 1;
    }
    return out;
}

inline std::map<Index, int> estimate_signs(const KnockoffPair& pair, const Response& y, const IndexList& selected) {
    check_pair(pair.X, y);
    return estimate_signs(pair.X.values(), pair.X_tilde.values(), y.values(), selected);
}

}  // namespace knockoff
