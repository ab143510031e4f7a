#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "knockoff/errors.hpp"
#include "knockoff/filter.hpp"
#include "knockoff/knockoffs.hpp"
#include "knockoff/model.hpp"
#include "knockoff/random.hpp"
#include "knockoff/screening.hpp"
#include "knockoff/solvers.hpp"

namespace knockoff {

enum class InferenceMode { split, recycle };

inline std::string to_string(InferenceMode m) { return m == InferenceMode::split ? "split" : "recycle"; }

inline InferenceMode parse_inference_mode(const std::string& s) {
    if (s == "split") return InferenceMode::split;
    if (s == "recycle") return InferenceMode::recycle;
    throw ConfigError("unknown mode '" + s + "' (expected split or recycle)");
}

struct PipelineConfig {
    double q = 0.2;
    Index n0 = 0;
    Index k_max = 0;  // 0: n1 / 4
    InferenceMode mode = InferenceMode::recycle;
    bool sign_restricted = true;
    StatRule statistic = StatRule::coef_diff;
    bool plus = true;
    bool rotate = false;
    Index prescreen_m = 0;  // 0: no marginal pre-screen
    double kappa = 0.7;
    PathConfig screen_path;
    PathConfig stat_path;
    SqrtLassoConfig sqrt;
    std::uint64_t seed = 0;

    void check(Index n, Index p) const {
        check_q(q);
        if (n0 < 1 || n0 >= n) throw ConfigError("n0 must satisfy 1 <= n0 < n");
        if (k_max < 0) throw ConfigError("k_max must be nonnegative");
        if (prescreen_m < 0 || prescreen_m > p) throw ConfigError("prescreen_m must lie in [0, p]");
        if (!(kappa >= 0.0)) throw ConfigError("kappa must be nonnegative");
        if (sign_restricted && statistic == StatRule::omp_entry)
            throw ConfigError("omp-entry does not support sign restrictions");
        screen_path.check();
        stat_path.check();
    }

    Index effective_k_max(Index n) const { return k_max > 0 ? k_max : std::max<Index>(1, (n - n0) / 4); }
};

struct ScreenedModelRef {
    IndexList s0;
    VectorXd beta_partial;  // empty unless filled in for evaluation
};

/// Everything downstream of the screen that scoring needs.
struct ScreenStage {
    SplitData split;
    ScreenResult screen;
    MatrixXd rotation;  // empty without rotation
    std::vector<std::string> warnings;

    /// Map an n-vector indexed by original rows to the part-1 rows used for inference.
    VectorXd part1_of(const VectorXd& full) const {
        if (rotation.size() > 0) return select_entries(rotation * full, split.rows1);
        return select_entries(full, split.rows1);
    }

    MatrixXd part1_columns() const { return select_columns(split.part1.X.values(), screen.s0); }
};

struct HighDimResult {
    SelectionResult selection;
    ScreenStage stage;
    StatVector w;  // over s0, in s0 order
    VectorXd s;
};

/// Rotation (optional), split, marginal pre-screen (optional) and Lasso screen on part 0.
/// s0 is truncated to floor(n1 / 2) entries when it is too large to build knockoffs.
inline ScreenStage screen_stage(const Design& X, const Response& y, const PipelineConfig& cfg) {
    check_pair(X, y);
    cfg.check(X.rows(), X.cols());
    ScreenStage st;
    if (cfg.rotate) {
        st.rotation = random_rotation(X.rows(), derive_seed(cfg.seed, {stream::rotation})).U;
        st.split = rotate_then_split(X, y, cfg.n0, st.rotation);
    } else {
        st.split = split_rows(X, y, cfg.n0, derive_seed(cfg.seed, {stream::split}));
    }
    const MatrixXd& x0 = st.split.part0.X.values();
    const VectorXd& y0 = st.split.part0.y.values();
    const Index k_max = cfg.effective_k_max(X.rows());

    if (cfg.prescreen_m > 0) {
        const IndexList pre = marginal_prescreen(x0, y0, cfg.prescreen_m);
        const ScreenResult inner = lasso_screen(select_columns(x0, pre), y0, k_max, cfg.screen_path);
        st.screen.k_max = k_max;
        for (Index c : inner.s0) {
            st.screen.s0.push_back(pre[static_cast<std::size_t>(c)]);
            st.screen.signs0[pre[static_cast<std::size_t>(c)]] = inner.signs0.at(c);
        }
    } else {
        st.screen = lasso_screen(x0, y0, k_max, cfg.screen_path);
    }

    const auto cap = static_cast<std::size_t>(st.split.n1 / 2);
    if (st.screen.s0.size() > cap) {
        st.warnings.push_back("screened set of size " + std::to_string(st.screen.s0.size()) + " truncated to " +
                              std::to_string(cap) + " so knockoffs can be built on part 1");
        for (std::size_t k = cap; k < st.screen.s0.size(); ++k) st.screen.signs0.erase(st.screen.s0[k]);
        st.screen.s0.resize(cap);
    }
    if (st.screen.s0.empty()) st.warnings.push_back("screening selected no features");
    return st;
}

/// Screen on part 0, build knockoffs for the screened part-1 columns and run the
/// filter on either part 1 alone (split) or the stacked data (recycle).
inline HighDimResult knockoff_filter_highdim_run(const Design& X, const Response& y, const PipelineConfig& cfg) {
    HighDimResult res;
    res.stage = screen_stage(X, y, cfg);
    res.selection.q = cfg.q;
    res.selection.plus = cfg.plus;
    const ScreenStage& st = res.stage;
    const IndexList& s0 = st.screen.s0;
    const Index m = static_cast<Index>(s0.size());
    if (m == 0) return res;

    const Index n0 = st.split.n0;
    const Index n1 = st.split.n1;
    MatrixXd x1 = select_columns(st.split.part1.X.values(), s0);
    const Design x1n = normalize_columns(Design(x1));
    const VectorXd& scale = x1n.column_norms();
    const VectorXd s = equicorrelated_s(x1n.values().transpose() * x1n.values());
    const KnockoffPair pair = construct_knockoffs(x1n, s, derive_seed(cfg.seed, {stream::knockoff}));

    MatrixXd aug;
    VectorXd yy;
    if (cfg.mode == InferenceMode::split) {
        aug = pair.augmented();
        yy = st.split.part1.y.values();
    } else {
        MatrixXd x0 = select_columns(st.split.part0.X.values(), s0);
        for (Index j = 0; j < m; ++j) x0.col(j) /= scale(j);
        aug.resize(n0 + n1, 2 * m);
        aug.topRows(n0) << x0, x0;
        aug.bottomRows(n1) = pair.augmented();
        yy.resize(n0 + n1);
        yy << st.split.part0.y.values(), st.split.part1.y.values();
    }

    SignConstraints constraints;
    if (cfg.sign_restricted) {
        constraints.required_sign.assign(static_cast<std::size_t>(2 * m), 0);
        for (Index j = 0; j < m; ++j) {
            const int sg = st.screen.signs0.at(s0[static_cast<std::size_t>(j)]);
            constraints.required_sign[static_cast<std::size_t>(j)] = sg;
            constraints.required_sign[static_cast<std::size_t>(j + m)] = sg;
        }
    }

    StatOptions opt;
    opt.rule = cfg.statistic;
    opt.kappa = cfg.kappa;
    opt.path = cfg.stat_path;
    opt.sqrt = cfg.sqrt;
    opt.seed = derive_seed(cfg.seed, {stream::sqrt_lambda});
    res.w = compute_statistic(aug, yy, s, opt, constraints);
    res.s = s;

    const double t = knockoff_threshold(res.w, cfg.q, cfg.plus);
    const IndexList local = select(res.w, t);
    res.selection.threshold = t;
    const auto local_signs = estimate_signs(aug.leftCols(m), aug.rightCols(m), yy, local);
    for (Index j : local) {
        const Index orig = s0[static_cast<std::size_t>(j)];
        res.selection.selected.push_back(orig);
        res.selection.signs[orig] = local_signs.at(j);
    }
    std::sort(res.selection.selected.begin(), res.selection.selected.end());
    return res;
}

inline std::pair<SelectionResult, ScreenResult> knockoff_filter_highdim(const Design& X, const Response& y,
                                                                        const PipelineConfig& cfg) {
    HighDimResult r = knockoff_filter_highdim_run(X, y, cfg);
    return {std::move(r.selection), std::move(r.stage.screen)};
}

// ---------------------------------------------------------------------------
// Low-dimensional filter

struct LowDimResult {
    SelectionResult selection;
    StatVector w;
    VectorXd s;
};

inline LowDimResult knockoff_filter_lowdim_run(const Design& X, const Response& y, double q, const StatOptions& opt,
                                               bool plus, std::uint64_t seed) {
    check_pair(X, y);
    check_q(q);
    const Design xn = normalize_columns(X);
    const VectorXd s = equicorrelated_s(xn.values().transpose() * xn.values());
    const KnockoffPair pair = construct_knockoffs(xn, s, derive_seed(seed, {stream::knockoff}));
    StatOptions o = opt;
    o.seed = derive_seed(seed, {stream::sqrt_lambda});
    LowDimResult res;
    res.w = compute_statistic(pair, y, o);
    res.s = s;
    res.selection.q = q;
    res.selection.plus = plus;
    res.selection.threshold = knockoff_threshold(res.w, q, plus);
    res.selection.selected = select(res.w, res.selection.threshold);
    res.selection.signs = estimate_signs(pair, y, res.selection.selected);
    return res;
}

inline SelectionResult knockoff_filter_lowdim(const Design& X, const Response& y, double q, StatRule statistic,
                                              bool plus, std::uint64_t seed) {
    StatOptions opt;
    opt.rule = statistic;
    return knockoff_filter_lowdim_run(X, y, q, opt, plus, seed).selection;
}

// ---------------------------------------------------------------------------
// Evaluation helpers and the BH baseline

inline VectorXd partial_coefficients(const MatrixXd& X1_s0, const VectorXd& mu1) {
    return least_squares(X1_s0, mu1);
}

inline VectorXd partial_coefficients(const Design& X1_s0, const Response& mu1) {
    return partial_coefficients(X1_s0.values(), mu1.values());
}

/// Benjamini-Hochberg step-up: reject the k* smallest p-values, k* = max{k : p_(k) <= kq/m}.
inline IndexList bh_stepup(const std::vector<double>& pvalues, double q) {
    check_q(q);
    for (double p : pvalues)
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p-values must lie in [0, 1]");
    const std::size_t m = pvalues.size();
    IndexList order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = static_cast<Index>(i);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return pvalues[static_cast<std::size_t>(a)] < pvalues[static_cast<std::size_t>(b)];
    });
    std::size_t kstar = 0;
    for (std::size_t k = 1; k <= m; ++k)
        if (pvalues[static_cast<std::size_t>(order[k - 1])] <= static_cast<double>(k) * q / static_cast<double>(m))
            kstar = k;
    IndexList out(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kstar));
    std::sort(out.begin(), out.end());
    return out;
}

/// P(T >= t) for direction +1, P(T <= t) for -1, T ~ t_df, t = estimate / se. A zero
/// standard error gives 0 or 1 by the sign of the estimate (0.5 when it is 0 too).
inline double one_sided_pvalue(double estimate, double se, Index df, int direction) {
    if (df <= 0) throw ConfigError("t test needs positive degrees of freedom");
    if (!(se > 0.0)) {
        if (estimate == 0.0) return 0.5;
        return sign_of(estimate) == direction ? 0.0 : 1.0;
    }
    const boost::math::students_t dist(static_cast<double>(df));
    const double t = estimate / se;
    return direction > 0 ? boost::math::cdf(boost::math::complement(dist, t)) : boost::math::cdf(dist, t);
}

struct BaselineResult {
    SelectionResult selection;
    ScreenStage stage;
    std::vector<double> pvalues;  // in s0 order
};

/// Least squares of y1 on the screened part-1 columns, one-sided t-tests in the
/// direction of the screening sign, then BH. The SelectionResult threshold holds the
/// p-value cutoff k* q / m (+inf when nothing is rejected).
inline BaselineResult bh_baseline_run(const Design& X, const Response& y, const PipelineConfig& cfg) {
    BaselineResult res;
    res.stage = screen_stage(X, y, cfg);
    res.selection.q = cfg.q;
    const ScreenStage& st = res.stage;
    const IndexList& s0 = st.screen.s0;
    const auto m = static_cast<Index>(s0.size());
    if (m == 0) return res;
    const Index df = st.split.n1 - m;
    if (df <= 0) throw ConfigError("BH baseline needs n1 > |s0|");

    const MatrixXd x1 = st.part1_columns();
    const VectorXd& y1 = st.split.part1.y.values();
    const VectorXd b = least_squares(x1, y1);
    const double sigma2 = (y1 - x1 * b).squaredNorm() / static_cast<double>(df);
    Eigen::LLT<MatrixXd> llt(x1.transpose() * x1);
    const MatrixXd inv = llt.solve(MatrixXd::Identity(m, m));
    for (Index j = 0; j < m; ++j) {
        const double se = std::sqrt(sigma2 * inv(j, j));
        const int sg = st.screen.signs0.at(s0[static_cast<std::size_t>(j)]);
        res.pvalues.push_back(one_sided_pvalue(b(j), se, df, sg));
    }
    const IndexList rejected = bh_stepup(res.pvalues, cfg.q);
    if (!rejected.empty())
        res.selection.threshold = static_cast<double>(rejected.size()) * cfg.q / static_cast<double>(m);
    for (Index j : rejected) {
        const Index orig = s0[static_cast<std::size_t>(j)];
        res.selection.selected.push_back(orig);
        res.selection.signs[orig] = st.screen.signs0.at(orig);
    }
    std::sort(res.selection.selected.begin(), res.selection.selected.end());
    return res;
}

inline std::pair<SelectionResult, ScreenResult> bh_baseline(const Design& X, const Response& y,
                                                            const PipelineConfig& cfg) {
    BaselineResult r = bh_baseline_run(X, y, cfg);
    return {std::move(r.selection), std::move(r.stage.screen)};
}

}  // namespace knockoff
