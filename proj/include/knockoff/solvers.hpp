#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "knockoff/errors.hpp"
#include "knockoff/model.hpp"
#include "knockoff/random.hpp"

namespace knockoff {

/// Per-coordinate sign restriction; 0 leaves a coordinate free. An empty list means
/// no restriction at all.
struct SignConstraints {
    SignList required_sign;

    bool empty() const noexcept { return required_sign.empty(); }
    int at(Index j) const noexcept { return empty() ? 0 : required_sign[static_cast<std::size_t>(j)]; }

    void check(Index m) const {
        if (empty()) return;
        if (static_cast<Index>(required_sign.size()) != m)
            throw DimensionError("sign constraints have length " + std::to_string(required_sign.size()) +
                                 ", design has " + std::to_string(m) + " columns");
        for (int s : required_sign)
            if (s < -1 || s > 1) throw ConfigError("required signs must be -1, 0 or +1");
    }
};

struct LassoConfig {
    double lambda = 0.0;
    int max_iters = 100000;  // coordinate-descent sweeps
    double tol = 1e-10;      // on the largest coefficient change in a sweep

    void check() const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and nonnegative");
        if (!(tol > 0.0)) throw ConfigError("lasso tol must be positive");
        if (max_iters < 1) throw ConfigError("lasso max_iters must be positive");
    }
};

struct LassoFit {
    VectorXd coef;
    int sweeps = 0;
    double max_change = 0.0;
    std::vector<double> objective;  // after every sweep, only when requested
};

inline double soft_threshold(double z, double lambda) noexcept {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

inline double lasso_objective(const MatrixXd& X, const VectorXd& y, const VectorXd& b, double lambda) {
    return 0.5 * (y - X * b).squaredNorm() + lambda * b.lpNorm<1>();
}

/// Cyclic coordinate descent for 1/2 ||y - Xb||^2 + lambda ||b||_1 with optional sign
/// restrictions. Keeps its coefficients between solves so a decreasing sequence of
/// lambdas is warm started.
class CoordinateDescent {
public:
    CoordinateDescent(const MatrixXd& X, const VectorXd& y, SignConstraints constraints = {})
        : X_(X), y_(y), constraints_(std::move(constraints)) {
        if (X_.rows() != y_.size()) throw DimensionError("design rows and response length differ");
        constraints_.check(X_.cols());
        col_sq_ = X_.colwise().squaredNorm().transpose();
        coef_ = VectorXd::Zero(X_.cols());
        residual_ = y_;
        active_.assign(static_cast<std::size_t>(X_.cols()), 0);
    }

    void set_coef(const VectorXd& b) {
        if (b.size() != X_.cols()) throw DimensionError("warm start has the wrong length");
        coef_ = b;
        for (Index j = 0; j < coef_.size(); ++j) coef_(j) = project(j, coef_(j));
        residual_ = y_ - X_ * coef_;
    }

    const VectorXd& coef() const noexcept { return coef_; }
    const VectorXd& residual() const noexcept { return residual_; }

    LassoFit solve(const LassoConfig& cfg, bool record_objective = false) {
        cfg.check();
        residual_ = y_ - X_ * coef_;
        LassoFit fit;
        const Index m = X_.cols();
        std::vector<Index> active;
        auto record = [&] {
            if (record_objective)
                fit.objective.push_back(0.5 * residual_.squaredNorm() + cfg.lambda * coef_.lpNorm<1>());
        };
        if (coef_.isZero(0.0) && zero_is_optimal(cfg.lambda)) {
            record();
            fit.coef = coef_;
            return fit;
        }
        while (true) {
            double change = 0.0;
            for (Index j = 0; j < m; ++j) change = std::max(change, update(j, cfg.lambda));
            ++fit.sweeps;
            record();
            fit.max_change = change;
            if (change < cfg.tol) break;
            if (fit.sweeps >= cfg.max_iters)
                throw ConvergenceError("lasso did not converge in " + std::to_string(cfg.max_iters) + " sweeps", change);

            active.clear();
            for (Index j = 0; j < m; ++j)
                if (coef_(j) != 0.0) active.push_back(j);
            int since_polish = 0;
            while (true) {
                double inner = 0.0;
                for (Index j : active) inner = std::max(inner, update(j, cfg.lambda));
                ++fit.sweeps;
                record();
                fit.max_change = inner;
                if (inner < cfg.tol) break;
                if (++since_polish == kPolishEvery) {
                    since_polish = 0;
                    if (polish(active, cfg.lambda)) {
                        record();
                        break;
                    }
                }
                if (fit.sweeps >= cfg.max_iters)
                    throw ConvergenceError("lasso did not converge in " + std::to_string(cfg.max_iters) + " sweeps",
                                           inner);
            }
        }
        fit.coef = coef_;
        return fit;
    }

private:
    static constexpr int kPolishEvery = 25;

    bool zero_is_optimal(double lambda) const {
        const VectorXd g = X_.transpose() * y_;
        for (Index j = 0; j < g.size(); ++j) {
            const int req = constraints_.at(j);
            const double push = req == 0 ? std::abs(g(j)) : req * g(j);
            if (push > lambda) return false;
        }
        return true;
    }

    // Active-set step: solve the stationarity equations on the nonzero coordinates with
    // their current signs, moving only as far as the first sign change and dropping
    // that coordinate, until the solution keeps every sign.
    bool polish(std::vector<Index> active, double lambda) {
        const VectorXd start = coef_;
        const double before = 0.5 * residual_.squaredNorm() + lambda * coef_.lpNorm<1>();
        bool moved = false;
        while (!active.empty()) {
            const auto k = static_cast<Index>(active.size());
            MatrixXd xa(X_.rows(), k);
            VectorXd rhs(k), cur(k);
            for (Index a = 0; a < k; ++a) {
                const Index j = active[static_cast<std::size_t>(a)];
                xa.col(a) = X_.col(j);
                cur(a) = coef_(j);
                rhs(a) = X_.col(j).dot(y_) - lambda * (cur(a) > 0.0 ? 1.0 : -1.0);
            }
            const MatrixXd gram = xa.transpose() * xa;
            Eigen::LLT<MatrixXd> llt(gram);
            if (llt.info() != Eigen::Success) {
                // Rank deficient: X_A v = 0 for some v, so the fit is flat along v and only
                // the l1 term moves. Slide along v until a coordinate reaches zero.
                Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
                if (es.info() != Eigen::Success) break;
                const VectorXd& ev = es.eigenvalues();
                if (ev(0) > 1e-10 * std::max(ev(k - 1), 1.0)) break;
                VectorXd v = es.eigenvectors().col(0);
                double slope = 0.0;
                for (Index a = 0; a < k; ++a) slope += (cur(a) > 0.0 ? 1.0 : -1.0) * v(a);
                if (slope > 0.0) v = -v;
                double t = std::numeric_limits<double>::infinity();
                Index hit = -1;
                for (Index a = 0; a < k; ++a)
                    if (cur(a) * v(a) < 0.0 && -cur(a) / v(a) < t) {
                        t = -cur(a) / v(a);
                        hit = a;
                    }
                if (hit < 0 || slope == 0.0) break;
                for (Index a = 0; a < k; ++a)
                    coef_(active[static_cast<std::size_t>(a)]) = a == hit ? 0.0 : cur(a) + t * v(a);
                moved = true;
                active.erase(active.begin() + hit);
                continue;
            }
            const VectorXd b = llt.solve(rhs);
            if (!b.allFinite()) break;
            double t = 1.0;
            Index hit = -1;
            for (Index a = 0; a < k; ++a)
                if (b(a) * cur(a) <= 0.0) {
                    const double ta = cur(a) / (cur(a) - b(a));
                    if (ta < t) {
                        t = ta;
                        hit = a;
                    }
                }
            const VectorXd next = cur + t * (b - cur);
            for (Index a = 0; a < k; ++a) coef_(active[static_cast<std::size_t>(a)]) = a == hit ? 0.0 : next(a);
            moved = true;
            if (hit < 0) break;
            active.erase(active.begin() + hit);
        }
        if (!moved) return false;
        residual_ = y_ - X_ * coef_;
        if (0.5 * residual_.squaredNorm() + lambda * coef_.lpNorm<1>() > before) {
            coef_ = start;
            residual_ = y_ - X_ * coef_;
            return false;
        }
        return true;
    }

    double project(Index j, double b) const noexcept {
        const int req = constraints_.at(j);
        if ((req > 0 && b < 0.0) || (req < 0 && b > 0.0)) return 0.0;
        return b;
    }

    double update(Index j, double lambda) {
        const double nj = col_sq_(j);
        if (nj == 0.0) return 0.0;
        const double old = coef_(j);
        const double z = X_.col(j).dot(residual_) + nj * old;
        const double fresh = project(j, soft_threshold(z, lambda) / nj);
        if (fresh == old) return 0.0;
        residual_.noalias() -= (fresh - old) * X_.col(j);
        coef_(j) = fresh;
        return std::abs(fresh - old);
    }

    const MatrixXd& X_;
    const VectorXd& y_;
    SignConstraints constraints_;
    VectorXd col_sq_;
    VectorXd coef_;
    VectorXd residual_;
    std::vector<char> active_;
};

inline LassoFit lasso_fit(const MatrixXd& X, const VectorXd& y, const LassoConfig& cfg,
                          const SignConstraints& constraints = {}, bool record_objective = false) {
    CoordinateDescent cd(X, y, constraints);
    return cd.solve(cfg, record_objective);
}

inline VectorXd lasso(const Design& X, const Response& y, const LassoConfig& cfg,
                      const SignConstraints& constraints = {}) {
    check_pair(X, y);
    return lasso_fit(X.values(), y.values(), cfg, constraints).coef;
}

// ---------------------------------------------------------------------------
// Lasso entry path

struct PathConfig {
    int grid_size = 200;
    double lambda_min_ratio = 1e-3;
    /// Stop after the first grid point at which at least this many coordinates have
    /// entered; 0 runs the whole grid. Entries already recorded are unaffected.
    Index max_entered = 0;
    double tol = 1e-10;
    int max_iters = 100000;

    void check() const {
        if (grid_size < 2) throw ConfigError("grid_size must be at least 2");
        if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
            throw ConfigError("lambda_min_ratio must lie in (0, 1)");
        if (max_entered < 0) throw ConfigError("max_entered must be nonnegative");
    }
};

/// First grid penalty at which each coordinate becomes nonzero along a warm-started
/// geometric lambda grid.
struct EntryPath {
    VectorXd entry_lambda;  // 0 when never active on the grid
    SignList entry_sign;    // sign at first entry, 0 when never active
    IndexList entry_order;  // entered coordinates, earliest first
    std::vector<int> entry_step;
    VectorXd entry_abs_coef;
    VectorXd lambdas;          // grid points actually solved
    VectorXd residual_norms;   // ||y - Xb(lambda)|| at each solved grid point

    Index size() const noexcept { return entry_lambda.size(); }
};

inline VectorXd lambda_grid(double lambda_max, int grid_size, double lambda_min_ratio) {
    VectorXd grid(grid_size);
    for (int k = 0; k < grid_size; ++k)
        grid(k) = lambda_max * std::pow(lambda_min_ratio, static_cast<double>(k) / (grid_size - 1));
    return grid;
}

inline EntryPath lasso_path(const MatrixXd& X, const VectorXd& y, const PathConfig& cfg,
                            const SignConstraints& constraints = {}) {
    cfg.check();
    const Index m = X.cols();
    EntryPath path;
    path.entry_lambda = VectorXd::Zero(m);
    path.entry_sign.assign(static_cast<std::size_t>(m), 0);
    path.entry_step.assign(static_cast<std::size_t>(m), -1);
    path.entry_abs_coef = VectorXd::Zero(m);

    CoordinateDescent cd(X, y, constraints);
    const double lambda_max = (X.transpose() * y).cwiseAbs().maxCoeff();
    if (!(lambda_max > 0.0)) {
        path.lambdas = VectorXd();
        path.residual_norms = VectorXd();
        return path;
    }
    const VectorXd grid = lambda_grid(lambda_max, cfg.grid_size, cfg.lambda_min_ratio);
    std::vector<double> solved;
    std::vector<double> rnorms;
    Index entered = 0;
    LassoConfig lc;
    lc.tol = cfg.tol;
    lc.max_iters = cfg.max_iters;
    for (int k = 0; k < cfg.grid_size; ++k) {
        lc.lambda = grid(k);
        cd.solve(lc);
        solved.push_back(grid(k));
        rnorms.push_back(cd.residual().norm());
        const VectorXd& b = cd.coef();
        for (Index j = 0; j < m; ++j) {
            if (b(j) != 0.0 && path.entry_step[static_cast<std::size_t>(j)] < 0) {
                path.entry_step[static_cast<std::size_t>(j)] = k;
                path.entry_lambda(j) = grid(k);
                path.entry_sign[static_cast<std::size_t>(j)] = sign_of(b(j));
                path.entry_abs_coef(j) = std::abs(b(j));
                ++entered;
            }
        }
        if (cfg.max_entered > 0 && entered >= cfg.max_entered) break;
    }
    path.lambdas = Eigen::Map<const VectorXd>(solved.data(), static_cast<Index>(solved.size()));
    path.residual_norms = Eigen::Map<const VectorXd>(rnorms.data(), static_cast<Index>(rnorms.size()));

    for (Index j = 0; j < m; ++j)
        if (path.entry_step[static_cast<std::size_t>(j)] >= 0) path.entry_order.push_back(j);
    // Same grid point: larger coefficient first, then lower index.
    std::stable_sort(path.entry_order.begin(), path.entry_order.end(), [&](Index a, Index b) {
        const int sa = path.entry_step[static_cast<std::size_t>(a)];
        const int sb = path.entry_step[static_cast<std::size_t>(b)];
        if (sa != sb) return sa < sb;
        if (path.entry_abs_coef(a) != path.entry_abs_coef(b)) return path.entry_abs_coef(a) > path.entry_abs_coef(b);
        return a < b;
    });
    return path;
}

inline EntryPath lasso_path(const Design& X, const Response& y, int grid_size, double lambda_min_ratio,
                            const SignConstraints& constraints = {}) {
    check_pair(X, y);
    PathConfig cfg;
    cfg.grid_size = grid_size;
    cfg.lambda_min_ratio = lambda_min_ratio;
    return lasso_path(X.values(), y.values(), cfg, constraints);
}

// ---------------------------------------------------------------------------
// Square-root Lasso

enum class SqrtLambdaMode { mean, quantile95 };

/// kappa times the Monte Carlo mean (or 95th percentile) of ||X'g||_inf / ||g||_2 over
/// standard Gaussian n-vectors g.
///
/// For m <= n the draw is evaluated as (X'X)^{1/2} g[0:m]: with X = U S V' the pair
/// (X'g, ||g||) has the same law as (V S V' g[0:m], ||g||), so the estimate depends on
/// X only through X'X, singular or not.
inline double sqrt_lasso_lambda(const MatrixXd& X, double kappa, int mc_reps, std::uint64_t seed,
                                SqrtLambdaMode mode = SqrtLambdaMode::mean) {
    if (X.rows() < 1 || X.cols() < 1) throw DimensionError("empty design");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be finite and nonnegative");
    if (mc_reps < 100) throw ConfigError("mc_reps must be at least 100");
    if (kappa == 0.0) return 0.0;

    const Index n = X.rows();
    const Index m = X.cols();
    MatrixXd root;
    const bool via_gram = m <= n;
    if (via_gram) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(X.transpose() * X);
        if (eig.info() != Eigen::Success) throw DegenerateInputError("eigendecomposition of the Gram matrix failed");
        root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
               eig.eigenvectors().transpose();
    }

    Rng rng(seed);
    std::vector<double> ratios(static_cast<std::size_t>(mc_reps));
    for (int r = 0; r < mc_reps; ++r) {
        const VectorXd g = gaussian_vector(n, rng);
        const double proj = via_gram ? (root * g.head(m)).cwiseAbs().maxCoeff()
                                     : (X.transpose() * g).cwiseAbs().maxCoeff();
        ratios[static_cast<std::size_t>(r)] = proj / g.norm();
    }
    double stat = 0.0;
    if (mode == SqrtLambdaMode::mean) {
        for (double v : ratios) stat += v;
        stat /= mc_reps;
    } else {
        const auto k = static_cast<std::size_t>(std::ceil(0.95 * mc_reps)) - 1;
        std::nth_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(k), ratios.end());
        stat = ratios[k];
    }
    return kappa * stat;
}

struct SqrtLassoConfig {
    int mc_reps = 500;
    SqrtLambdaMode lambda_mode = SqrtLambdaMode::mean;
    double rel_tol = 1e-6;  // on the effective Lasso penalty between outer iterations
    int max_outer = 1000;
    double inner_tol = 1e-11;
    int inner_max_iters = 100000;
};

struct SqrtLassoFit {
    VectorXd coef;
    double lambda = 0.0;          // square-root Lasso penalty
    double residual_norm = 0.0;   // ||y - X coef||
    int outer_iterations = 0;
};

/// Minimize ||y - Xb||_2 + lambda ||b||_1 for a given lambda by alternating between a
/// Lasso solve at penalty lambda * sigma and sigma = ||y - Xb||.
inline SqrtLassoFit sqrt_lasso_at(const MatrixXd& X, const VectorXd& y, double lambda,
                                  const SignConstraints& constraints = {}, const SqrtLassoConfig& cfg = {}) {
    if (X.rows() != y.size()) throw DimensionError("design rows and response length differ");
    SqrtLassoFit fit;
    fit.lambda = lambda;
    const double ynorm = y.norm();
    if (ynorm == 0.0) {
        fit.coef = VectorXd::Zero(X.cols());
        return fit;
    }
    CoordinateDescent cd(X, y, constraints);
    LassoConfig lc;
    lc.tol = cfg.inner_tol;
    lc.max_iters = cfg.inner_max_iters;
    double sigma = ynorm;
    double last_change = 0.0;
    for (int it = 1; it <= cfg.max_outer; ++it) {
        const double penalty = lambda * sigma;
        lc.lambda = penalty;
        cd.solve(lc);
        const double fresh = cd.residual().norm();
        if (fresh <= 1e-12 * ynorm)
            throw DegenerateFitError("square-root Lasso reached a zero residual; the objective is not smooth there");
        fit.outer_iterations = it;
        last_change = penalty > 0.0 ? std::abs(lambda * fresh - penalty) / penalty : 0.0;
        sigma = fresh;
        if (last_change < cfg.rel_tol) {
            fit.coef = cd.coef();
            fit.residual_norm = fresh;
            return fit;
        }
    }
    throw ConvergenceError("square-root Lasso reweighting did not converge", last_change);
}

inline SqrtLassoFit sqrt_lasso_fit(const MatrixXd& X, const VectorXd& y, double kappa,
                                   const SignConstraints& constraints, std::uint64_t seed,
                                   const SqrtLassoConfig& cfg = {}) {
    const double lambda = sqrt_lasso_lambda(X, kappa, cfg.mc_reps, seed, cfg.lambda_mode);
    return sqrt_lasso_at(X, y, lambda, constraints, cfg);
}

inline VectorXd sqrt_lasso(const Design& X, const Response& y, double kappa, const SignConstraints& constraints,
                           std::uint64_t seed, const SqrtLassoConfig& cfg = {}) {
    check_pair(X, y);
    return sqrt_lasso_fit(X.values(), y.values(), kappa, constraints, seed, cfg).coef;
}

// ---------------------------------------------------------------------------
// Least squares and OMP

inline VectorXd least_squares(const MatrixXd& X, const VectorXd& y) {
    if (X.rows() != y.size()) throw DimensionError("design rows and response length differ");
    if (X.rows() < X.cols())
        throw SingularDesignError("least squares needs at least as many rows as columns");
    Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols())
        throw SingularDesignError("design is rank deficient (rank " + std::to_string(qr.rank()) + " < " +
                                  std::to_string(X.cols()) + ")");
    return qr.solve(y);
}

inline VectorXd least_squares(const Design& X, const Response& y) { return least_squares(X.values(), y.values()); }

/// Orthogonal matching pursuit. Each step adds the column most correlated with the
/// current residual, then refits least squares on the selected set (kept as an
/// orthonormal basis). With stop_when_exhausted, the loop ends early once the
/// residual is orthogonal to every remaining column.
inline IndexList omp(const MatrixXd& X, const VectorXd& y, Index k, bool stop_when_exhausted = false) {
    const Index n = X.rows();
    const Index m = X.cols();
    if (n != y.size()) throw DimensionError("design rows and response length differ");
    if (k < 1 || k > m) throw ConfigError("omp needs 1 <= k <= p");

    IndexList order;
    std::vector<char> taken(static_cast<std::size_t>(m), 0);
    MatrixXd basis(n, k);
    VectorXd r = y;
    const double scale = std::max((X.transpose() * y).cwiseAbs().maxCoeff(), 1e-300);
    for (Index step = 0; step < k; ++step) {
        const VectorXd corr = X.transpose() * r;
        Index best = -1;
        double best_val = -1.0;
        for (Index j = 0; j < m; ++j) {
            if (taken[static_cast<std::size_t>(j)]) continue;
            const double v = std::abs(corr(j));
            if (v > best_val) {
                best_val = v;
                best = j;
            }
        }
        if (stop_when_exhausted && best_val <= 1e-12 * scale) break;

        VectorXd v = X.col(best);
        const double col_norm = v.norm();
        for (int pass = 0; pass < 2; ++pass)
            for (Index c = 0; c < step; ++c) v -= basis.col(c).dot(v) * basis.col(c);
        const double nv = v.norm();
        if (!(nv > 1e-10 * col_norm))
            throw SingularDesignError("omp refit is rank deficient after adding column " + std::to_string(best));
        basis.col(step) = v / nv;
        r -= basis.col(step).dot(r) * basis.col(step);
        taken[static_cast<std::size_t>(best)] = 1;
        order.push_back(best);
    }
    return order;
}

inline IndexList omp(const Design& X, const Response& y, Index k) { return omp(X.values(), y.values(), k); }

}  // namespace knockoff
