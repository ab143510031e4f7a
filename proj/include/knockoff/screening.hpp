#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "knockoff/errors.hpp"
#include "knockoff/model.hpp"
#include "knockoff/random.hpp"
#include "knockoff/solvers.hpp"

namespace knockoff {

struct ScreenResult {
    IndexList s0;                 // original feature indices, in entry order
    std::map<Index, int> signs0;  // sign at first entry
    Index k_max = 0;
};

struct RotationSplit {
    MatrixXd U;
    Index n0 = 0;
};

namespace detail {

inline void check_n0(Index n0, Index n) {
    if (n0 < 1 || n0 >= n)
        throw ConfigError("n0 must satisfy 1 <= n0 < n (n0 = " + std::to_string(n0) + ", n = " + std::to_string(n) + ")");
}

inline SplitData split_by_rows(const MatrixXd& X, const VectorXd& y, IndexList rows0, IndexList rows1) {
    SplitData out;
    out.n0 = static_cast<Index>(rows0.size());
    out.n1 = static_cast<Index>(rows1.size());
    out.part0 = {Design(select_rows(X, rows0)), Response(select_entries(y, rows0))};
    out.part1 = {Design(select_rows(X, rows1)), Response(select_entries(y, rows1))};
    out.rows0 = std::move(rows0);
    out.rows1 = std::move(rows1);
    return out;
}

}  // namespace detail

/// Uniformly random partition of the rows into n0 and n - n0; each part keeps its rows
/// in ascending original order.
inline SplitData split_rows(const Design& X, const Response& y, Index n0, std::uint64_t seed) {
    check_pair(X, y);
    const Index n = X.rows();
    detail::check_n0(n0, n);
    IndexList perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng(seed);
    for (Index i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<Index> pick(0, i);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    IndexList rows0(perm.begin(), perm.begin() + n0);
    IndexList rows1(perm.begin() + n0, perm.end());
    std::sort(rows0.begin(), rows0.end());
    std::sort(rows1.begin(), rows1.end());
    return detail::split_by_rows(X.values(), y.values(), std::move(rows0), std::move(rows1));
}

/// Haar-distributed orthonormal matrix from the QR of a seeded Gaussian matrix, with
/// column signs fixed so that R has a positive diagonal.
inline RotationSplit random_rotation(Index n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("rotation size must be positive");
    Rng rng(seed);
    const MatrixXd g = gaussian_matrix(n, n, rng);
    Eigen::HouseholderQR<MatrixXd> qr(g);
    MatrixXd q = qr.householderQ();
    const MatrixXd& r = qr.matrixQR();
    for (Index j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return {std::move(q), 0};
}

inline SplitData rotate_then_split(const Design& X, const Response& y, Index n0, const MatrixXd& U) {
    check_pair(X, y);
    const Index n = X.rows();
    detail::check_n0(n0, n);
    if (U.rows() != n || U.cols() != n) throw DimensionError("rotation size does not match the design");
    IndexList rows0(static_cast<std::size_t>(n0));
    IndexList rows1(static_cast<std::size_t>(n - n0));
    std::iota(rows0.begin(), rows0.end(), Index{0});
    std::iota(rows1.begin(), rows1.end(), n0);
    return detail::split_by_rows(U * X.values(), U * y.values(), std::move(rows0), std::move(rows1));
}

inline SplitData rotate_then_split(const Design& X, const Response& y, Index n0, std::uint64_t seed) {
    return rotate_then_split(X, y, n0, random_rotation(X.rows(), seed).U);
}

/// The m features with largest |X_j' y0|; ties go to the lower index.
inline IndexList marginal_prescreen(const MatrixXd& X0, const VectorXd& y0, Index m) {
    const Index p = X0.cols();
    if (m < 1 || m > p) throw ConfigError("prescreen size must satisfy 1 <= m <= p");
    if (X0.rows() != y0.size()) throw DimensionError("design rows and response length differ");
    const VectorXd corr = (X0.transpose() * y0).cwiseAbs();
    IndexList idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return corr(a) > corr(b); });
    idx.resize(static_cast<std::size_t>(m));
    return idx;
}

inline IndexList marginal_prescreen(const Design& X0, const Response& y0, Index m) {
    return marginal_prescreen(X0.values(), y0.values(), m);
}

/// First k_max coordinates to enter the Lasso path on (X0, y0), with their entry signs.
inline ScreenResult lasso_screen(const MatrixXd& X0, const VectorXd& y0, Index k_max, PathConfig grid = {}) {
    if (k_max < 1) throw ConfigError("k_max must be positive");
    grid.max_entered = k_max;
    const EntryPath path = lasso_path(X0, y0, grid);
    ScreenResult out;
    out.k_max = k_max;
    for (Index j : path.entry_order) {
        if (static_cast<Index>(out.s0.size()) >= k_max) break;
        out.s0.push_back(j);
        out.signs0[j] = path.entry_sign[static_cast<std::size_t>(j)];
    }
    return out;
}

inline ScreenResult lasso_screen(const Design& X0, const Response& y0, Index k_max, const PathConfig& grid = {}) {
    check_pair(X0, y0);
    return lasso_screen(X0.values(), y0.values(), k_max, grid);
}

/// 1{support within s0 and |s0| <= n1 / 2}.
inline bool sure_screen_event(const ScreenResult& screen, const IndexList& support, Index n1) {
    if (2 * static_cast<Index>(screen.s0.size()) > n1) return false;
    for (Index j : support)
        if (std::find(screen.s0.begin(), screen.s0.end(), j) == screen.s0.end()) return false;
    return true;
}

}  // namespace knockoff
