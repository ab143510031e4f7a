#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "knockoff/model.hpp"
#include "knockoff/random.hpp"

namespace knockoff {

/// Smallest s_j treated as nonzero; below it feature and knockoff are the same column.
inline constexpr double kZeroS = 1e-10;

/// Residuals of the four Gram identities a valid knockoff pair satisfies.
struct GramResiduals {
    double gram_diff = 0.0;      // max |X'X - Xt'Xt|
    double cross_diff = 0.0;     // max |X'Xt - (X'X - diag s)|
    double diff_diag = 0.0;      // max |(X - Xt)'(X - Xt) - 2 diag s|
    double diff_sum = 0.0;       // max |(X - Xt)'(X + Xt)|

    double max() const { return std::max({gram_diff, cross_diff, diff_diag, diff_sum}); }
};

/// A design together with its knockoff copy and the target augmented Gram matrix
/// G = [[S, S - diag s], [S - diag s, S]] with S = X'X.
struct KnockoffPair {
    Design X;
    Design X_tilde;
    VectorXd s;
    MatrixXd gram;

    Index p() const noexcept { return X.cols(); }

    /// [X Xt] as one n x 2p matrix.
    MatrixXd augmented() const {
        MatrixXd a(X.rows(), 2 * p());
        a << X.values(), X_tilde.values();
        return a;
    }

    GramResiduals residuals() const {
        const MatrixXd& x = X.values();
        const MatrixXd& xt = X_tilde.values();
        const MatrixXd sigma = x.transpose() * x;
        const MatrixXd d = s.asDiagonal();
        GramResiduals r;
        r.gram_diff = (sigma - xt.transpose() * xt).cwiseAbs().maxCoeff();
        r.cross_diff = (x.transpose() * xt - (sigma - d)).cwiseAbs().maxCoeff();
        const MatrixXd diff = x - xt;
        r.diff_diag = (diff.transpose() * diff - 2.0 * d).cwiseAbs().maxCoeff();
        r.diff_sum = (diff.transpose() * (x + xt)).cwiseAbs().maxCoeff();
        return r;
    }
};

/// Equicorrelated choice s_j = min(2 * lambda_min(G), 1) for a unit-diagonal Gram matrix.
inline VectorXd equicorrelated_s(const MatrixXd& gram_p) {
    if (gram_p.rows() != gram_p.cols() || gram_p.rows() == 0)
        throw DimensionError("gram matrix must be square and nonempty");
    if ((gram_p - gram_p.transpose()).cwiseAbs().maxCoeff() > 1e-8)
        throw DegenerateInputError("gram matrix is not symmetric");
    if ((gram_p.diagonal().array() - 1.0).abs().maxCoeff() > 1e-8)
        throw DegenerateInputError("gram matrix must have unit diagonal (normalize columns first)");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram_p, Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues()(0);
    if (!(lambda_min > 0.0))
        throw DegenerateInputError("gram matrix is not positive definite (smallest eigenvalue " +
                                   std::to_string(lambda_min) + ")");
    return VectorXd::Constant(gram_p.rows(), std::min(2.0 * lambda_min, 1.0));
}

/// Build Xt = X (I - S^{-1} diag s) + U C, where U is an n x p orthonormal basis of a
/// subspace orthogonal to span(X) and C'C = 2 diag s - diag s S^{-1} diag s.
///
/// U comes from a Householder QR of [X | G] with G a seeded Gaussian block, so the
/// result is a deterministic function of (X, s, seed).
inline KnockoffPair construct_knockoffs(const Design& X, const VectorXd& s, std::uint64_t seed) {
    const Index n = X.rows();
    const Index p = X.cols();
    if (s.size() != p) throw DimensionError("s has length " + std::to_string(s.size()) + ", expected " + std::to_string(p));
    if (n < 2 * p)
        throw DimensionError("knockoff construction needs n >= 2p (n = " + std::to_string(n) +
                             ", p = " + std::to_string(p) + "); screen features first");
    if ((s.array() < 0.0).any() || !s.allFinite()) throw InvalidSError("s must be finite and nonnegative");

    const MatrixXd& x = X.values();
    const MatrixXd sigma = x.transpose() * x;
    Eigen::LLT<MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw SingularDesignError("X'X is not invertible");
    const MatrixXd sigma_inv = llt.solve(MatrixXd::Identity(p, p));
    const MatrixXd sigma_inv_s = sigma_inv * s.asDiagonal();

    MatrixXd a = MatrixXd(s.asDiagonal()) * 2.0 - s.asDiagonal() * sigma_inv_s;
    a = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
    const double min_eig = eig.eigenvalues()(0);
    if (min_eig < -1e-10)
        throw InvalidSError("2 diag(s) - diag(s) S^-1 diag(s) is not positive semidefinite (eigenvalue " +
                            std::to_string(min_eig) + ")");
    const VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const MatrixXd c = root.asDiagonal() * eig.eigenvectors().transpose();

    Rng rng(seed);
    MatrixXd stacked(n, 2 * p);
    stacked << x, gaussian_matrix(n, p, rng);
    Eigen::HouseholderQR<MatrixXd> qr(stacked);
    const MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, 2 * p);
    const MatrixXd u = q.rightCols(p);

    MatrixXd xt = x - x * sigma_inv_s + u * c;
    KnockoffPair pair;
    pair.X = X;
    pair.X_tilde = Design(std::move(xt));
    pair.s = s;
    pair.gram.resize(2 * p, 2 * p);
    const MatrixXd off = sigma - MatrixXd(s.asDiagonal());
    pair.gram << sigma, off, off, sigma;
    return pair;
}

/// Stack the first n0 rows of the screened design on top of the part-1 knockoffs.
/// On part 0 the knockoffs are exact copies of the original features.
inline Design recycle_knockoffs(const Design& X_full_screened, const Design& X_tilde_part1, Index n0) {
    const Index n = X_full_screened.rows();
    const Index n1 = X_tilde_part1.rows();
    if (n0 < 0 || n0 + n1 != n)
        throw DimensionError("recycled rows do not add up: n0 = " + std::to_string(n0) + ", n1 = " +
                             std::to_string(n1) + ", n = " + std::to_string(n));
    if (X_full_screened.cols() != X_tilde_part1.cols())
        throw DimensionError("screened design and part-1 knockoffs have different column counts");
    MatrixXd out(n, X_full_screened.cols());
    out.topRows(n0) = X_full_screened.values().topRows(n0);
    out.bottomRows(n1) = X_tilde_part1.values();
    return Design(std::move(out));
}

}  // namespace knockoff
