#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "knockoff/errors.hpp"

namespace knockoff {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Ordered list of feature (or row) indices, 0-based.
using IndexList = std::vector<Index>;

/// Signs are stored as small integers in {-1, 0, +1}.
using SignList = std::vector<int>;

inline int sign_of(double v) noexcept { return (v > 0.0) - (v < 0.0); }

/// Dense design matrix, rows are observations and columns are features.
///
/// Immutable once built. A design flagged as normalized has every column at unit
/// Euclidean norm (checked to 1e-10 on construction); column_norms() then holds the
/// scales that were divided out.
class Design {
public:
    Design() = default;

    explicit Design(MatrixXd values) : Design(std::move(values), VectorXd(), false) {}

    Design(MatrixXd values, VectorXd column_norms, bool normalized)
        : values_(std::move(values)), column_norms_(std::move(column_norms)), normalized_(normalized) {
        if (values_.rows() < 1 || values_.cols() < 1)
            throw DimensionError("design must have at least one row and one column");
        if (!values_.allFinite()) throw DegenerateInputError("design contains non-finite values");
        if (column_norms_.size() == 0) column_norms_ = VectorXd::Ones(values_.cols());
        if (column_norms_.size() != values_.cols())
            throw DimensionError("column_norms length does not match column count");
        if (normalized_) {
            for (Index j = 0; j < values_.cols(); ++j) {
                if (std::abs(values_.col(j).norm() - 1.0) > 1e-10)
                    throw DegenerateInputError("column " + std::to_string(j) +
                                               " is flagged normalized but does not have unit norm");
            }
        }
    }

    const MatrixXd& values() const noexcept { return values_; }
    const VectorXd& column_norms() const noexcept { return column_norms_; }
    bool normalized() const noexcept { return normalized_; }
    Index rows() const noexcept { return values_.rows(); }
    Index cols() const noexcept { return values_.cols(); }

private:
    MatrixXd values_;
    VectorXd column_norms_;
    bool normalized_ = false;
};

class Response {
public:
    Response() = default;
    explicit Response(VectorXd values) : values_(std::move(values)) {
        if (!values_.allFinite()) throw DegenerateInputError("response contains non-finite values");
    }

    const VectorXd& values() const noexcept { return values_; }
    Index size() const noexcept { return values_.size(); }

private:
    VectorXd values_;
};

/// Ground truth for simulation and scoring: y = X beta + sigma * z.
class LinearModelSpec {
public:
    LinearModelSpec() = default;
    LinearModelSpec(VectorXd beta, double sigma) : beta_(std::move(beta)), sigma_(sigma) {
        if (sigma_ < 0.0 || !std::isfinite(sigma_)) throw ConfigError("sigma must be finite and nonnegative");
        for (Index j = 0; j < beta_.size(); ++j)
            if (beta_(j) != 0.0) support_.push_back(j);
    }

    const VectorXd& beta() const noexcept { return beta_; }
    double sigma() const noexcept { return sigma_; }
    const IndexList& support() const noexcept { return support_; }

    SignList true_signs() const {
        SignList s(static_cast<std::size_t>(beta_.size()));
        for (Index j = 0; j < beta_.size(); ++j) s[static_cast<std::size_t>(j)] = sign_of(beta_(j));
        return s;
    }

private:
    VectorXd beta_;
    double sigma_ = 0.0;
    IndexList support_;
};

struct DataPart {
    Design X;
    Response y;
};

/// Two disjoint row groups. rows0/rows1 index the rows of the design the split was
/// taken from (after rotation, when one was applied).
struct SplitData {
    DataPart part0;
    DataPart part1;
    Index n0 = 0;
    Index n1 = 0;
    IndexList rows0;
    IndexList rows1;
};

inline void check_pair(const Design& X, const Response& y) {
    if (X.rows() != y.size())
        throw DimensionError("response length " + std::to_string(y.size()) + " does not match design rows " +
                             std::to_string(X.rows()));
}

/// Scale every column to unit Euclidean norm. A zero column is an error.
inline Design normalize_columns(const Design& X) {
    MatrixXd out = X.values();
    VectorXd norms(out.cols());
    for (Index j = 0; j < out.cols(); ++j) {
        const double nrm = out.col(j).norm();
        if (nrm == 0.0) throw DegenerateInputError("column " + std::to_string(j) + " is identically zero");
        norms(j) = nrm;
        out.col(j) /= nrm;
    }
    return Design(std::move(out), std::move(norms), true);
}

inline MatrixXd select_columns(const MatrixXd& m, const IndexList& cols) {
    MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = m.col(cols[k]);
    return out;
}

inline MatrixXd select_rows(const MatrixXd& m, const IndexList& rows) {
    MatrixXd out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = m.row(rows[k]);
    return out;
}

inline VectorXd select_entries(const VectorXd& v, const IndexList& idx) {
    VectorXd out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
    return out;
}

}  // namespace knockoff
