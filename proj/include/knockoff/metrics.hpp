#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "knockoff/errors.hpp"
#include "knockoff/model.hpp"

namespace knockoff {

struct TrialScore {
    double fdp = 0.0;
    double fdp_dir = 0.0;
    double mfdr_dir_summand = 0.0;
    double power = 0.0;
    double restricted_power = 0.0;
    Index n_selected = 0;
};

namespace detail {

inline int sign_at(const SignList& signs, Index j) {
    if (j < 0 || j >= static_cast<Index>(signs.size()))
        throw DimensionError("selected index " + std::to_string(j) + " out of range");
    return signs[static_cast<std::size_t>(j)];
}

inline double denom(std::size_t k) { return static_cast<double>(std::max<std::size_t>(k, 1)); }

}  // namespace detail

inline double fdp(const IndexList& selected, const LinearModelSpec& truth) {
    std::size_t nulls = 0;
    for (Index j : selected) {
        if (j < 0 || j >= truth.beta().size()) throw DimensionError("selected index out of range");
        if (truth.beta()(j) == 0.0) ++nulls;
    }
    return static_cast<double>(nulls) / detail::denom(selected.size());
}

inline std::size_t sign_errors(const IndexList& selected, const std::map<Index, int>& signs,
                               const SignList& true_signs) {
    std::size_t errs = 0;
    for (Index j : selected) {
        const auto it = signs.find(j);
        if (it == signs.end()) throw DimensionError("no sign recorded for selected index " + std::to_string(j));
        if (it->second != detail::sign_at(true_signs, j)) ++errs;
    }
    return errs;
}

/// Selections with a wrong sign, a zero effect counting as wrong, over |S| v 1.
inline double fdp_dir(const IndexList& selected, const std::map<Index, int>& signs, const SignList& true_signs) {
    return static_cast<double>(sign_errors(selected, signs, true_signs)) / detail::denom(selected.size());
}

inline double mfdr_dir_summand(const IndexList& selected, const std::map<Index, int>& signs,
                               const SignList& true_signs, double q) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("q must lie in (0, 1)");
    return static_cast<double>(sign_errors(selected, signs, true_signs)) /
           (static_cast<double>(selected.size()) + 1.0 / q);
}

/// |S cap target| / |target|, target = support(beta) or the given restriction.
/// An empty target gives 0.
inline double power(const IndexList& selected, const LinearModelSpec& truth, const IndexList* restricted_to = nullptr) {
    const IndexList& target = restricted_to ? *restricted_to : truth.support();
    if (target.empty()) return 0.0;
    std::size_t hits = 0;
    for (Index j : target)
        if (std::find(selected.begin(), selected.end(), j) != selected.end()) ++hits;
    return static_cast<double>(hits) / static_cast<double>(target.size());
}

inline TrialScore score_selection(const IndexList& selected, const std::map<Index, int>& signs,
                                  const LinearModelSpec& truth, const IndexList& strong, double q) {
    const SignList ts = truth.true_signs();
    TrialScore s;
    s.n_selected = static_cast<Index>(selected.size());
    s.fdp = fdp(selected, truth);
    s.fdp_dir = fdp_dir(selected, signs, ts);
    s.mfdr_dir_summand = mfdr_dir_summand(selected, signs, ts, q);
    s.power = power(selected, truth);
    s.restricted_power = power(selected, truth, &strong);
    return s;
}

struct MeanSe {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    std::size_t count = 0;
};

/// Mean and sample standard deviation / sqrt(count); se = 0 for a single value.
inline MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe out;
    out.count = xs.size();
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() == 1) {
        out.se = 0.0;
        return out;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
    return out;
}

}  // namespace knockoff
