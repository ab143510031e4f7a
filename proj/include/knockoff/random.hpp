#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace knockoff {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Derive an independent stream seed from a master seed and a path of stream labels,
/// e.g. derive_seed(master, {setting, trial, stage}).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = detail::splitmix64(master);
    for (std::uint64_t label : path) h = detail::splitmix64(h ^ detail::splitmix64(label + 0x632BE59BD9B4E019ULL));
    return h;
}

// Stage labels used when splitting a trial's seed across pipeline steps.
namespace stream {
inline constexpr std::uint64_t split = 1;
inline constexpr std::uint64_t rotation = 2;
inline constexpr std::uint64_t knockoff = 3;
inline constexpr std::uint64_t sqrt_lambda = 4;
inline constexpr std::uint64_t noise = 5;
inline constexpr std::uint64_t design = 6;
inline constexpr std::uint64_t coefficients = 7;
inline constexpr std::uint64_t pipeline = 8;
}  // namespace stream

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

inline Eigen::VectorXd gaussian_vector(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

}  // namespace knockoff
