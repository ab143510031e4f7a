#include <random>

#include <catch_amalgamated.hpp>

#include "knockoff/metrics.hpp"

using namespace knockoff;
using Catch::Matchers::WithinAbs;

namespace {

LinearModelSpec model(std::initializer_list<double> b) {
    VectorXd beta(static_cast<Index>(b.size()));
    Index i = 0;
    for (double v : b) beta(i++) = v;
    return LinearModelSpec(beta, 1.0);
}

}  // namespace

TEST_CASE("fdp examples", "[metrics]") {
    const LinearModelSpec m = model({0.0, 1.0, 2.0, 0.0});
    CHECK(fdp({}, m) == 0.0);
    CHECK(fdp({0, 1}, m) == 0.5);
    CHECK(fdp({1, 2}, m) == 0.0);
    CHECK(fdp({0, 3}, m) == 1.0);
    CHECK_THROWS_AS(fdp({4}, m), DimensionError);
}

TEST_CASE("directional fdp examples", "[metrics]") {
    CHECK(fdp_dir({0, 1}, {{0, 1}, {1, -1}}, {1, 1}) == 0.5);
    CHECK(fdp_dir({0}, {{0, 1}}, {0, 1}) == 1.0);
    CHECK(fdp_dir({}, {}, {1, -1}) == 0.0);
    CHECK(fdp_dir({1}, {{1, -1}}, {1, -1}) == 0.0);
    CHECK_THROWS_AS(fdp_dir({0}, {}, {1}), DimensionError);
    CHECK(sign_errors({0, 1, 2}, {{0, 1}, {1, 1}, {2, 1}}, {1, 0, -1}) == 2);
}

TEST_CASE("modified directional FDR summand", "[metrics]") {
    CHECK(mfdr_dir_summand({}, {}, {1, 1}, 0.2) == 0.0);
    const std::map<Index, int> signs{{0, 1}, {1, 1}, {2, 1}, {3, -1}};
    CHECK_THAT(mfdr_dir_summand({0, 1, 2, 3}, signs, {1, 1, 1, 1, 0}, 0.2), WithinAbs(1.0 / 9.0, 1e-15));
    CHECK(mfdr_dir_summand({0, 1, 2, 3}, signs, {1, 1, 1, -1}, 0.2) == 0.0);
    CHECK_THROWS_AS(mfdr_dir_summand({}, {}, {}, 1.0), ConfigError);
}

TEST_CASE("power and restricted power", "[metrics]") {
    const LinearModelSpec m = model({3.0, 3.0, 0.5, 0.5, 0.5, 0.0});
    CHECK(power({0, 1, 2, 3, 4}, m) == 1.0);
    CHECK(power({}, m) == 0.0);
    const IndexList strong{0, 1};
    CHECK(power({0, 1}, m, &strong) == 1.0);
    CHECK_THAT(power({0, 1}, m), WithinAbs(2.0 / 5.0, 1e-15));
    CHECK(power({5}, model({0.0, 0.0, 0.0, 0.0, 0.0, 0.0})) == 0.0);
}

TEST_CASE("fdp never exceeds directional fdp", "[metrics]") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> coin(-1, 1);
    std::bernoulli_distribution pick(0.4);
    for (int t = 0; t < 500; ++t) {
        VectorXd beta(12);
        for (Index j = 0; j < 12; ++j) beta(j) = coin(rng);
        const LinearModelSpec m(beta, 1.0);
        IndexList sel;
        std::map<Index, int> signs;
        for (Index j = 0; j < 12; ++j)
            if (pick(rng)) {
                sel.push_back(j);
                signs[j] = coin(rng) >= 0 ? 1 : -1;
            }
        const TrialScore s = score_selection(sel, signs, m, {}, 0.2);
        CHECK(s.fdp <= s.fdp_dir);
        CHECK(s.fdp_dir <= 1.0);
        CHECK(s.mfdr_dir_summand <= s.fdp_dir);
        CHECK(s.restricted_power == 0.0);
        CHECK(s.n_selected == static_cast<Index>(sel.size()));
    }
}

TEST_CASE("mean and standard error", "[metrics]") {
    const MeanSe one = mean_se({0.3});
    CHECK(one.mean == 0.3);
    CHECK(one.se == 0.0);
    CHECK(std::isnan(mean_se({}).mean));
    const MeanSe m = mean_se({1.0, 2.0, 3.0, 4.0});
    CHECK(m.mean == 2.5);
    // Sample variance 5/3 over 4 trials.
    CHECK_THAT(m.se, WithinAbs(std::sqrt(5.0 / 3.0 / 4.0), 1e-15));
    CHECK(m.count == 4);
}
