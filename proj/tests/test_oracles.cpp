#include <random>

#include <catch_amalgamated.hpp>

#include "knockoff/oracles.hpp"
#include "knockoff/verify.hpp"
#include "support.hpp"

using namespace knockoff;
using Catch::Matchers::WithinAbs;

namespace {

oracle::BernoulliStoppingInstance instance(std::vector<double> rho, oracle::StoppingRule rule) {
    oracle::BernoulliStoppingInstance inst;
    inst.rho_floor = *std::min_element(rho.begin(), rho.end());
    inst.rho = std::move(rho);
    inst.rule = rule;
    return inst;
}

}  // namespace

TEST_CASE("Lemma-1 enumeration examples", "[oracles]") {
    CHECK_THAT(oracle::lemma1_exact(instance({0.5, 0.5}, oracle::StoppingRule::at(2))), WithinAbs(1.75, 1e-15));
    CHECK_THAT(oracle::lemma1_exact(instance({1.0, 1.0, 1.0}, oracle::StoppingRule{})), WithinAbs(1.0, 1e-15));
    for (double r = 0.05; r <= 1.0; r += 0.05) {
        const double e = oracle::lemma1_exact(instance({r}, oracle::StoppingRule::at(1)));
        CHECK_THAT(e, WithinAbs(2.0 - r, 1e-14));
        CHECK(e <= 1.0 / r + 1e-12);
    }
    // A rule that never fires gives J = 0 and expectation 1.
    CHECK_THAT(oracle::lemma1_exact(instance({0.3, 0.6}, oracle::StoppingRule::at(0))), WithinAbs(1.0, 1e-15));
}

TEST_CASE("Lemma-1 bound over random threshold rules", "[oracles]") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = -1.0;
    for (int t = 0; t < 120; ++t) {
        const double floor = std::vector<double>{0.3, 0.5, 0.7}[static_cast<std::size_t>(t % 3)];
        oracle::BernoulliStoppingInstance inst;
        inst.rho_floor = floor;
        const int n = 1 + t % 12;
        for (int i = 0; i < n; ++i) inst.rho.push_back(floor + (1.0 - floor) * u(rng));
        inst.rule.a = u(rng) < 0.5 ? 0.0 : 1.0;
        inst.rule.w = u(rng);
        inst.rule.c = 0.1 + 3.0 * u(rng);
        worst = std::max(worst, oracle::lemma1_exact(inst) - 1.0 / floor);
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("Lemma-1 enumeration rejects bad instances", "[oracles]") {
    CHECK_THROWS_AS(oracle::lemma1_exact(instance(std::vector<double>(17, 0.5), oracle::StoppingRule{})), ConfigError);
    CHECK_THROWS_AS(oracle::lemma1_exact(instance({0.0, 0.5}, oracle::StoppingRule{})), ConfigError);
}

TEST_CASE("Gram checker", "[oracles]") {
    const MatrixXd x = testsupport::unit_columns(testsupport::gaussian(40, 6, 72));
    CHECK(oracle::gram_check(x, x, VectorXd::Zero(6)).max() == 0.0);

    const Design xd(x, VectorXd::Ones(6), true);
    const VectorXd s = equicorrelated_s(x.transpose() * x);
    const KnockoffPair pair = construct_knockoffs(xd, s, 73);
    const oracle::GramReport g = oracle::gram_check(pair);
    CHECK(g.max() <= 1e-8);
    const GramResiduals r = pair.residuals();
    CHECK_THAT(g.gram_diff, WithinAbs(r.gram_diff, 1e-10));
    CHECK_THAT(g.cross_diff, WithinAbs(r.cross_diff, 1e-10));
    CHECK_THAT(g.diff_diag, WithinAbs(r.diff_diag, 1e-10));
    CHECK_THAT(g.diff_sum, WithinAbs(r.diff_sum, 1e-10));

    MatrixXd bad = pair.X_tilde.values();
    bad(3, 2) += 1e-3;
    CHECK(oracle::gram_check(x, bad, s).max() > 1e-4);
    CHECK_THROWS_AS(oracle::gram_check(x, bad, VectorXd::Zero(5)), DimensionError);
}

TEST_CASE("swap harness on trivial swap sets", "[oracles]") {
    const MatrixXd x = testsupport::unit_columns(testsupport::gaussian(40, 5, 74));
    const VectorXd s = equicorrelated_s(x.transpose() * x);
    const KnockoffPair pair = construct_knockoffs(Design(x, VectorXd::Ones(5), true), s, 75);
    const VectorXd y = x.col(0) * 2.0 + testsupport::gaussian_vec(40, 76);
    StatOptions opt;
    opt.rule = StatRule::coef_diff;
    CHECK(oracle::swap_antisymmetry_check(opt, x, pair.X_tilde.values(), y, s, {}, 0.0));
    CHECK(oracle::swap_antisymmetry_check(opt, x, pair.X_tilde.values(), y, s, {0, 1, 2, 3, 4}, 1e-8));
    // With s = 0 every W is 0, so any swap passes.
    CHECK(oracle::swap_antisymmetry_check(opt, x, x, y, VectorXd::Zero(5), {1, 3}, 0.0));
}

TEST_CASE("scalar lasso oracle", "[oracles]") {
    VectorXd x(1), y(1);
    x << 1.0;
    y << 3.0;
    CHECK(oracle::scalar_lasso_oracle(x, y, 1.0) == 2.0);
    CHECK(oracle::scalar_lasso_oracle(x, y, 3.0) == 0.0);
    CHECK(oracle::scalar_lasso_oracle(x, y, 5.0) == 0.0);
    y << -3.0;
    CHECK(oracle::scalar_lasso_oracle(x, y, 1.0) == -2.0);
}

TEST_CASE("verification battery passes", "[oracles]") {
    const auto results = oracle::run_battery(2024);
    REQUIRE_FALSE(results.empty());
    for (const auto& r : results) {
        INFO(r.name << ": " << r.detail);
        CHECK(r.passed);
    }
}
