#include <numbers>
#include <set>

#include <catch_amalgamated.hpp>

#include "knockoff/model.hpp"
#include "knockoff/solvers.hpp"
#include "support.hpp"

using namespace knockoff;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MatrixXd unit(Index n, Index p, std::uint64_t seed) { return testsupport::unit_columns(testsupport::gaussian(n, p, seed)); }

double kkt_violation(const MatrixXd& x, const VectorXd& y, const VectorXd& b, double lam, const SignConstraints& c = {}) {
    const VectorXd g = x.transpose() * (y - x * b);
    double worst = 0.0;
    for (Index j = 0; j < b.size(); ++j) {
        const int req = c.at(j);
        if (b(j) != 0.0) {
            worst = std::max(worst, std::abs(g(j) - lam * sign_of(b(j))));
        } else if (req == 0) {
            worst = std::max(worst, std::abs(g(j)) - lam);
        } else {
            worst = std::max(worst, req * g(j) - lam);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("least squares examples", "[solvers]") {
    MatrixXd e1 = MatrixXd::Zero(3, 1);
    e1(0, 0) = 1;
    VectorXd y(3);
    y << 2, 0, 0;
    CHECK_THAT(least_squares(e1, y)(0), WithinAbs(2.0, 1e-14));

    const MatrixXd q = testsupport::orthonormal(10, 3, 41);
    const VectorXd yq = testsupport::gaussian_vec(10, 42);
    CHECK((least_squares(q, yq) - q.transpose() * yq).cwiseAbs().maxCoeff() <= 1e-12);

    const MatrixXd x = testsupport::gaussian(30, 5, 43);
    const VectorXd yr = testsupport::gaussian_vec(30, 44);
    const VectorXd b = least_squares(Design(x), Response(yr));
    CHECK((b - testsupport::normal_equations(x, yr)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((x.transpose() * (yr - x * b)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("least squares rejects rank deficiency", "[solvers]") {
    MatrixXd x = testsupport::gaussian(10, 3, 45);
    x.col(2) = x.col(0) + x.col(1);
    CHECK_THROWS_AS(least_squares(x, testsupport::gaussian_vec(10, 46)), SingularDesignError);
    CHECK_THROWS_AS(least_squares(testsupport::gaussian(2, 3, 47), VectorXd::Ones(2)), SingularDesignError);
}

TEST_CASE("lasso at or above lambda_max is zero", "[solvers]") {
    const MatrixXd x = unit(40, 8, 48);
    const VectorXd y = testsupport::gaussian_vec(40, 49);
    LassoConfig cfg;
    cfg.lambda = (x.transpose() * y).cwiseAbs().maxCoeff();
    CHECK(lasso_fit(x, y, cfg).coef.isZero(0.0));
    cfg.lambda *= 3;
    CHECK(lasso(Design(x), Response(y), cfg).isZero(0.0));
}

TEST_CASE("scalar lasso matches the soft threshold", "[solvers]") {
    for (std::uint64_t t = 0; t < 25; ++t) {
        const VectorXd x = unit(12, 1, 50 + t).col(0);
        const VectorXd y = testsupport::gaussian_vec(12, 80 + t);
        const double z = x.dot(y);
        LassoConfig cfg;
        cfg.lambda = std::abs(z) * 0.05 * static_cast<double>(t);
        CHECK_THAT(lasso_fit(MatrixXd(x), y, cfg).coef(0), WithinAbs(testsupport::soft(z, cfg.lambda), 1e-8));
    }
}

TEST_CASE("sign restriction against the data gives zero", "[solvers]") {
    const VectorXd x = unit(10, 1, 51).col(0);
    const VectorXd y = 5.0 * x + 0.1 * testsupport::gaussian_vec(10, 52);
    LassoConfig cfg;
    cfg.lambda = 0.5;
    REQUIRE(x.dot(y) > cfg.lambda);
    CHECK(lasso_fit(MatrixXd(x), y, cfg, SignConstraints{{-1}}).coef(0) == 0.0);
    CHECK(lasso_fit(MatrixXd(x), y, cfg, SignConstraints{{1}}).coef(0) > 0.0);
}

TEST_CASE("lasso KKT certificates on 100 random problems", "[solvers]") {
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 100; ++t) {
        const Index n = 20 + static_cast<Index>(t % 30);
        const Index p = 5 + static_cast<Index>(t % 40);
        const MatrixXd x = unit(n, p, 500 + t);
        const VectorXd y = testsupport::gaussian_vec(n, 700 + t);
        LassoConfig cfg;
        cfg.lambda = (0.05 + 0.009 * static_cast<double>(t)) * (x.transpose() * y).cwiseAbs().maxCoeff();
        worst = std::max(worst, kkt_violation(x, y, lasso_fit(x, y, cfg).coef, cfg.lambda));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("objective never increases across sweeps", "[solvers]") {
    MatrixXd x = unit(30, 12, 53);
    x.col(1) = (x.col(0) + 0.3 * x.col(1)).normalized();
    const VectorXd y = testsupport::gaussian_vec(30, 54);
    LassoConfig cfg;
    cfg.lambda = 0.1;
    const LassoFit fit = lasso_fit(x, y, cfg, {}, true);
    REQUIRE(fit.objective.size() >= 2);
    for (std::size_t k = 1; k < fit.objective.size(); ++k) CHECK(fit.objective[k] <= fit.objective[k - 1] + 1e-12);
}

TEST_CASE("sign constraints are never violated", "[solvers]") {
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<int> pick(-1, 1);
    for (std::uint64_t t = 0; t < 30; ++t) {
        const MatrixXd x = unit(25, 10, 900 + t);
        const VectorXd y = testsupport::gaussian_vec(25, 950 + t);
        SignConstraints c;
        for (int j = 0; j < 10; ++j) c.required_sign.push_back(pick(rng));
        LassoConfig cfg;
        cfg.lambda = 0.05;
        const VectorXd b = lasso_fit(x, y, cfg, c).coef;
        for (Index j = 0; j < 10; ++j) CHECK(c.at(j) * b(j) >= 0.0);
        CHECK(kkt_violation(x, y, b, cfg.lambda, c) <= 1e-6);
    }
}

TEST_CASE("lasso converges with an exactly dependent active set", "[solvers]") {
    for (std::uint64_t t = 0; t < 20; ++t) {
        MatrixXd x = unit(20, 8, 1100 + t);
        x.col(7) = (x.col(0) - x.col(1) + x.col(2)).normalized();
        x.col(6) = (x.col(3) + 2.0 * x.col(4)).normalized();
        const VectorXd y = testsupport::gaussian_vec(20, 1200 + t) + 3.0 * x.col(7);
        LassoConfig cfg;
        cfg.tol = 1e-11;
        cfg.lambda = 1e-3 * (x.transpose() * y).cwiseAbs().maxCoeff();
        const LassoFit fit = lasso_fit(x, y, cfg);
        CHECK(kkt_violation(x, y, fit.coef, cfg.lambda) <= 1e-6);
        CHECK(fit.sweeps < 200);
    }
}

TEST_CASE("lasso reports non-convergence", "[solvers]") {
    MatrixXd x = unit(20, 6, 56);
    x.col(1) = (x.col(0) + 0.05 * x.col(1)).normalized();
    const VectorXd y = testsupport::gaussian_vec(20, 57);
    LassoConfig cfg;
    cfg.lambda = 1e-3;
    cfg.max_iters = 2;
    CHECK_THROWS_AS(lasso_fit(x, y, cfg), ConvergenceError);
    CHECK_THROWS_AS(lasso_fit(x, y, LassoConfig{-1.0}), ConfigError);
    CHECK_THROWS_AS(lasso_fit(x, y, cfg, SignConstraints{{1, 0}}), DimensionError);
}

TEST_CASE("orthogonal path entries sit one grid step below the knot", "[solvers]") {
    const MatrixXd q = testsupport::orthonormal(30, 6, 58);
    const VectorXd y = testsupport::gaussian_vec(30, 59);
    PathConfig cfg;
    cfg.grid_size = 50;
    cfg.lambda_min_ratio = 1e-2;
    const EntryPath path = lasso_path(q, y, cfg);
    const VectorXd z = q.transpose() * y;
    const double lmax = z.cwiseAbs().maxCoeff();
    for (Index j = 0; j < 6; ++j) {
        double expect = 0.0;
        for (int k = 0; k < cfg.grid_size; ++k) {
            const double g = lmax * std::pow(cfg.lambda_min_ratio, static_cast<double>(k) / (cfg.grid_size - 1));
            if (g < std::abs(z(j))) {
                expect = g;
                break;
            }
        }
        CHECK_THAT(path.entry_lambda(j), WithinRel(expect, 1e-12));
        if (expect > 0.0) CHECK(path.entry_sign[static_cast<std::size_t>(j)] == sign_of(z(j)));
    }
    IndexList by_z(6);
    std::iota(by_z.begin(), by_z.end(), Index{0});
    std::sort(by_z.begin(), by_z.end(), [&](Index a, Index b) { return std::abs(z(a)) > std::abs(z(b)); });
    IndexList entered;
    for (Index j : by_z)
        if (path.entry_lambda(j) > 0.0) entered.push_back(j);
    CHECK(path.entry_order == entered);
}

TEST_CASE("never-active coordinate keeps zero entry", "[solvers]") {
    const MatrixXd q = testsupport::orthonormal(20, 3, 60);
    const VectorXd y = 2.0 * q.col(0) - 1.0 * q.col(2);
    const EntryPath path = lasso_path(Design(q), Response(y), 100, 0.1);
    CHECK(path.entry_lambda(1) == 0.0);
    CHECK(path.entry_sign[1] == 0);
    for (Index j = 0; j < 3; ++j) CHECK((path.entry_sign[static_cast<std::size_t>(j)] == 0) == (path.entry_lambda(j) == 0.0));
    CHECK(path.entry_order == IndexList{0, 2});
}

TEST_CASE("two orthogonal columns enter in order of correlation", "[solvers]") {
    const MatrixXd q = testsupport::orthonormal(15, 2, 61);
    const VectorXd y = 3.0 * q.col(0) + 1.0 * q.col(1);
    CHECK(lasso_path(q, y, PathConfig{}).entry_order == IndexList{0, 1});
    const VectorXd y2 = 1.0 * q.col(0) - 3.0 * q.col(1);
    const EntryPath p2 = lasso_path(q, y2, PathConfig{});
    CHECK(p2.entry_order == IndexList{1, 0});
    CHECK(p2.entry_sign[1] == -1);
}

TEST_CASE("orthogonal active sets are nested along the grid", "[solvers]") {
    const MatrixXd q = testsupport::orthonormal(25, 8, 62);
    const VectorXd y = testsupport::gaussian_vec(25, 63);
    const double lmax = (q.transpose() * y).cwiseAbs().maxCoeff();
    const VectorXd grid = lambda_grid(lmax, 40, 1e-2);
    std::set<Index> prev;
    for (Index k = 0; k < grid.size(); ++k) {
        LassoConfig cfg;
        cfg.lambda = grid(k);
        const VectorXd b = lasso_fit(q, y, cfg).coef;
        std::set<Index> now;
        for (Index j = 0; j < 8; ++j)
            if (b(j) != 0.0) now.insert(j);
        CHECK(std::includes(now.begin(), now.end(), prev.begin(), prev.end()));
        prev = now;
    }
}

TEST_CASE("path stops early once enough coordinates entered", "[solvers]") {
    const MatrixXd x = unit(40, 30, 64);
    const VectorXd y = testsupport::gaussian_vec(40, 65);
    PathConfig cfg;
    cfg.max_entered = 5;
    const EntryPath path = lasso_path(x, y, cfg);
    CHECK(path.entry_order.size() >= 5);
    CHECK(path.lambdas.size() < cfg.grid_size);
    CHECK(lasso_path(x, VectorXd::Zero(40), cfg).entry_order.empty());
    PathConfig bad;
    bad.grid_size = 1;
    CHECK_THROWS_AS(lasso_path(x, y, bad), ConfigError);
}

TEST_CASE("sqrt-lasso lambda for a single unit column", "[solvers]") {
    double prev = 1.0;
    for (Index n : {10, 40, 160}) {
        MatrixXd x = MatrixXd::Zero(n, 1);
        x(0, 0) = 1.0;
        const int reps = 4000;
        const double got = sqrt_lasso_lambda(x, 1.0, reps, 66);
        // E|u_1| for u uniform on the sphere in R^n.
        const double nn = static_cast<double>(n);
        const double exact = std::exp(std::lgamma(nn / 2.0) - std::lgamma((nn + 1.0) / 2.0)) / std::sqrt(std::numbers::pi);
        const double se = std::sqrt(1.0 / nn - exact * exact) / std::sqrt(static_cast<double>(reps));
        CHECK(std::abs(got - exact) <= 5.0 * se);
        CHECK(got > 0.0);
        CHECK(got < 1.0);
        CHECK(got < prev);
        prev = got;
    }
}

TEST_CASE("sqrt-lasso lambda scaling and determinism", "[solvers]") {
    const MatrixXd x = unit(50, 7, 67);
    CHECK(sqrt_lasso_lambda(x, 0.0, 100, 1) == 0.0);
    const double a = sqrt_lasso_lambda(x, 0.7, 300, 9);
    CHECK(sqrt_lasso_lambda(x, 1.4, 300, 9) == 2.0 * a);
    CHECK(sqrt_lasso_lambda(x, 0.7, 300, 9) == a);
    CHECK(sqrt_lasso_lambda(x, 0.7, 300, 10) != a);
    CHECK(sqrt_lasso_lambda(x, 0.7, 300, 9, SqrtLambdaMode::quantile95) > a);
    CHECK_THROWS_AS(sqrt_lasso_lambda(x, 0.7, 99, 9), ConfigError);
    CHECK_THROWS_AS(sqrt_lasso_lambda(x, -1.0, 100, 9), ConfigError);
    // Wide design: direct sampling path.
    const MatrixXd wide = unit(10, 30, 68);
    const double w = sqrt_lasso_lambda(wide, 1.0, 200, 3);
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
}

TEST_CASE("sqrt-lasso zero response and huge kappa give zeros", "[solvers]") {
    const MatrixXd x = unit(40, 6, 69);
    CHECK(sqrt_lasso(Design(x), Response(VectorXd::Zero(40)), 0.7, {}, 1).isZero(0.0));
    const VectorXd y = testsupport::gaussian_vec(40, 70);
    const double lam = sqrt_lasso_lambda(x, 10.0, 500, 2);
    REQUIRE(lam * y.norm() >= (x.transpose() * y).cwiseAbs().maxCoeff());
    CHECK(sqrt_lasso(Design(x), Response(y), 10.0, {}, 2).isZero(0.0));
}

TEST_CASE("sqrt-lasso optimality conditions", "[solvers]") {
    const MatrixXd x = unit(60, 10, 71);
    VectorXd beta = VectorXd::Zero(10);
    beta(0) = 2.0;
    beta(4) = -1.5;
    const VectorXd y = x * beta + 0.3 * testsupport::gaussian_vec(60, 72);
    const SqrtLassoFit fit = sqrt_lasso_fit(x, y, 0.7, {}, 3);
    const VectorXd r = y - x * fit.coef;
    CHECK_THAT(fit.residual_norm, WithinRel(r.norm(), 1e-9));
    const VectorXd g = x.transpose() * r / r.norm();
    for (Index j = 0; j < 10; ++j) {
        if (fit.coef(j) != 0.0)
            CHECK_THAT(g(j), WithinAbs(fit.lambda * sign_of(fit.coef(j)), 1e-5));
        else
            CHECK(std::abs(g(j)) <= fit.lambda + 1e-5);
    }
}

TEST_CASE("positive unconstrained solution equals the +1 constrained one", "[solvers]") {
    const MatrixXd x = unit(80, 6, 73);
    const VectorXd y = x * VectorXd::Constant(6, 2.0) + 0.2 * testsupport::gaussian_vec(80, 74);
    const VectorXd free = sqrt_lasso_fit(x, y, 0.7, {}, 4).coef;
    REQUIRE((free.array() >= 0.0).all());
    const VectorXd con = sqrt_lasso_fit(x, y, 0.7, SignConstraints{SignList(6, 1)}, 4).coef;
    CHECK((free - con).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("sqrt-lasso detects a vanishing residual", "[solvers]") {
    const MatrixXd x = MatrixXd::Identity(3, 3);
    VectorXd y(3);
    y << 1.0, -2.0, 0.5;
    CHECK_THROWS_AS(sqrt_lasso_at(x, y, 0.1), DegenerateFitError);
}

TEST_CASE("omp examples", "[solvers]") {
    const MatrixXd x = unit(30, 8, 75);
    const VectorXd y = testsupport::gaussian_vec(30, 76);
    Index best;
    (x.transpose() * y).cwiseAbs().maxCoeff(&best);
    CHECK(omp(x, y, 1).front() == best);

    const MatrixXd q = testsupport::orthonormal(20, 5, 77);
    const VectorXd yq = testsupport::gaussian_vec(20, 78);
    const VectorXd z = q.transpose() * yq;
    IndexList expect(5);
    std::iota(expect.begin(), expect.end(), Index{0});
    std::sort(expect.begin(), expect.end(), [&](Index a, Index b) { return std::abs(z(a)) > std::abs(z(b)); });
    CHECK(omp(Design(q), Response(yq), 5) == expect);

    const IndexList all = omp(x, y, 8);
    const MatrixXd xs = select_columns(x, all);
    const VectorXd r = y - xs * testsupport::normal_equations(xs, y);
    CHECK((x.transpose() * r).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(std::set<Index>(all.begin(), all.end()).size() == 8);
}

TEST_CASE("omp stops once the residual is exhausted", "[solvers]") {
    const MatrixXd q = testsupport::orthonormal(20, 5, 79);
    const VectorXd y = 2.0 * q.col(1) + q.col(3);
    CHECK(omp(q, y, 5, true) == IndexList{1, 3});
}

TEST_CASE("omp rejects rank collapse and bad k", "[solvers]") {
    MatrixXd x = unit(10, 2, 80);
    x.col(1) = x.col(0);
    CHECK_THROWS_AS(omp(x, testsupport::gaussian_vec(10, 81), 2), SingularDesignError);
    CHECK_THROWS_AS(omp(x, testsupport::gaussian_vec(10, 81), 3), ConfigError);
}
