#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "knockoff/csv.hpp"
#include "knockoff/filter.hpp"
#include "knockoff/knockoffs.hpp"
#include "knockoff/oracles.hpp"
#include "knockoff/pipeline.hpp"
#include "knockoff/random.hpp"
#include "knockoff/solvers.hpp"

namespace knockoff::oracle {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline Design random_unit_design(Index n, Index p, Rng& rng) { return normalize_columns(Design(gaussian_matrix(n, p, rng))); }

inline std::string num(double v) { return csv::format_number(v); }

}  // namespace detail

/// Reduced-size oracle battery behind the `verify` command.
inline std::vector<CheckResult> run_battery(std::uint64_t seed) {
    std::vector<CheckResult> out;
    Rng rng(seed);

    {
        double worst = 0.0;
        double agree = 0.0;
        for (int t = 0; t < 20; ++t) {
            const Design x = detail::random_unit_design(100, 20, rng);
            const KnockoffPair pair =
                construct_knockoffs(x, equicorrelated_s(x.values().transpose() * x.values()), derive_seed(seed, {1, static_cast<std::uint64_t>(t)}));
            const GramReport g = gram_check(pair);
            const GramResiduals r = pair.residuals();
            worst = std::max(worst, g.max());
            agree = std::max({agree, std::abs(g.gram_diff - r.gram_diff), std::abs(g.cross_diff - r.cross_diff),
                              std::abs(g.diff_diag - r.diff_diag), std::abs(g.diff_sum - r.diff_sum)});
        }
        out.push_back({"gram-contract", worst <= 1e-8 && agree <= 1e-10,
                       "max residual " + detail::num(worst) + ", path disagreement " + detail::num(agree)});
    }

    {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double floors[] = {0.3, 0.5, 0.7};
        double worst_gap = -1e300;
        for (int t = 0; t < 150; ++t) {
            BernoulliStoppingInstance inst;
            inst.rho_floor = floors[t % 3];
            const int n = 1 + t % 10;
            for (int i = 0; i < n; ++i) inst.rho.push_back(inst.rho_floor + (1.0 - inst.rho_floor) * unit(rng));
            inst.rule.a = 1.0;
            inst.rule.w = unit(rng);
            inst.rule.c = 0.2 + 2.0 * unit(rng);
            worst_gap = std::max(worst_gap, lemma1_exact(inst) - 1.0 / inst.rho_floor);
        }
        out.push_back({"lemma1-enumeration", worst_gap <= 1e-12, "max excess over bound " + detail::num(worst_gap)});
    }

    {
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            VectorXd x = gaussian_vector(15, rng);
            x.normalize();
            const VectorXd y = gaussian_vector(15, rng);
            const double lam = std::abs(x.dot(y)) * 1.5 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            LassoConfig cfg;
            cfg.lambda = lam;
            const double got = lasso_fit(MatrixXd(x), y, cfg).coef(0);
            worst = std::max(worst, std::abs(got - scalar_lasso_oracle(x, y, lam)));
        }
        out.push_back({"scalar-lasso", worst <= 1e-8, "max deviation " + detail::num(worst)});
    }

    {
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            const MatrixXd x = detail::random_unit_design(40, 25, rng).values();
            const VectorXd y = gaussian_vector(40, rng);
            LassoConfig cfg;
            cfg.lambda = 0.3 * (x.transpose() * y).cwiseAbs().maxCoeff();
            const VectorXd b = lasso_fit(x, y, cfg).coef;
            const VectorXd g = x.transpose() * (y - x * b);
            for (Index j = 0; j < b.size(); ++j) {
                const double v = b(j) == 0.0 ? std::max(0.0, std::abs(g(j)) - cfg.lambda)
                                             : std::abs(g(j) - cfg.lambda * sign_of(b(j)));
                worst = std::max(worst, v);
            }
        }
        out.push_back({"lasso-kkt", worst <= 1e-6, "max KKT violation " + detail::num(worst)});
    }

    {
        bool ok = true;
        for (int t = 0; t < 3 && ok; ++t) {
            const Design x = detail::random_unit_design(60, 8, rng);
            const VectorXd s = equicorrelated_s(x.values().transpose() * x.values());
            const KnockoffPair pair = construct_knockoffs(x, s, derive_seed(seed, {2, static_cast<std::uint64_t>(t)}));
            VectorXd beta = VectorXd::Zero(8);
            beta(0) = 3.0;
            beta(3) = -3.0;
            const VectorXd y = x.values() * beta + gaussian_vector(60, rng);
            StatOptions opt;
            opt.rule = StatRule::coef_diff;
            opt.sqrt.mc_reps = 200;
            opt.seed = derive_seed(seed, {3, static_cast<std::uint64_t>(t)});
            ok = swap_antisymmetry_check(opt, pair.X.values(), pair.X_tilde.values(), y, s, {0, 2, 5}, 1e-8);
        }
        out.push_back({"swap-antisymmetry", ok, ok ? "coef-diff flips on swapped pairs" : "mismatch"});
    }

    {
        struct Case {
            std::vector<double> p;
            double q;
            IndexList expect;
        };
        const std::vector<Case> table = {
            {{0.01, 0.04, 0.5}, 0.1, {0, 1}},
            {{1.0, 1.0, 1.0}, 0.1, {}},
            {{0.05}, 0.1, {0}},
            {{0.2, 0.01, 0.03, 0.9}, 0.1, {1, 2}},
        };
        bool ok = true;
        for (const Case& c : table) ok = ok && bh_stepup(c.p, c.q) == c.expect;
        out.push_back({"bh-stepup", ok, ok ? "hand table reproduced" : "mismatch"});
    }

    {
        const StatVector w{(VectorXd(3) << 3.0, -1.0, 2.0).finished(), StatRule::coef_diff};
        const bool ok = knockoff_threshold(w, 0.5, false) == 1.0 && knockoff_threshold(w, 0.5, true) == 2.0;
        out.push_back({"knockoff-threshold", ok, ok ? "candidate enumeration reproduced" : "mismatch"});
    }
    return out;
}

}  // namespace knockoff::oracle
