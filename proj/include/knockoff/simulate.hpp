#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "knockoff/errors.hpp"
#include "knockoff/filter.hpp"
#include "knockoff/metrics.hpp"
#include "knockoff/model.hpp"
#include "knockoff/pipeline.hpp"
#include "knockoff/random.hpp"
#include "knockoff/screening.hpp"

namespace knockoff {

enum class DesignKind { ar, gaussian_general };

inline std::string to_string(DesignKind k) { return k == DesignKind::ar ? "ar" : "gaussian-general"; }

inline DesignKind parse_design_kind(const std::string& s) {
    if (s == "ar") return DesignKind::ar;
    if (s == "gaussian-general") return DesignKind::gaussian_general;
    throw ConfigError("unknown design kind '" + s + "' (expected ar or gaussian-general)");
}

/// ar: rows N(0, Sigma) with Sigma_jk = rho^|j-k|, columns normalized; the design is
/// drawn once per setting. gaussian-general: rows N(nu, psi) scaled by 1/sqrt(n), no
/// data-dependent normalization; optionally redrawn every trial.
struct DesignSpec {
    DesignKind kind = DesignKind::ar;
    Index n = 600;
    Index p = 800;
    double rho = 0.0;
    VectorXd nu;   // empty: zero mean
    MatrixXd psi;  // required for gaussian-general
    bool redraw_per_trial = false;

    void check() const {
        if (n < 1 || p < 1) throw ConfigError("design needs n, p >= 1");
        if (kind == DesignKind::ar) {
            if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
            return;
        }
        if (psi.rows() != p || psi.cols() != p) throw ConfigError("psi must be p x p");
        if ((psi - psi.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw ConfigError("psi must be symmetric");
        if (nu.size() != 0 && nu.size() != p) throw ConfigError("nu must have length p");
    }
};

struct CoefSpec {
    Index k0 = 10;
    Index k1 = 40;
    double strong_amp = 4.5;
    double weak_sd = std::sqrt(0.5);

    void check(Index p) const {
        if (k0 < 0 || k1 < 0 || k0 + k1 > p) throw ConfigError("need 0 <= k0, k1 and k0 + k1 <= p");
        if (!(strong_amp > 0.0)) throw ConfigError("strong_amp must be positive");
        if (!(weak_sd > 0.0)) throw ConfigError("weak_sd must be positive");
    }
};

struct CoefDraw {
    VectorXd beta;
    IndexList strong;  // sorted
    IndexList weak;    // sorted
};

/// y ~ N(mu, theta).
struct GeneralGaussianResponse {
    VectorXd mu;
    MatrixXd theta;

    Response sample(std::uint64_t seed) const {
        if (theta.rows() != mu.size() || theta.cols() != mu.size()) throw DimensionError("theta must be n x n");
        Eigen::LDLT<MatrixXd> ldlt(theta);
        if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < -1e-12).any())
            throw DegenerateInputError("theta is not positive semidefinite");
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(theta);
        const MatrixXd root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        Rng rng(seed);
        return Response(mu + root * gaussian_vector(mu.size(), rng));
    }
};

inline MatrixXd ar_covariance(Index p, double rho) {
    MatrixXd s(p, p);
    for (Index j = 0; j < p; ++j)
        for (Index k = 0; k < p; ++k) s(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
    return s;
}

inline Design gen_ar_design(Index n, Index p, double rho, std::uint64_t seed) {
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
    Rng rng(seed);
    MatrixXd x = gaussian_matrix(n, p, rng);
    const double c = std::sqrt(1.0 - rho * rho);
    for (Index j = 1; j < p; ++j) x.col(j) = rho * x.col(j - 1) + c * x.col(j);
    return normalize_columns(Design(std::move(x)));
}

inline Design gen_gaussian_design(const DesignSpec& spec, std::uint64_t seed) {
    spec.check();
    Eigen::LLT<MatrixXd> llt(spec.psi);
    if (llt.info() != Eigen::Success) throw DegenerateInputError("psi is not positive definite");
    Rng rng(seed);
    MatrixXd x = gaussian_matrix(spec.n, spec.p, rng) * llt.matrixU();
    if (spec.nu.size() == spec.p) x.rowwise() += spec.nu.transpose();
    x /= std::sqrt(static_cast<double>(spec.n));
    return Design(std::move(x));
}

inline Design gen_design(const DesignSpec& spec, std::uint64_t seed) {
    spec.check();
    return spec.kind == DesignKind::ar ? gen_ar_design(spec.n, spec.p, spec.rho, seed) : gen_gaussian_design(spec, seed);
}

inline CoefDraw gen_coefficients(const CoefSpec& spec, Index p, std::uint64_t seed) {
    spec.check(p);
    Rng rng(seed);
    IndexList idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Index{0});
    const Index k = spec.k0 + spec.k1;
    for (Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, p - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    CoefDraw out;
    out.beta = VectorXd::Zero(p);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> weak(0.0, spec.weak_sd);
    for (Index i = 0; i < spec.k0; ++i) {
        const Index j = idx[static_cast<std::size_t>(i)];
        out.beta(j) = coin(rng) ? spec.strong_amp : -spec.strong_amp;
        out.strong.push_back(j);
    }
    for (Index i = spec.k0; i < k; ++i) {
        const Index j = idx[static_cast<std::size_t>(i)];
        out.beta(j) = weak(rng);
        out.weak.push_back(j);
    }
    std::sort(out.strong.begin(), out.strong.end());
    std::sort(out.weak.begin(), out.weak.end());
    return out;
}

inline Response gen_response(const Design& X, const VectorXd& beta, double sigma, std::uint64_t seed) {
    if (beta.size() != X.cols()) throw DimensionError("beta length does not match design columns");
    if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
    Rng rng(seed);
    VectorXd y = X.values() * beta;
    if (sigma > 0.0) y += sigma * gaussian_vector(X.rows(), rng);
    return Response(std::move(y));
}

/// E[y_i | x_{i,s0}] for Gaussian rows: the unscreened part of x_i beta is replaced by
/// its regression on x_{i,s0}.
inline VectorXd gaussian_conditional_mean(const Design& X, const DesignSpec& spec, const VectorXd& beta,
                                          const IndexList& s0) {
    const Index p = X.cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.n));
    const VectorXd nu = spec.nu.size() == p ? VectorXd(spec.nu * scale) : VectorXd::Zero(p);
    std::vector<char> in(static_cast<std::size_t>(p), 0);
    for (Index j : s0) in[static_cast<std::size_t>(j)] = 1;
    IndexList rest;
    for (Index j = 0; j < p; ++j)
        if (!in[static_cast<std::size_t>(j)]) rest.push_back(j);
    const VectorXd beta_c = select_entries(beta, rest);
    if (s0.empty()) return VectorXd::Constant(X.rows(), select_entries(nu, rest).dot(beta_c));

    MatrixXd psi_ss(static_cast<Index>(s0.size()), static_cast<Index>(s0.size()));
    MatrixXd psi_sc(static_cast<Index>(s0.size()), static_cast<Index>(rest.size()));
    for (std::size_t a = 0; a < s0.size(); ++a) {
        for (std::size_t b = 0; b < s0.size(); ++b) psi_ss(static_cast<Index>(a), static_cast<Index>(b)) = spec.psi(s0[a], s0[b]);
        for (std::size_t b = 0; b < rest.size(); ++b) psi_sc(static_cast<Index>(a), static_cast<Index>(b)) = spec.psi(s0[a], rest[b]);
    }
    const VectorXd v = psi_ss.llt().solve(psi_sc * beta_c);
    const VectorXd beta_s = select_entries(beta, s0);
    const double offset = select_entries(nu, rest).dot(beta_c) - select_entries(nu, s0).dot(v);
    return select_columns(X.values(), s0) * (beta_s + v) + VectorXd::Constant(X.rows(), offset);
}

// ---------------------------------------------------------------------------
// Experiments

enum class MethodKind { knockoff_lowdim, knockoff_highdim, bh };

inline std::string to_string(MethodKind k) {
    switch (k) {
        case MethodKind::knockoff_lowdim: return "knockoff-lowdim";
        case MethodKind::knockoff_highdim: return "knockoff";
        case MethodKind::bh: return "bh";
    }
    return "unknown";
}

inline MethodKind parse_method_kind(const std::string& s) {
    if (s == "knockoff-lowdim") return MethodKind::knockoff_lowdim;
    if (s == "knockoff") return MethodKind::knockoff_highdim;
    if (s == "bh") return MethodKind::bh;
    throw ConfigError("unknown method kind '" + s + "' (expected knockoff-lowdim, knockoff or bh)");
}

/// For knockoff-lowdim only q, plus, statistic, kappa, stat_path and sqrt are used.
struct MethodSpec {
    std::string name;
    MethodKind kind = MethodKind::knockoff_highdim;
    PipelineConfig cfg;
};

struct ExperimentSpec {
    DesignSpec design;
    CoefSpec coefs;
    double sigma = 1.0;
    std::vector<MethodSpec> methods;
    Index trials = 100;
    std::uint64_t seed = 0;
    std::uint64_t setting = 0;
    unsigned threads = 0;  // 0: hardware concurrency

    void check() const {
        design.check();
        coefs.check(design.p);
        if (trials < 1) throw ConfigError("trials must be at least 1");
        if (methods.empty()) throw ConfigError("at least one method is required");
        if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
    }
};

struct TrialRecord {
    std::uint64_t setting = 0;
    Index trial = 0;
    std::string method;
    bool ok = true;
    std::string error;
    TrialScore full;
    double fdp_dir_partial = std::numeric_limits<double>::quiet_NaN();
    double mfdr_dir_partial = std::numeric_limits<double>::quiet_NaN();
    int sure_screen = 1;
    Index s0_size = 0;
    Index w_pos = 0;
    Index w_neg = 0;
};

struct MethodSummary {
    std::string method;
    Index ok = 0;
    Index failures = 0;
    MeanSe fdr, fdr_dir, mfdr_dir, power, restricted_power, n_selected;
    MeanSe fdr_dir_partial, mfdr_dir_partial;
    MeanSe sure_screen;
    MeanSe fdr_dir_given_sure;
    Index w_pos = 0;
    Index w_neg = 0;
};

struct ExperimentReport {
    std::uint64_t setting = 0;
    Index trials = 0;
    std::vector<TrialRecord> records;  // trial-major, then method order
    std::vector<MethodSummary> summaries;
};

namespace detail {

inline void count_signs(const StatVector& w, TrialRecord& rec) {
    for (Index j = 0; j < w.size(); ++j) {
        if (w.w(j) > 0.0) ++rec.w_pos;
        if (w.w(j) < 0.0) ++rec.w_neg;
    }
}

inline void score_partial(TrialRecord& rec, const SelectionResult& sel, const ScreenStage& st, const VectorXd& mu_full,
                          Index p, double q) {
    if (st.screen.s0.empty()) {
        rec.fdp_dir_partial = 0.0;
        rec.mfdr_dir_partial = 0.0;
        return;
    }
    const VectorXd bp = partial_coefficients(st.part1_columns(), st.part1_of(mu_full));
    SignList ts(static_cast<std::size_t>(p), 0);
    for (std::size_t k = 0; k < st.screen.s0.size(); ++k) ts[static_cast<std::size_t>(st.screen.s0[k])] = sign_of(bp(static_cast<Index>(k)));
    rec.fdp_dir_partial = fdp_dir(sel.selected, sel.signs, ts);
    rec.mfdr_dir_partial = mfdr_dir_summand(sel.selected, sel.signs, ts, q);
}

}  // namespace detail

/// Run every configured method on one trial's data. The methods share the trial's
/// pipeline seed, so they see the same split, rotation and knockoff randomness.
inline std::vector<TrialRecord> run_trial(const ExperimentSpec& spec, const Design& X, const CoefDraw& coefs,
                                          Index trial) {
    const std::uint64_t master = spec.seed;
    const LinearModelSpec truth(coefs.beta, spec.sigma);
    const Response y = gen_response(X, coefs.beta, spec.sigma,
                                    derive_seed(master, {spec.setting, static_cast<std::uint64_t>(trial), stream::noise}));
    const std::uint64_t pseed =
        derive_seed(master, {spec.setting, static_cast<std::uint64_t>(trial), stream::pipeline});
    const VectorXd mu_fixed = X.values() * coefs.beta;

    std::vector<TrialRecord> out;
    for (const MethodSpec& m : spec.methods) {
        TrialRecord rec;
        rec.setting = spec.setting;
        rec.trial = trial;
        rec.method = m.name;
        PipelineConfig cfg = m.cfg;
        cfg.seed = pseed;
        try {
            if (m.kind == MethodKind::knockoff_lowdim) {
                StatOptions opt;
                opt.rule = cfg.statistic;
                opt.kappa = cfg.kappa;
                opt.path = cfg.stat_path;
                opt.sqrt = cfg.sqrt;
                const LowDimResult r = knockoff_filter_lowdim_run(X, y, cfg.q, opt, cfg.plus, pseed);
                rec.full = score_selection(r.selection.selected, r.selection.signs, truth, coefs.strong, cfg.q);
                rec.s0_size = X.cols();
                detail::count_signs(r.w, rec);
            } else {
                const SelectionResult* sel = nullptr;
                const ScreenStage* st = nullptr;
                HighDimResult hr;
                BaselineResult br;
                if (m.kind == MethodKind::knockoff_highdim) {
                    hr = knockoff_filter_highdim_run(X, y, cfg);
                    sel = &hr.selection;
                    st = &hr.stage;
                    detail::count_signs(hr.w, rec);
                } else {
                    br = bh_baseline_run(X, y, cfg);
                    sel = &br.selection;
                    st = &br.stage;
                }
                rec.full = score_selection(sel->selected, sel->signs, truth, coefs.strong, cfg.q);
                rec.s0_size = static_cast<Index>(st->screen.s0.size());
                rec.sure_screen = sure_screen_event(st->screen, truth.support(), st->split.n1) ? 1 : 0;
                const VectorXd mu = spec.design.kind == DesignKind::gaussian_general
                                        ? gaussian_conditional_mean(X, spec.design, coefs.beta, st->screen.s0)
                                        : mu_fixed;
                detail::score_partial(rec, *sel, *st, mu, X.cols(), cfg.q);
            }
        } catch (const NumericalError& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<MethodSummary> summarize(const ExperimentSpec& spec, const std::vector<TrialRecord>& records) {
    std::vector<MethodSummary> out;
    for (const MethodSpec& m : spec.methods) {
        MethodSummary s;
        s.method = m.name;
        std::vector<double> fdr, dir, mfdr, pw, rpw, nsel, dirp, mfdrp, sure, dir_sure;
        for (const TrialRecord& r : records) {
            if (r.method != m.name) continue;
            if (!r.ok) {
                ++s.failures;
                continue;
            }
            ++s.ok;
            fdr.push_back(r.full.fdp);
            dir.push_back(r.full.fdp_dir);
            mfdr.push_back(r.full.mfdr_dir_summand);
            pw.push_back(r.full.power);
            rpw.push_back(r.full.restricted_power);
            nsel.push_back(static_cast<double>(r.full.n_selected));
            if (!std::isnan(r.fdp_dir_partial)) dirp.push_back(r.fdp_dir_partial);
            if (!std::isnan(r.mfdr_dir_partial)) mfdrp.push_back(r.mfdr_dir_partial);
            sure.push_back(static_cast<double>(r.sure_screen));
            if (r.sure_screen == 1) dir_sure.push_back(r.full.fdp_dir);
            s.w_pos += r.w_pos;
            s.w_neg += r.w_neg;
        }
        s.fdr = mean_se(fdr);
        s.fdr_dir = mean_se(dir);
        s.mfdr_dir = mean_se(mfdr);
        s.power = mean_se(pw);
        s.restricted_power = mean_se(rpw);
        s.n_selected = mean_se(nsel);
        s.fdr_dir_partial = mean_se(dirp);
        s.mfdr_dir_partial = mean_se(mfdrp);
        s.sure_screen = mean_se(sure);
        s.fdr_dir_given_sure = mean_se(dir_sure);
        out.push_back(std::move(s));
    }
    return out;
}

/// Draw beta (and the design, unless it is redrawn per trial) once, then run the
/// trials in parallel. Records are reduced in trial order, so the report does not
/// depend on the thread count.
inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
    spec.check();
    const std::uint64_t master = spec.seed;
    const CoefDraw coefs = gen_coefficients(spec.coefs, spec.design.p, derive_seed(master, {spec.setting, stream::coefficients}));
    Design shared;
    if (!spec.design.redraw_per_trial) shared = gen_design(spec.design, derive_seed(master, {spec.setting, stream::design}));

    const auto trials = static_cast<std::size_t>(spec.trials);
    std::vector<std::vector<TrialRecord>> per_trial(trials);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        while (true) {
            const std::size_t t = next.fetch_add(1);
            if (t >= trials) return;
            try {
                const auto ti = static_cast<Index>(t);
                if (spec.design.redraw_per_trial) {
                    const Design x = gen_design(spec.design, derive_seed(master, {spec.setting, t, stream::design}));
                    per_trial[t] = run_trial(spec, x, coefs, ti);
                } else {
                    per_trial[t] = run_trial(spec, shared, coefs, ti);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next.store(trials);
                return;
            }
        }
    };
    unsigned nthreads = spec.threads > 0 ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = static_cast<unsigned>(std::min<std::size_t>(nthreads, trials));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentReport rep;
    rep.setting = spec.setting;
    rep.trials = spec.trials;
    for (auto& block : per_trial)
        for (auto& r : block) rep.records.push_back(std::move(r));
    rep.summaries = summarize(spec, rep.records);
    return rep;
}

}  // namespace knockoff
