#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "knockoff/csv.hpp"
#include "knockoff/errors.hpp"
#include "knockoff/pipeline.hpp"
#include "knockoff/simulate.hpp"

namespace knockoff::config {

using nlohmann::json;

/// Parsed experiment file: one ExperimentSpec per design setting (rho value).
struct ExperimentFile {
    json raw;
    std::optional<std::uint64_t> seed;
    std::vector<double> rho_values;
    ExperimentSpec base;
};

namespace detail {

inline void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& where, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline PathConfig parse_path(const json& j, const std::string& where, PathConfig out) {
    check_keys(j, where, {"grid_size", "lambda_min_ratio", "tol", "max_iters"});
    out.grid_size = get<int>(j, "grid_size", where, out.grid_size);
    out.lambda_min_ratio = get<double>(j, "lambda_min_ratio", where, out.lambda_min_ratio);
    out.tol = get<double>(j, "tol", where, out.tol);
    out.max_iters = get<int>(j, "max_iters", where, out.max_iters);
    out.check();
    return out;
}

inline SqrtLassoConfig parse_sqrt(const json& j, const std::string& where) {
    check_keys(j, where, {"mc_reps", "lambda_mode", "rel_tol", "max_outer"});
    SqrtLassoConfig out;
    out.mc_reps = get<int>(j, "mc_reps", where, out.mc_reps);
    const auto mode = get<std::string>(j, "lambda_mode", where, "mean");
    if (mode == "mean")
        out.lambda_mode = SqrtLambdaMode::mean;
    else if (mode == "quantile95")
        out.lambda_mode = SqrtLambdaMode::quantile95;
    else
        throw ConfigError(where + ".lambda_mode must be mean or quantile95");
    out.rel_tol = get<double>(j, "rel_tol", where, out.rel_tol);
    out.max_outer = get<int>(j, "max_outer", where, out.max_outer);
    if (out.mc_reps < 100) throw ConfigError(where + ".mc_reps must be at least 100");
    return out;
}

inline MethodSpec parse_method(const json& j, std::size_t idx, double default_q) {
    const std::string where = "methods[" + std::to_string(idx) + "]";
    check_keys(j, where,
               {"name", "kind", "mode", "q", "n0", "k_max", "statistic", "sign_restricted", "plus", "rotate",
                "prescreen_m", "kappa", "screen_path", "stat_path", "sqrt"});
    MethodSpec m;
    m.kind = parse_method_kind(get<std::string>(j, "kind", where, "knockoff"));
    m.name = get<std::string>(j, "name", where, to_string(m.kind) + "-" + std::to_string(idx));
    PipelineConfig& c = m.cfg;
    c.q = get<double>(j, "q", where, default_q);
    c.mode = parse_inference_mode(get<std::string>(j, "mode", where, "recycle"));
    c.n0 = get<Index>(j, "n0", where, 0);
    c.k_max = get<Index>(j, "k_max", where, 0);
    c.statistic = parse_stat_rule(get<std::string>(j, "statistic", where,
                                                   m.kind == MethodKind::knockoff_lowdim ? "lasso-entry" : "coef-diff"));
    c.sign_restricted = get<bool>(j, "sign_restricted", where, m.kind == MethodKind::knockoff_highdim);
    c.plus = get<bool>(j, "plus", where, true);
    c.rotate = get<bool>(j, "rotate", where, false);
    c.prescreen_m = get<Index>(j, "prescreen_m", where, 0);
    c.kappa = get<double>(j, "kappa", where, c.mode == InferenceMode::split ? 0.5 : 0.7);
    if (j.contains("screen_path")) c.screen_path = parse_path(j.at("screen_path"), where + ".screen_path", c.screen_path);
    if (j.contains("stat_path")) c.stat_path = parse_path(j.at("stat_path"), where + ".stat_path", c.stat_path);
    if (j.contains("sqrt")) c.sqrt = parse_sqrt(j.at("sqrt"), where + ".sqrt");
    check_q(c.q);
    if (m.kind != MethodKind::knockoff_lowdim && c.n0 < 1) throw ConfigError(where + ".n0 is required (>= 1)");
    return m;
}

}  // namespace detail

inline ExperimentFile parse_experiment(const json& root, const std::filesystem::path& base_dir = {}) {
    using detail::get;
    detail::check_keys(root, "config", {"seed", "trials", "threads", "q", "sigma", "design", "coefficients", "methods"});
    ExperimentFile f;
    f.raw = root;
    if (root.contains("seed")) f.seed = get<std::uint64_t>(root, "seed", "config", 0);
    ExperimentSpec& e = f.base;
    e.trials = get<Index>(root, "trials", "config", 100);
    e.threads = get<unsigned>(root, "threads", "config", 0);
    e.sigma = get<double>(root, "sigma", "config", 1.0);
    const double q = get<double>(root, "q", "config", 0.2);

    if (!root.contains("design")) throw ConfigError("config needs a design section");
    const json& d = root.at("design");
    detail::check_keys(d, "design",
                       {"kind", "n", "p", "rho", "rho_values", "redraw_per_trial", "nu", "psi_ar_rho", "psi_csv"});
    e.design.kind = parse_design_kind(get<std::string>(d, "kind", "design", "ar"));
    e.design.n = get<Index>(d, "n", "design", 600);
    e.design.p = get<Index>(d, "p", "design", 800);
    e.design.rho = get<double>(d, "rho", "design", 0.0);
    e.design.redraw_per_trial = get<bool>(d, "redraw_per_trial", "design", false);
    f.rho_values = get<std::vector<double>>(d, "rho_values", "design", {e.design.rho});
    if (f.rho_values.empty()) throw ConfigError("design.rho_values must not be empty");
    if (e.design.kind == DesignKind::gaussian_general) {
        if (d.contains("psi_csv")) {
            e.design.psi = csv::read_matrix(base_dir / get<std::string>(d, "psi_csv", "design", ""));
        } else {
            const double r = get<double>(d, "psi_ar_rho", "design", 0.0);
            if (!(r >= 0.0 && r < 1.0)) throw ConfigError("design.psi_ar_rho must lie in [0, 1)");
            e.design.psi = ar_covariance(e.design.p, r);
        }
        if (d.contains("nu")) {
            if (d.at("nu").is_number()) {
                e.design.nu = VectorXd::Constant(e.design.p, d.at("nu").get<double>());
            } else {
                const auto v = get<std::vector<double>>(d, "nu", "design", {});
                e.design.nu = Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
            }
        }
    }

    if (root.contains("coefficients")) {
        const json& c = root.at("coefficients");
        detail::check_keys(c, "coefficients", {"k0", "k1", "strong_amp", "weak_sd"});
        e.coefs.k0 = get<Index>(c, "k0", "coefficients", e.coefs.k0);
        e.coefs.k1 = get<Index>(c, "k1", "coefficients", e.coefs.k1);
        e.coefs.strong_amp = get<double>(c, "strong_amp", "coefficients", e.coefs.strong_amp);
        e.coefs.weak_sd = get<double>(c, "weak_sd", "coefficients", e.coefs.weak_sd);
    }

    if (!root.contains("methods") || !root.at("methods").is_array())
        throw ConfigError("config needs a methods array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < root.at("methods").size(); ++i) {
        MethodSpec m = detail::parse_method(root.at("methods")[i], i, q);
        if (!names.insert(m.name).second) throw ConfigError("duplicate method name '" + m.name + "'");
        e.methods.push_back(std::move(m));
    }
    return f;
}

inline ExperimentFile load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_experiment(root, path.parent_path());
}

/// Apply command-line overrides and expand rho_values into one spec per setting.
inline std::vector<ExperimentSpec> expand(const ExperimentFile& f, std::uint64_t seed, std::optional<double> q,
                                          std::optional<Index> trials, std::optional<unsigned> threads,
                                          bool sweep) {
    std::vector<ExperimentSpec> out;
    const std::vector<double> rhos = sweep ? f.rho_values : std::vector<double>{f.base.design.rho};
    for (std::size_t s = 0; s < rhos.size(); ++s) {
        ExperimentSpec e = f.base;
        e.seed = seed;
        e.setting = s;
        e.design.rho = rhos[s];
        if (e.design.kind == DesignKind::gaussian_general && sweep && f.rho_values.size() > 1)
            e.design.psi = ar_covariance(e.design.p, rhos[s]);
        if (trials) e.trials = *trials;
        if (threads) e.threads = *threads;
        if (q)
            for (auto& m : e.methods) m.cfg.q = *q;
        e.check();
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace knockoff::config
