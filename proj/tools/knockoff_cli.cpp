#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "knockoff/knockoff.hpp"

namespace fs = std::filesystem;
using namespace knockoff;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNumericalError = 2;
constexpr int kVerifyFailed = 3;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::optional<unsigned> threads;
    std::optional<double> q;
    std::optional<Index> trials;
    std::string design;
    std::string response;
    std::string statistic = "lasso-entry";
    bool no_plus = false;
};

fs::path prepare_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir);
    return fs::path(dir);
}

std::uint64_t require_seed(const Options& o, const std::optional<std::uint64_t>& from_config = std::nullopt) {
    if (o.seed) return *o.seed;
    if (from_config) return *from_config;
    throw ConfigError("a seed is required (--seed or \"seed\" in the config)");
}

int cmd_construct(const Options& o) {
    if (o.design.empty()) throw ConfigError("construct needs --design");
    const std::uint64_t seed = require_seed(o);
    const Design x = csv::read_design(o.design);
    const Design xn = normalize_columns(x);
    const VectorXd s = equicorrelated_s(xn.values().transpose() * xn.values());
    const KnockoffPair pair = construct_knockoffs(xn, s, seed);
    // Report X-tilde on the input column scale.
    const VectorXd& c = xn.column_norms();
    const MatrixXd xt = pair.X_tilde.values() * c.asDiagonal();
    const VectorXd s_scaled = s.cwiseProduct(c.cwiseAbs2());
    const fs::path out = prepare_out(o.out);
    csv::write_atomic(out / "knockoffs.csv", csv::matrix_to_string(xt));
    csv::write_atomic(out / "s.csv", csv::matrix_to_string(s_scaled));
    std::cout << "wrote " << (out / "knockoffs.csv").string() << " and " << (out / "s.csv").string() << "\n";
    return kOk;
}

int cmd_experiment(const Options& o, bool sweep) {
    if (o.config.empty()) throw ConfigError("--config is required");
    const config::ExperimentFile file = config::load_experiment(o.config);
    const std::uint64_t seed = require_seed(o, file.seed);
    const std::vector<ExperimentSpec> specs = config::expand(file, seed, o.q, o.trials, o.threads, sweep);
    std::vector<ExperimentReport> reports;
    for (const ExperimentSpec& spec : specs) {
        reports.push_back(run_experiment(spec));
        for (const MethodSummary& m : reports.back().summaries)
            std::cerr << "rho=" << csv::format_number(spec.design.rho) << " " << m.method << ": Dir.FDR "
                      << csv::format_number(m.fdr_dir.mean) << " power " << csv::format_number(m.power.mean)
                      << " restr.power " << csv::format_number(m.restricted_power.mean) << " (" << m.ok
                      << " ok, " << m.failures << " failed)\n";
    }
    const fs::path out = prepare_out(o.out);
    nlohmann::json echo = file.raw;
    echo["seed"] = seed;
    if (o.q) echo["q_override"] = *o.q;
    if (o.trials) echo["trials"] = *o.trials;
    csv::write_atomic(out / "config_used.json", echo.dump(2) + "\n");
    csv::write_atomic(out / "trials.csv", report::trials_csv(specs, reports));
    csv::write_atomic(out / "summary.csv", report::summary_csv(specs, reports));
    if (sweep) csv::write_atomic(out / "plot.csv", report::plot_csv(specs, reports));
    return kOk;
}

int cmd_verify(const Options& o) {
    const auto results = oracle::run_battery(o.seed.value_or(20240607));
    bool all = true;
    csv::Table t({"check", "passed", "detail"});
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        t.row().add(r.name).add(r.passed ? 1 : 0).add(r.detail);
        all = all && r.passed;
    }
    if (o.out != ".") csv::write_atomic(prepare_out(o.out) / "verify.csv", t.str());
    return all ? kOk : kVerifyFailed;
}

int cmd_select(const Options& o) {
    if (o.design.empty() || o.response.empty()) throw ConfigError("select needs --design and --response");
    const std::uint64_t seed = require_seed(o);
    const Design x = csv::read_design(o.design);
    const Response y = csv::read_response(o.response);
    StatOptions opt;
    opt.rule = parse_stat_rule(o.statistic);
    const double q = o.q.value_or(0.2);
    const LowDimResult r = knockoff_filter_lowdim_run(x, y, q, opt, !o.no_plus, seed);
    const fs::path out = prepare_out(o.out);
    csv::write_atomic(out / "selection.csv", report::selection_csv(r.selection));
    csv::Table w({"index", "W"});
    for (Index j = 0; j < r.w.size(); ++j) w.row().add(static_cast<long long>(j)).add(r.w.w(j));
    csv::write_atomic(out / "statistics.csv", w.str());
    std::cout << r.selection.selected.size() << " selected, threshold " << csv::format_number(r.selection.threshold)
              << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knockoff filter with screening, splitting and recycling"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--seed", o.seed, "Master seed");
        c->add_option("--out", o.out, "Output directory");
    };

    auto* construct = app.add_subcommand("construct", "Build knockoffs for a design CSV");
    add_common(construct);
    construct->add_option("--design", o.design, "Headerless numeric CSV, rows are observations")->required();

    auto* run = app.add_subcommand("run", "Run one experiment setting from a config file");
    auto* simulate = app.add_subcommand("simulate", "Run an experiment over every rho in design.rho_values");
    for (auto* c : {run, simulate}) {
        add_common(c);
        c->add_option("--config", o.config, "Experiment config (JSON)")->required();
        c->add_option("--threads", o.threads, "Worker threads (default: hardware concurrency)");
        c->add_option("--q", o.q, "Override the target level of every method");
        c->add_option("--trials", o.trials, "Override the trial count");
    }

    auto* verify = app.add_subcommand("verify", "Run the oracle battery");
    add_common(verify);

    auto* sel = app.add_subcommand("select", "Low-dimensional knockoff filter on CSV data");
    add_common(sel);
    sel->add_option("--design", o.design, "Design CSV")->required();
    sel->add_option("--response", o.response, "Single-column response CSV")->required();
    sel->add_option("--q", o.q, "Target level (default 0.2)");
    sel->add_option("--statistic", o.statistic, "lasso-entry, coef-diff, omp-entry or sqrt-lasso-entry");
    sel->add_flag("--no-plus", o.no_plus, "Use the knockoff threshold instead of knockoff+");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (construct->parsed()) return cmd_construct(o);
        if (run->parsed()) return cmd_experiment(o, false);
        if (simulate->parsed()) return cmd_experiment(o, true);
        if (verify->parsed()) return cmd_verify(o);
        if (sel->parsed()) return cmd_select(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalError;
    }
    return kConfigError;
}
