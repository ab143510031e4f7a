#pragma once

#include <string>
#include <vector>

#include "knockoff/csv.hpp"
#include "knockoff/filter.hpp"
#include "knockoff/simulate.hpp"

namespace knockoff::report {

/// Per-trial table across settings; reports and their specs are matched by position.
inline std::string trials_csv(const std::vector<ExperimentSpec>& specs, const std::vector<ExperimentReport>& reports) {
    csv::Table t({"setting", "rho", "trial", "method", "status", "n_selected", "fdp", "fdp_dir", "mfdr_dir", "power",
                  "restricted_power", "fdp_dir_partial", "mfdr_dir_partial", "sure_screen", "s0_size", "w_pos",
                  "w_neg"});
    for (std::size_t s = 0; s < reports.size(); ++s) {
        for (const TrialRecord& r : reports[s].records) {
            t.row()
                .add(static_cast<long long>(r.setting))
                .add(specs[s].design.rho)
                .add(static_cast<long long>(r.trial))
                .add(r.method)
                .add(r.ok ? std::string("ok") : std::string("failed"));
            if (!r.ok) {
                for (int k = 0; k < 12; ++k) t.add(std::string());
                continue;
            }
            t.add(static_cast<long long>(r.full.n_selected))
                .add(r.full.fdp)
                .add(r.full.fdp_dir)
                .add(r.full.mfdr_dir_summand)
                .add(r.full.power)
                .add(r.full.restricted_power)
                .add(r.fdp_dir_partial)
                .add(r.mfdr_dir_partial)
                .add(r.sure_screen)
                .add(static_cast<long long>(r.s0_size))
                .add(static_cast<long long>(r.w_pos))
                .add(static_cast<long long>(r.w_neg));
        }
    }
    return t.str();
}

inline std::string summary_csv(const std::vector<ExperimentSpec>& specs, const std::vector<ExperimentReport>& reports) {
    csv::Table t({"setting", "rho", "method", "trials_ok", "failures", "FDR", "FDR_se", "Dir_FDR", "Dir_FDR_se",
                  "mFDR_dir", "mFDR_dir_se", "Power", "Power_se", "Restr_power", "Restr_power_se", "Dir_FDR_partial",
                  "Dir_FDR_partial_se", "mFDR_dir_partial", "mFDR_dir_partial_se", "sure_screen_rate",
                  "Dir_FDR_given_sure", "Dir_FDR_given_sure_se", "n_sure", "mean_selected", "w_pos", "w_neg"});
    for (std::size_t s = 0; s < reports.size(); ++s) {
        for (const MethodSummary& m : reports[s].summaries) {
            t.row()
                .add(static_cast<long long>(reports[s].setting))
                .add(specs[s].design.rho)
                .add(m.method)
                .add(static_cast<long long>(m.ok))
                .add(static_cast<long long>(m.failures))
                .add(m.fdr.mean)
                .add(m.fdr.se)
                .add(m.fdr_dir.mean)
                .add(m.fdr_dir.se)
                .add(m.mfdr_dir.mean)
                .add(m.mfdr_dir.se)
                .add(m.power.mean)
                .add(m.power.se)
                .add(m.restricted_power.mean)
                .add(m.restricted_power.se)
                .add(m.fdr_dir_partial.mean)
                .add(m.fdr_dir_partial.se)
                .add(m.mfdr_dir_partial.mean)
                .add(m.mfdr_dir_partial.se)
                .add(m.sure_screen.mean)
                .add(m.fdr_dir_given_sure.mean)
                .add(m.fdr_dir_given_sure.se)
                .add(m.fdr_dir_given_sure.count)
                .add(m.n_selected.mean)
                .add(static_cast<long long>(m.w_pos))
                .add(static_cast<long long>(m.w_neg));
        }
    }
    return t.str();
}

/// Power and error rates against rho, one row per (rho, method).
inline std::string plot_csv(const std::vector<ExperimentSpec>& specs, const std::vector<ExperimentReport>& reports) {
    csv::Table t({"rho", "method", "FDR", "FDR_se", "Dir_FDR", "Dir_FDR_se", "Power", "Power_se", "Restr_power",
                  "Restr_power_se"});
    for (std::size_t s = 0; s < reports.size(); ++s)
        for (const MethodSummary& m : reports[s].summaries)
            t.row()
                .add(specs[s].design.rho)
                .add(m.method)
                .add(m.fdr.mean)
                .add(m.fdr.se)
                .add(m.fdr_dir.mean)
                .add(m.fdr_dir.se)
                .add(m.power.mean)
                .add(m.power.se)
                .add(m.restricted_power.mean)
                .add(m.restricted_power.se);
    return t.str();
}

inline std::string selection_csv(const SelectionResult& sel) {
    csv::Table t({"index", "sign"});
    for (Index j : sel.selected) t.row().add(static_cast<long long>(j)).add(sel.signs.at(j));
    return t.str();
}

}  // namespace knockoff::report
