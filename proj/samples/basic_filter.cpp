// Low-dimensional knockoff+ on a simulated AR design, then the screen + recycle
// pipeline on a wide design.
#include <iostream>

#include "knockoff/knockoff.hpp"

using namespace knockoff;

int main() {
    const std::uint64_t seed = 7;

    const Design x = gen_ar_design(300, 60, 0.3, derive_seed(seed, {stream::design}));
    CoefSpec cs;
    cs.k0 = 10;
    cs.k1 = 0;
    cs.strong_amp = 3.5;
    const CoefDraw beta = gen_coefficients(cs, x.cols(), derive_seed(seed, {stream::coefficients}));
    const Response y = gen_response(x, beta.beta, 1.0, derive_seed(seed, {stream::noise}));

    const SelectionResult low = knockoff_filter_lowdim(x, y, 0.2, StatRule::lasso_entry, true, seed);
    const LinearModelSpec truth(beta.beta, 1.0);
    std::cout << "low-dim: " << low.selected.size() << " selected, FDP "
              << fdp(low.selected, truth) << ", power " << power(low.selected, truth) << "\n";

    const Design wide = gen_ar_design(400, 600, 0.0, derive_seed(seed, {stream::design, 1}));
    const CoefDraw bw = gen_coefficients(cs, wide.cols(), derive_seed(seed, {stream::coefficients, 1}));
    const Response yw = gen_response(wide, bw.beta, 1.0, derive_seed(seed, {stream::noise, 1}));
    PipelineConfig cfg;
    cfg.n0 = 150;
    cfg.k_max = 60;
    cfg.seed = seed;
    const auto [sel, screen] = knockoff_filter_highdim(wide, yw, cfg);
    const LinearModelSpec tw(bw.beta, 1.0);
    std::cout << "high-dim (recycle): screened " << screen.s0.size() << ", selected " << sel.selected.size()
              << ", directional FDP " << fdp_dir(sel.selected, sel.signs, tw.true_signs()) << "\n";
    return 0;
}
