#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>

#include "fbsde_ns/rng.hpp"
#include "fbsde_ns/solver.hpp"
#include "fbsde_ns/spectral_ops.hpp"

namespace fbsde {

namespace {

double sup_over_time(const TimeIndexedField& a, const TimeIndexedField& b,
                     double (*norm)(const VectorField&, const SolverConfig&), const SolverConfig& cfg) {
    double worst = 0.0;
    for (int k = 0; k < a.size(); ++k) worst = std::max(worst, norm(a[k] - b[k], cfg));
    return worst;
}

double sup(const std::vector<double>& v) {
    double worst = 0.0;
    for (double x : v) worst = std::max(worst, x);
    return worst;
}

// Three consecutive contraction ratios above one.
bool diverging(const std::vector<double>& ratios) {
    if (ratios.size() < 3) return false;
    return std::all_of(ratios.end() - 3, ratios.end(), [](double r) { return r > 1.0; });
}

} // namespace

PicardState picard_solve(const VectorField& u0_in, const SolverConfig& cfg_in, const PicardOptions& opt) {
    cfg_in.validate();
    require_finite(u0_in.data(), "initial velocity");
    VectorField u0 = u0_in;
    std::vector<std::string> warnings;
    const double div0 = lp_norm(divergence(u0), 2.0);
    if (div0 > 1e-8) {
        u0 = leray_project(u0);
        warnings.push_back("initial velocity was not divergence-free (L2 divergence " + std::to_string(div0) +
                           "); projected before iterating");
    }
    const double ref = monitoring_norm(u0, cfg_in);

    PicardState st;
    SolverConfig cfg = cfg_in;
    for (int halving = 0; halving <= cfg_in.max_halvings; ++halving) {
        cfg.T = cfg_in.T / std::pow(2.0, halving);
        PicardState run;
        run.warnings = warnings;
        run.horizons_tried = st.horizons_tried;
        run.horizons_tried.push_back(cfg.T);
        run.horizon = cfg.T;
        run.reference_norm = ref;
        run.iterates.push_back(TimeIndexedField::constant(cfg.time_grid(), u0));
        bool failed = false;
        for (int n = 1; n <= cfg.max_iters; ++n) {
            const auto start = std::chrono::steady_clock::now();
            std::optional<MapResult> result;
            try {
                if (cfg.scheme == MapScheme::mc_drifted) {
                    const std::uint64_t seed = cfg.common_random_numbers ? cfg.seed : derive_seed(cfg.seed, n);
                    result = apply_I_nu(run.iterates.back(), cfg, seed);
                } else {
                    result = apply_I_prime_nu(run.iterates.back(), cfg);
                }
            } catch (const MildDivergence&) {
                failed = true;
                break;
            }
            MapResult& m = *result;
            const double res = sup_over_time(m.value, run.iterates.back(), monitoring_norm, cfg);
            const double res_full =
                opt.compute_full_residual ? sup_over_time(m.value, run.iterates.back(), full_norm, cfg) : 0.0;
            if (!run.residuals.empty())
                run.contraction_ratios.push_back(run.residuals.back() > 0.0 ? res / run.residuals.back() : 0.0);
            run.residuals.push_back(res);
            run.residuals_full.push_back(res_full);
            run.divergence_history.push_back(sup(m.divergence_lp));
            run.divergence_std_error.push_back(sup(m.divergence_std_error));
            run.std_error_history.push_back(sup(m.std_error_l2));
            run.std_error_fields = std::move(m.std_error);
            run.iterates.push_back(std::move(m.value));
            run.wall_seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            if (opt.on_iteration) opt.on_iteration(run);
            const double scale = ref > 0.0 ? ref : 1.0;
            if (res <= cfg.tol * scale) {
                run.status = PicardStatus::converged;
                return run;
            }
            if (diverging(run.contraction_ratios)) {
                failed = true;
                break;
            }
        }
        if (!failed) {
            run.status = PicardStatus::max_iters;
            return run;
        }
        run.status = PicardStatus::diverging;
        st = std::move(run);
    }
    return st;
}

void write_picard_csv(std::ostream& os, const PicardState& st) {
    os << "iter,residual_monitor,residual_full,contraction_ratio,divergence_sup,divergence_std_error,std_error\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < st.residuals.size(); ++i) {
        os << i + 1 << ',' << st.residuals[i] << ',' << st.residuals_full[i] << ',';
        if (i > 0) os << st.contraction_ratios[i - 1];
        os << ',' << st.divergence_history[i] << ',' << st.divergence_std_error[i] << ',' << st.std_error_history[i]
           << '\n';
    }
}

} // namespace fbsde
