// Bistability walkthrough: two nearby initial states at h = 0.2649, one
// settling on the coexistence limit cycle, the other collapsing onto the
// prey-free boundary plane.  Prints both verdicts in the model frame and
// repeats the split in normal-form coordinates.

#include <cstdio>

#include "fastslow/classify.hpp"
#include "fastslow/equilibria.hpp"
#include "fastslow/integrate.hpp"
#include "fastslow/normal_form.hpp"

using namespace fastslow;

namespace {

void report_model(const char* label, const State& ic, const ModelParams& p) {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    cfg.t_final = 500.0;
    const Trajectory tr = integrate_model(ic, p, cfg);
    const AttractorVerdict v = classify_attractor(tr, p);
    std::printf("  %s  ic=(%.4f, %.4f, %.4f)\n", label, ic.x, ic.y, ic.z);
    std::printf("      verdict: %-12s decided at t=%.1f\n", to_string(v.kind),
                v.decision_time);
    std::printf("      %s\n", v.evidence.c_str());
}

void report_nf(const char* label, const NFState& ic, const NormalFormCoeffs& c,
               double alpha) {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    cfg.t_final = 800.0;
    const Trajectory tr = integrate_nf(ic, c, alpha, cfg);
    const AttractorVerdict v = classify_attractor(tr, c);
    std::printf("  %s  ic=(%.3f, %.3f, %.3f)\n", label, ic.u, ic.v, ic.w);
    std::printf("      verdict: %-12s decided at tau=%.1f\n", to_string(v.kind),
                v.decision_time);
    for (const auto& e : tr.events)
        if (e.name == "w-zero") {
            std::printf("      slow coordinate first hits zero at tau=%.2f\n", e.t);
            break;
        }
}

} // namespace

int main() {
    ModelParams p; // defaults: the bistable parameter point, h = 0.2649

    std::printf("model frame, h = %.4f\n", p.h);
    report_model("(a)", {0.2785, 0.1181, 0.4164}, p);
    report_model("(b)", {0.2780, 0.1181, 0.4165}, p);

    const Equilibrium exz =
        find_equilibrium(p, EquilibriumKind::boundary_xz, std::nullopt);
    std::printf("  boundary equilibrium: (%.4f, 0, %.4f), %s\n\n", exz.state.x,
                exz.state.z, to_string(exz.stability));

    auto [hbar, fsn] = find_fsn2(p);
    ModelParams pbar = p;
    pbar.h = hbar;
    const NormalFormCoeffs c = compute_coeffs(pbar, fsn);
    const double alpha = c.alpha(p.h);
    std::printf("normal-form frame, alpha(h) = %.5f\n", alpha);
    report_nf("(a)", {0.452, 0.432, 0.329}, c, alpha);
    report_nf("(b)", {0.452, 0.432, 0.259}, c, alpha);
    return 0;
}
