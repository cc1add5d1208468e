// Command-line front end: simulate | normalform | ews | classify | sweep.
// Every command reads one RunConfig (defaults <- config file <- flags),
// computes everything first, then writes its artifacts into --out, so a
// failed run leaves no partial outputs.  Exit codes: 0 success, 1 numerical
// failure, 2 configuration error.

#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fastslow/branch.hpp"
#include "fastslow/classify.hpp"
#include "fastslow/envelope.hpp"
#include "fastslow/equilibria.hpp"
#include "fastslow/ews.hpp"
#include "fastslow/integrate.hpp"
#include "fastslow/io.hpp"
#include "fastslow/normal_form.hpp"
#include "fastslow/signal.hpp"
#include "fastslow/transform.hpp"

namespace {

using namespace fastslow;

constexpr double knan = std::numeric_limits<double>::quiet_NaN();
constexpr int kint_unset = std::numeric_limits<int>::min();

/// Command-line values; sentinel-initialized so only flags the user passed
/// override the config file.
struct Flags {
    std::string config, ic, frame, out, format;
    double h = knan, tfinal = knan, window = knan, cross_tol = knan;
    double h_lo = knan, h_hi = knan, h_min = knan, h_max = knan, step = knan;
    double rel_tol = knan, abs_tol = knan, dtau = knan;
    int k = kint_unset, N = kint_unset;
};

RunConfig assemble(const Flags& fl) {
    RunConfig rc;
    if (!fl.config.empty())
        load_config_file(fl.config, rc);
    if (!std::isnan(fl.h))
        rc.params.h = fl.h;
    if (!fl.ic.empty()) {
        rc.ic = parse_ic(fl.ic);
        rc.have_ic = true;
    }
    if (!fl.frame.empty())
        rc.frame = fl.frame;
    if (!std::isnan(fl.tfinal))
        rc.tfinal = fl.tfinal;
    if (!std::isnan(fl.rel_tol))
        rc.rel_tol = fl.rel_tol;
    if (!std::isnan(fl.abs_tol))
        rc.abs_tol = fl.abs_tol;
    if (!std::isnan(fl.dtau))
        rc.dtau = fl.dtau;
    if (fl.k != kint_unset)
        rc.ews.k = fl.k;
    if (fl.N != kint_unset)
        rc.ews.N = fl.N;
    if (!std::isnan(fl.window))
        rc.ews.window = fl.window;
    if (!std::isnan(fl.cross_tol))
        rc.ews.cross_tol = fl.cross_tol;
    if (!std::isnan(fl.h_lo))
        rc.h_lo = fl.h_lo;
    if (!std::isnan(fl.h_hi))
        rc.h_hi = fl.h_hi;
    if (!std::isnan(fl.h_min))
        rc.h_min = fl.h_min;
    if (!std::isnan(fl.h_max))
        rc.h_max = fl.h_max;
    if (!std::isnan(fl.step))
        rc.step = fl.step;
    if (!fl.out.empty())
        rc.out = fl.out;
    if (!fl.format.empty())
        rc.format = fl.format;
    rc.params.validate();
    return rc;
}

bool want_csv(const RunConfig& rc) { return rc.format != "json"; }
bool want_json(const RunConfig& rc) { return rc.format != "csv"; }

IntegratorConfig integrator_config(const RunConfig& rc, double default_tfinal) {
    IntegratorConfig cfg;
    cfg.rel_tol = rc.rel_tol;
    cfg.abs_tol = rc.abs_tol;
    cfg.t_final = rc.tfinal > 0 ? rc.tfinal : default_tfinal;
    return cfg;
}

/// Folded-singularity coefficients for the current parameter set; the
/// expansion is taken at h = h_fsn, alpha then measures the h offset.
struct NFSetup {
    Equilibrium fsn;
    ModelParams pbar;
    NormalFormCoeffs coeffs;
};

NFSetup nf_setup(const RunConfig& rc) {
    auto [hbar, fsn] = find_fsn2(rc.params, rc.h_lo, rc.h_hi);
    NFSetup s;
    s.fsn = fsn;
    s.pbar = rc.params;
    s.pbar.h = hbar;
    s.coeffs = compute_coeffs(s.pbar, fsn);
    return s;
}

/// The uvw trajectory a scan or classifier runs on: either a direct
/// normal-form integration (frame=uvw, ic read as u,v,w, tfinal on the tau
/// clock) or a model run pushed through the coordinate transform
/// (frame=xyz, tfinal on the slow clock).
Trajectory input_uvw(const RunConfig& rc, const NFSetup& s, double default_tfinal_tau) {
    if (rc.frame == "uvw") {
        const IntegratorConfig cfg = integrator_config(rc, default_tfinal_tau);
        return integrate_nf(NFState{rc.ic.x, rc.ic.y, rc.ic.z}, s.coeffs,
                            s.coeffs.alpha(rc.params.h), cfg);
    }
    const IntegratorConfig cfg =
        integrator_config(rc, default_tfinal_tau * s.coeffs.delta);
    const Trajectory xyz = integrate_model(rc.ic, rc.params, cfg);
    return transform_trajectory(xyz, s.fsn, s.coeffs, rc.params, rc.dtau);
}

int cmd_simulate(const RunConfig& rc) {
    if (!rc.have_ic)
        throw ConfigError("simulate: initial condition required (ic/--ic)");
    const Trajectory tr =
        integrate_model(rc.ic, rc.params, integrator_config(rc, 500.0));
    const AttractorVerdict v = classify_attractor(tr, rc.params);
    if (want_csv(rc))
        write_artifact(rc.out, "trajectory.csv", csv_trajectory(tr));
    if (want_json(rc))
        write_artifact(rc.out, "verdict.json", json_verdict(v, tr));
    return 0;
}

int cmd_normalform(const RunConfig& rc) {
    const NFSetup s = nf_setup(rc);
    ordered_json j = json_coefficients(s.coeffs);
    j["h_hopf"] = hopf_location(s.coeffs);
    const LyapunovResult l = lyapunov_l1(s.coeffs);
    j["lyapunov_l1"] = l.l1;
    j["lyapunov_bracket"] = l.bracket;
    j["subcritical"] = l.subcritical;
    if (want_json(rc))
        write_artifact(rc.out, "coefficients.json", j);
    return 0;
}

int cmd_ews(const RunConfig& rc) {
    if (!rc.have_ic)
        throw ConfigError("ews: initial condition required (ic/--ic)");
    rc.ews.validate();
    const NFSetup s = nf_setup(rc);
    const Trajectory uvw = input_uvw(rc, s, 280.0);
    const EWSReport rep = nested_interval_scan(uvw, s.coeffs, rc.ews);
    if (want_json(rc))
        write_artifact(rc.out, "ews.json", json_ews(rep));
    if (want_csv(rc) && rep.verdict == EWSReport::Verdict::extinction_warning)
        write_artifact(rc.out, "curve.csv", csv_curve(rep));
    return 0;
}

int cmd_classify(const RunConfig& rc) {
    if (!rc.have_ic)
        throw ConfigError("classify: initial condition required (ic/--ic)");
    const NFSetup s = nf_setup(rc);
    const double alpha = s.coeffs.alpha(rc.params.h);

    // integrator verdict in the input frame; one integration serves both
    // the attractor call and the envelope pipeline
    Trajectory uvw;
    AttractorVerdict att;
    if (rc.frame == "uvw") {
        uvw = integrate_nf(NFState{rc.ic.x, rc.ic.y, rc.ic.z}, s.coeffs, alpha,
                           integrator_config(rc, 280.0));
        att = classify_attractor(uvw, s.coeffs);
    } else {
        const Trajectory xyz =
            integrate_model(rc.ic, rc.params, integrator_config(rc, 500.0));
        att = classify_attractor(xyz, rc.params);
        uvw = transform_trajectory(xyz, s.fsn, s.coeffs, rc.params, rc.dtau);
    }

    // averaged-envelope verdict with the leading-order coefficients
    // (b2 = alpha delta); the empirical decay fit over the first 18
    // oscillations (or all of them when fewer) is reported alongside
    const PeakSequence peaks = detect_peaks(uvw);
    const int k = rc.ews.k;
    if (static_cast<int>(peaks.size()) <= k)
        throw InsufficientDataError("classify: too few oscillation peaks");
    const double tau1 = peaks.times.front();
    const double l1 = (peaks.times[k] - peaks.times.front()) / k;
    const std::size_t last = std::min<std::size_t>(peaks.size() - 1, 18);
    const MovingAverage u2 = moving_average(uvw, MAChannel::u_squared, l1);
    const MovingAverage wma = moving_average(uvw, MAChannel::w, l1);
    const ExpFit fit = fit_exponential(u2, tau1, peaks.times[last]);
    const Eigen::Vector3d q0 = uvw.eval(uvw.t_begin());
    const BCoefficients b =
        b_coefficients(NFState{q0[0], q0[1], q0[2]}, s.coeffs, alpha, peaks);
    const double wbar_tau1 = wma.eval(tau1);
    const TheoremResult th = classify_theorem(wbar_tau1, b, s.coeffs, tau1);

    const bool extinct = att.kind == AttractorVerdict::Kind::boundary_xz ||
                         att.kind == AttractorVerdict::Kind::w_divergence;
    ordered_json j;
    j["theorem"] = {{"verdict", to_string(th.verdict)},
                    {"lower", th.bounds.lower},
                    {"upper", th.bounds.upper},
                    {"wbar_tau1", th.bounds.wbar_tau1},
                    {"extinction_threshold", th.extinction_threshold},
                    {"b1", b.b1},
                    {"b2", b.b2},
                    {"tau1", tau1}};
    j["attractor"] = {{"verdict", to_string(att.kind)},
                      {"decision_time", att.decision_time},
                      {"evidence", att.evidence}};
    if (th.verdict == TheoremVerdict::inconclusive)
        j["agree"] = nullptr;
    else if (th.verdict == TheoremVerdict::limit_cycle)
        j["agree"] = att.kind == AttractorVerdict::Kind::limit_cycle;
    else
        j["agree"] = extinct;
    j["fit"] = json_fit(fit, rc.frame == "uvw" ? "tau" : "s");
    if (want_json(rc))
        write_artifact(rc.out, "classify.json", j);
    return 0;
}

int cmd_sweep(const RunConfig& rc) {
    static const struct {
        EquilibriumKind kind;
        const char* file;
    } branches[] = {
        {EquilibriumKind::coexistence, "branch_coexistence.csv"},
        {EquilibriumKind::boundary_xz, "branch_boundary_xz.csv"},
        {EquilibriumKind::boundary_xy, "branch_boundary_xy.csv"},
    };

    if (rc.h_min >= rc.h_max) { // empty range: headers only, no events
        if (want_csv(rc))
            for (const auto& b : branches)
                write_artifact(rc.out, b.file, csv_branch(Branch{}));
        if (want_json(rc))
            write_artifact(rc.out, "events.json", ordered_json::array());
        return 0;
    }

    using Result = std::pair<Branch, std::vector<BifurcationEvent>>;
    std::vector<std::future<Result>> futs;
    for (const auto& b : branches)
        futs.push_back(std::async(std::launch::async, [&rc, kind = b.kind] {
            Branch br = continue_branch(kind, rc.h_min, rc.h_max, rc.step, rc.params);
            std::vector<BifurcationEvent> evs = detect_events(br);
            return Result{std::move(br), std::move(evs)};
        }));

    // merged event order follows branch input order, not completion order
    std::vector<Result> results;
    for (auto& f : futs)
        results.push_back(f.get());

    std::vector<BifurcationEvent> all;
    for (const auto& r : results)
        all.insert(all.end(), r.second.begin(), r.second.end());

    if (want_csv(rc))
        for (std::size_t i = 0; i < results.size(); ++i)
            write_artifact(rc.out, branches[i].file, csv_branch(results[i].first));
    if (want_json(rc))
        write_artifact(rc.out, "events.json", json_bifurcations(all));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"slow-fast predator-prey pipeline: simulation, normal-form "
                 "reduction, bifurcation sweeps and early-warning scans"};
    app.require_subcommand(1);

    app.set_help_flag("--help", "print this help and exit"); // frees -h for --h

    Flags fl;
    auto add_common = [&fl](CLI::App* s) {
        s->set_help_flag("--help", "print this help and exit");
        s->add_option("--config", fl.config, "flat key = value run configuration");
        s->add_option("--h", fl.h, "bifurcation parameter");
        s->add_option("--ic", fl.ic, "initial condition X,Y,Z (frame-dependent)");
        s->add_option("--tfinal", fl.tfinal, "integration horizon");
        s->add_option("--k", fl.k, "oscillations per scan interval");
        s->add_option("--N", fl.N, "oscillation peaks used by the scan (0 = all)");
        s->add_option("--window", fl.window, "moving-average window (0 = auto)");
        s->add_option("--cross-tol", fl.cross_tol, "sustained-crossing margin");
        s->add_option("--frame", fl.frame, "input space: xyz or uvw")
            ->check(CLI::IsMember({"xyz", "uvw"}));
        s->add_option("--h-lo", fl.h_lo, "folded-singularity bracket, lower end");
        s->add_option("--h-hi", fl.h_hi, "folded-singularity bracket, upper end");
        s->add_option("--h-min", fl.h_min, "sweep range, lower end");
        s->add_option("--h-max", fl.h_max, "sweep range, upper end");
        s->add_option("--step", fl.step, "sweep step");
        s->add_option("--rel-tol", fl.rel_tol, "integrator relative tolerance");
        s->add_option("--abs-tol", fl.abs_tol, "integrator absolute tolerance");
        s->add_option("--dtau", fl.dtau, "transform sampling step");
        s->add_option("--out", fl.out, "output directory");
        s->add_option("--format", fl.format, "artifact formats to emit")
            ->check(CLI::IsMember({"csv", "json", "both"}));
    };

    CLI::App* sim = app.add_subcommand("simulate", "integrate the model and "
                                                   "classify the attractor");
    CLI::App* nf = app.add_subcommand("normalform", "locate the folded "
                                                    "singularity and export its "
                                                    "coefficient set");
    CLI::App* ews = app.add_subcommand("ews", "run the nested-interval "
                                              "early-warning scan");
    CLI::App* cls = app.add_subcommand("classify", "compare the envelope "
                                                   "classifier with the "
                                                   "integrated attractor");
    CLI::App* swp = app.add_subcommand("sweep", "continue equilibrium branches "
                                                "and detect bifurcations");
    for (CLI::App* s : {sim, nf, ews, cls, swp})
        add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // help/version exit 0, any parse error is config
    }

    try {
        const RunConfig rc = assemble(fl);
        if (app.got_subcommand(sim))
            return cmd_simulate(rc);
        if (app.got_subcommand(nf))
            return cmd_normalform(rc);
        if (app.got_subcommand(ews))
            return cmd_ews(rc);
        if (app.got_subcommand(cls))
            return cmd_classify(rc);
        return cmd_sweep(rc);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
