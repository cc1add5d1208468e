#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "fastslow/ews.hpp"
#include "fastslow/integrate.hpp"
#include "fastslow/normal_form.hpp"

using namespace fastslow;

namespace {

struct Fixture {
    NormalFormCoeffs coeffs;
    double alpha;
    Trajectory funnel; // spirals into the coexistence funnel
    Trajectory escape; // leaves through the extinction plane
    double w_zero_tau; // first w down-crossing on the escape run
};

const Fixture& fx() {
    static const Fixture f = [] {
        ModelParams p;
        auto [hbar, fsn] = find_fsn2(p);
        ModelParams pbar = p;
        pbar.h = hbar;
        NormalFormCoeffs c = compute_coeffs(pbar, fsn);
        const double alpha = c.alpha(0.2649);
        IntegratorConfig cfg;
        cfg.rel_tol = 1e-10;
        cfg.abs_tol = 1e-12;
        cfg.t_final = 280.0;
        Trajectory a = integrate_nf({0.452, 0.432, 0.329}, c, alpha, cfg);
        Trajectory b = integrate_nf({0.452, 0.432, 0.259}, c, alpha, cfg);
        double wz = std::numeric_limits<double>::quiet_NaN();
        for (const auto& e : b.events)
            if (e.name == "w-zero") {
                wz = e.t;
                break;
            }
        return Fixture{c, alpha, std::move(a), std::move(b), wz};
    }();
    return f;
}

BCoefficients make_b(double b1, double b2) {
    BCoefficients b;
    b.b1 = b1;
    b.b2 = b2;
    b.A = 0.6;
    b.theta = 1.0;
    b.c2 = b2 / 2.0;
    b.B = b.A / (b.c2 * b.c2 + 1.0);
    return b;
}

Trajectory sampled_uvw(double t0, double t1, double dt,
                       const std::function<double(double)>& u,
                       const std::function<double(double)>& w) {
    std::vector<double> ts;
    std::vector<Eigen::Vector3d> ys;
    for (double t = t0; t <= t1 + 1e-12; t += dt) {
        ts.push_back(t);
        ys.push_back(Eigen::Vector3d(u(t), 0.0, w(t)));
    }
    return Trajectory::from_samples(Trajectory::Frame::normal_form_uvw,
                                    std::move(ts), std::move(ys));
}

// smallest wbar - curve_i margin over [tau1, t_hi_i] for stage i (0-based)
double min_margin(const EWSReport& rep, std::size_t i) {
    double mn = std::numeric_limits<double>::infinity();
    const double t_hi = rep.curves.curves[i].t_hi;
    for (std::size_t j = 0; j < rep.wbar.grid.size(); ++j) {
        const double t = rep.wbar.grid[j];
        if (t < rep.tau1 - 1e-12 || t > t_hi + 1e-12)
            continue;
        mn = std::min(mn, rep.wbar.values[j] - rep.curves.eval(i, t));
    }
    return mn;
}

} // namespace

TEST_CASE("scan configuration validation") {
    const auto& f = fx();
    EWSConfig bad;
    bad.k = 4;
    CHECK_THROWS_AS(nested_interval_scan(f.funnel, f.coeffs, bad), ConfigError);
    bad.k = 5;
    bad.N = 5;
    CHECK_THROWS_AS(nested_interval_scan(f.funnel, f.coeffs, bad), ConfigError);
    bad.N = 0;
    bad.window = -1.0;
    CHECK_THROWS_AS(nested_interval_scan(f.funnel, f.coeffs, bad), ConfigError);
    bad.window = 0.0;
    bad.cross_tol = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(nested_interval_scan(f.funnel, f.coeffs, bad), ConfigError);
}

TEST_CASE("scan input validation") {
    const auto& f = fx();
    std::vector<double> ts{0.0, 1.0, 2.0};
    std::vector<Eigen::Vector3d> ys(3, Eigen::Vector3d(0.3, 0.1, 0.5));
    const Trajectory xyz = Trajectory::from_samples(Trajectory::Frame::model_xyz,
                                                    std::move(ts), std::move(ys));
    CHECK_THROWS_AS(nested_interval_scan(xyz, f.coeffs), KindMismatchError);

    // four oscillations cannot seed a k = 5 scan
    const Trajectory shrt = sampled_uvw(
        0.0, 25.0, 0.01,
        [](double t) { return std::exp(-0.01 * t) * std::sin(t); },
        [](double) { return 0.5; });
    CHECK_THROWS_AS(nested_interval_scan(shrt, f.coeffs), InsufficientDataError);
}

TEST_CASE("bistability classifier: verdict regions and bound values") {
    const auto& f = fx();
    const NormalFormCoeffs& c = f.coeffs;
    const double b1 = 0.28, b2 = -0.013, tau1 = 1.0;
    const double K = c.delta * c.H11 * b1 / (2.0 * (b2 - c.delta * c.H3));
    const double d2 = c.delta * c.delta;

    const TheoremResult lc = classify_theorem(0.45, make_b(b1, b2), c, tau1);
    CHECK(lc.verdict == TheoremVerdict::limit_cycle);
    CHECK(lc.bounds.lower == Catch::Approx(K + d2).epsilon(1e-14));
    CHECK(lc.bounds.upper ==
          Catch::Approx(-c.H11 * b1 / (2.0 * c.H3)).epsilon(1e-14));
    CHECK(lc.extinction_threshold ==
          Catch::Approx(K * std::exp(b2 * tau1)).epsilon(1e-14));
    CHECK(lc.bounds.wbar_tau1 == 0.45);

    CHECK(classify_theorem(0.20, make_b(b1, b2), c, tau1).verdict ==
          TheoremVerdict::extinction);
    // the delta^2 cushion leaves a gap between threshold and lower bound
    CHECK(classify_theorem(0.30, make_b(b1, b2), c, tau1).verdict ==
          TheoremVerdict::inconclusive);
    CHECK(classify_theorem(0.65, make_b(b1, b2), c, tau1).verdict ==
          TheoremVerdict::inconclusive);
}

TEST_CASE("bistability classifier hypothesis checks") {
    const auto& f = fx();
    NormalFormCoeffs bad = f.coeffs;
    bad.H3 = -bad.H3;
    CHECK_THROWS_AS(classify_theorem(0.3, make_b(0.28, -0.013), bad, 1.0),
                    DomainError);
    CHECK_THROWS_AS(classify_theorem(0.3, make_b(0.0, -0.013), f.coeffs, 1.0),
                    DomainError);
    CHECK_THROWS_AS(classify_theorem(0.3, make_b(0.28, 0.01), f.coeffs, 1.0),
                    DomainError);
}

TEST_CASE("predicted minimum time agrees with a direct search") {
    const auto& f = fx();
    const double W = 0.3098, b1 = 0.2799, b2 = -0.0128, tau1 = 1.0876;
    const double tm = predict_min_time(W, b1, b2, f.coeffs, tau1);
    const WbarBase wb = wbar_base(W, b1, b2, f.coeffs, tau1);

    auto golden = [&](double a, double b) {
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
        double f1 = wb(c1), f2 = wb(c2);
        while (b - a > 1e-10) {
            if (f1 < f2) {
                b = c2, c2 = c1, f2 = f1;
                c1 = b - gr * (b - a), f1 = wb(c1);
            } else {
                a = c1, c1 = c2, f1 = f2;
                c2 = a + gr * (b - a), f2 = wb(c2);
            }
        }
        return 0.5 * (a + b);
    };
    CHECK(std::abs(tm - golden(tau1, tau1 + 400.0)) < 1e-6);
    CHECK(std::abs(wb.derivative(tm)) < 1e-10);
    CHECK(wb(tm) > 0.0);

    // a start below the forcing amplitude has no interior minimum
    CHECK_THROWS_AS(predict_min_time(0.20, b1, b2, f.coeffs, tau1), DomainError);
}

TEST_CASE("predicted crossing time agrees with a bisection root") {
    const auto& f = fx();
    const double W = 0.237153, k1 = 0.280439, k2 = -0.015358, tau1 = 1.0849;
    const double tc = predict_crossing_time(W, k1, k2, f.coeffs, tau1);
    const WbarBase wb = wbar_base(W, k1, k2, f.coeffs, tau1);

    double a = tau1, b = tau1 + 400.0;
    REQUIRE(wb(a) > 0.0);
    REQUIRE(wb(b) < 0.0);
    for (int it = 0; it < 120; ++it) {
        const double m = 0.5 * (a + b);
        (wb(m) > 0.0 ? a : b) = m;
    }
    CHECK(std::abs(tc - 0.5 * (a + b)) < 1e-6);
    CHECK(std::abs(wb(tc)) < 1e-8);
    CHECK(wb(tc + 20.0) < 0.0);

    // boundary degeneracy and absent zeros are hypothesis violations
    CHECK_THROWS_AS(predict_crossing_time(wb.K, k1, k2, f.coeffs, tau1),
                    DomainError);
    CHECK_THROWS_AS(predict_crossing_time(0.30, k1, k2, f.coeffs, tau1),
                    DomainError);
}

TEST_CASE("funnel scan clears every critical curve") {
    const auto& f = fx();
    EWSConfig cfg;
    cfg.k = 5;
    cfg.N = 41;
    const EWSReport rep = nested_interval_scan(f.funnel, f.coeffs, cfg);

    CHECK(rep.verdict == EWSReport::Verdict::coexistence_minimum);
    CHECK(rep.i0 == 0);
    CHECK(std::isnan(rep.warning_time_tau));
    CHECK(std::isnan(rep.tau_cross_pred));
    REQUIRE(rep.n_intervals == 36);
    REQUIRE(rep.curves.curves.size() == 36);
    CHECK(std::abs(rep.tau1 - 1.0876) < 1e-3);
    CHECK(std::abs(rep.period - 6.329941) < 1e-3);
    CHECK(std::abs(rep.data_ratio - 41.0 * f.coeffs.delta / 5.0) < 1e-12);
    CHECK(rep.u2bar.window == Catch::Approx(rep.period));
    CHECK(rep.wbar.window == Catch::Approx(rep.period));

    CHECK(std::abs(rep.theorem_bounds.wbar_tau1 - 0.309736) < 1e-4);
    CHECK(std::abs(rep.tau_min_pred - 112.0307) < 0.05);
    CHECK(std::abs(rep.theorem_bounds.lower - 0.338824) < 1e-3);
    CHECK(std::abs(rep.theorem_bounds.upper - 0.587695) < 1e-3);

    CHECK(rep.monotonic_k1);
    CHECK(rep.monotonic_k2);
    CHECK(rep.curves.ordered);
    CHECK(std::abs(rep.curves.curves[0].k1 - 0.294204) < 1e-3);
    CHECK(std::abs(rep.curves.curves[0].k2 + 0.015819) < 1e-4);
    CHECK(std::abs(rep.curves.curves[35].k1 - 0.261753) < 1e-3);
    CHECK(std::abs(rep.curves.curves[35].k2 + 0.010642) < 1e-4);

    for (std::size_t i = 0; i < rep.curves.curves.size(); ++i) {
        REQUIRE(std::isfinite(rep.curves.curves[i].K));
        CHECK(min_margin(rep, i) > 0.0);
    }
}

TEST_CASE("escape scan fires a warning inside the reference window") {
    const auto& f = fx();
    EWSConfig cfg;
    cfg.k = 5;
    cfg.N = 41;
    const EWSReport rep = nested_interval_scan(f.escape, f.coeffs, cfg);

    CHECK(rep.verdict == EWSReport::Verdict::extinction_warning);
    CHECK(rep.i0 >= 12);
    CHECK(rep.i0 <= 18);
    CHECK(rep.i0 == 13);
    CHECK(std::abs(rep.warning_time_tau - 102.748) < 0.05);
    CHECK(std::abs(rep.warning_time_s - 25.7265) < 0.02);
    CHECK(rep.warning_time_s == f.coeffs.delta * rep.warning_time_tau);
    // the triggering interval end bounds the warning from above
    CHECK(rep.warning_time_tau <
          rep.curves.curves[std::size_t(rep.i0 - 1)].t_hi);

    CHECK(std::abs(rep.tau1 - 1.0849) < 1e-3);
    CHECK(std::abs(rep.period - 6.319370) < 1e-3);
    CHECK(rep.n_intervals == 36);
    CHECK(std::abs(rep.theorem_bounds.wbar_tau1 - 0.237061) < 1e-4);
    CHECK(std::abs(rep.tau_cross_pred - 187.9248) < 0.5);
    CHECK(std::abs(rep.theorem_bounds.lower - 0.302076) < 1e-3);
    CHECK(std::abs(rep.theorem_bounds.upper - 0.629692) < 1e-3);
    CHECK(std::isnan(rep.tau_min_pred));
    CHECK(rep.monotonic_k1);
    CHECK(rep.monotonic_k2);
    CHECK(rep.curves.ordered);
    CHECK(std::abs(rep.curves.curves[0].k1 - 0.291075) < 1e-3);
    CHECK(std::abs(rep.curves.curves[0].k2 + 0.017894) < 1e-4);
    CHECK(std::abs(rep.curves.curves[35].k1 - 0.273180) < 1e-3);
    CHECK(std::abs(rep.curves.curves[35].k2 + 0.014340) < 1e-4);

    // the warning strictly precedes the population collapse
    REQUIRE(std::isfinite(f.w_zero_tau));
    CHECK(std::abs(f.w_zero_tau - 165.115) < 1.0);
    CHECK(rep.warning_time_tau < f.w_zero_tau);

    // once fired, wbar stays below the triggering curve to the scan end
    const std::size_t fired = std::size_t(rep.i0 - 1);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < rep.wbar.grid.size(); ++j) {
        const double t = rep.wbar.grid[j];
        if (t <= rep.warning_time_tau + 1e-9)
            continue;
        worst = std::max(worst, rep.wbar.values[j] - rep.curves.eval(fired, t));
    }
    CHECK(worst < 0.0);
}

TEST_CASE("a steady slow channel above the curves never fires") {
    const auto& f = fx();
    const Trajectory tr = sampled_uvw(
        0.0, 110.0, 0.01,
        [](double t) { return 0.5 * std::exp(-0.008 * t) * std::sin(t); },
        [](double) { return 0.8; });
    const EWSReport rep = nested_interval_scan(tr, f.coeffs);
    CHECK(rep.verdict == EWSReport::Verdict::coexistence_minimum);
    CHECK(rep.i0 == 0);
    CHECK(std::isnan(rep.warning_time_tau));
    for (std::size_t i = 0; i < rep.curves.curves.size(); ++i)
        if (std::isfinite(rep.curves.curves[i].K))
            CHECK(min_margin(rep, i) > 0.0);
}

TEST_CASE("identical inputs give bitwise-identical reports") {
    const auto& f = fx();
    EWSConfig cfg;
    cfg.k = 5;
    cfg.N = 41;
    const EWSReport r1 = nested_interval_scan(f.escape, f.coeffs, cfg);
    const EWSReport r2 = nested_interval_scan(f.escape, f.coeffs, cfg);
    CHECK(r1.i0 == r2.i0);
    CHECK(r1.warning_time_tau == r2.warning_time_tau);
    CHECK(r1.theorem_bounds.wbar_tau1 == r2.theorem_bounds.wbar_tau1);
    REQUIRE(r1.curves.curves.size() == r2.curves.curves.size());
    for (std::size_t i = 0; i < r1.curves.curves.size(); ++i) {
        CHECK(r1.curves.curves[i].k1 == r2.curves.curves[i].k1);
        CHECK(r1.curves.curves[i].k2 == r2.curves.curves[i].k2);
    }

    // a fresh integration of the same initial-value problem matches too
    IntegratorConfig icfg;
    icfg.rel_tol = 1e-10;
    icfg.abs_tol = 1e-12;
    icfg.t_final = 280.0;
    const Trajectory again =
        integrate_nf({0.452, 0.432, 0.259}, f.coeffs, f.alpha, icfg);
    const EWSReport r3 = nested_interval_scan(again, f.coeffs, cfg);
    CHECK(r3.i0 == r1.i0);
    CHECK(r3.warning_time_tau == r1.warning_time_tau);
    CHECK(r3.tau_cross_pred == r1.tau_cross_pred);
}
