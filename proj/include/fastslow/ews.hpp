#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fastslow/envelope.hpp"
#include "fastslow/errors.hpp"
#include "fastslow/signal.hpp"

namespace fastslow {

struct EWSConfig {
    int k = 5;              ///< oscillations per interval, must exceed 4
    int N = 0;              ///< peaks to use; 0 = all available
    double window = 0;      ///< moving-average window; 0 = average peak period
    double cross_tol = -1;  ///< margin a crossing must clear; negative = delta^4

    void validate() const {
        if (k <= 4)
            throw ConfigError("EWSConfig: k must be an integer greater than 4");
        if (N != 0 && N <= k)
            throw ConfigError("EWSConfig: N must exceed k");
        if (!(window >= 0) || !std::isfinite(window))
            throw ConfigError("EWSConfig: window must be finite and nonnegative");
        if (!std::isfinite(cross_tol))
            throw ConfigError("EWSConfig: cross_tol must be finite");
    }
};

/// Per-interval critical curve K_i e^{k2_i (tau - tau1)} with
/// K_i = delta H11 k1_i / (2 (k2_i - delta H3)).
struct CriticalCurve {
    double k1 = 0, k2 = 0;
    double K = std::numeric_limits<double>::quiet_NaN();
    double t_hi = 0; ///< interval end tau_{k+i}
};

struct CriticalCurveFamily {
    double tau1 = 0;
    std::vector<CriticalCurve> curves;
    bool monotonic_k1 = true; ///< fitted amplitudes non-increasing
    bool monotonic_k2 = true; ///< fitted rates non-decreasing
    bool ordered = true;      ///< curve_i < curve_{i+1} pointwise on I_i

    double eval(std::size_t i, double tau) const {
        const CriticalCurve& c = curves.at(i);
        return c.K * std::exp(c.k2 * (tau - tau1));
    }
};

struct TheoremBounds {
    double lower = std::numeric_limits<double>::quiet_NaN();  ///< K + delta^2
    double upper = std::numeric_limits<double>::quiet_NaN();  ///< -H11 b1 / (2 H3)
    double wbar_tau1 = std::numeric_limits<double>::quiet_NaN();
};

enum class TheoremVerdict { limit_cycle, extinction, inconclusive };

inline std::string to_string(TheoremVerdict v) {
    switch (v) {
    case TheoremVerdict::limit_cycle: return "limit-cycle";
    case TheoremVerdict::extinction: return "extinction";
    default: return "inconclusive";
    }
}

struct TheoremResult {
    TheoremVerdict verdict = TheoremVerdict::inconclusive;
    TheoremBounds bounds;
    double extinction_threshold = std::numeric_limits<double>::quiet_NaN();
};

/// Bistability classifier: limit cycle when
/// K + delta^2 < wbar(tau1) < -H11 b1 / (2 H3) and extinction when
/// wbar(tau1) < K e^{b2 tau1}, with K = delta H11 b1 / (2 (b2 - delta H3)).
/// The delta^2 cushion is kept literally, so a gap of inconclusive inputs
/// remains between the two regions.
inline TheoremResult classify_theorem(double wbar_tau1, const BCoefficients& b,
                                      const NormalFormCoeffs& c, double tau1) {
    if (!c.sign_regime_ok())
        throw DomainError("classify_theorem: coefficient sign regime violated");
    if (!(b.b1 > 0) || !(b.b2 < 0))
        throw DomainError("classify_theorem: need b1 > 0 and b2 < 0");
    const WbarBase wb = wbar_base(wbar_tau1, b, c, tau1);
    TheoremResult r;
    r.bounds.lower = wb.K + c.delta * c.delta;
    r.bounds.upper = -c.H11 * b.b1 / (2.0 * c.H3);
    r.bounds.wbar_tau1 = wbar_tau1;
    r.extinction_threshold = wb.K * std::exp(b.b2 * tau1);
    if (wbar_tau1 > r.bounds.lower && wbar_tau1 < r.bounds.upper)
        r.verdict = TheoremVerdict::limit_cycle;
    else if (wbar_tau1 < r.extinction_threshold)
        r.verdict = TheoremVerdict::extinction;
    return r;
}

/// Location of the interior minimum of wbar_base under the limit-cycle
/// condition.  Throws when the log argument is nonpositive (condition
/// violated).
inline double predict_min_time(double wbar_tau1, double b1, double b2,
                               const NormalFormCoeffs& c, double tau1) {
    const WbarBase wb = wbar_base(wbar_tau1, b1, b2, c, tau1);
    const double arg = b2 * wb.K / (wb.dH3 * (wb.K - wbar_tau1));
    if (!(arg > 0))
        throw DomainError("predict_min_time: condition violated, no interior minimum");
    return tau1 + std::log(arg) / (wb.dH3 - b2);
}

inline double predict_min_time(double wbar_tau1, const BCoefficients& b,
                               const NormalFormCoeffs& c, double tau1) {
    return predict_min_time(wbar_tau1, b.b1, b.b2, c, tau1);
}

/// Zero of wbar_base built from a fitted pair (k1, k2).  Throws when the
/// log argument is nonpositive (the decay hypothesis is violated and the
/// base curve never reaches zero).
inline double predict_crossing_time(double wbar_tau1, double k1, double k2,
                                    const NormalFormCoeffs& c, double tau1) {
    const WbarBase wb = wbar_base(wbar_tau1, k1, k2, c, tau1);
    const double den = wb.K - wbar_tau1;
    if (den == 0.0)
        throw DomainError("predict_crossing_time: hypothesis violated, boundary case");
    const double arg = wb.K / den;
    if (!(arg > 0))
        throw DomainError("predict_crossing_time: hypothesis violated, no zero ahead");
    return tau1 + std::log(arg) / (wb.dH3 - k2);
}

inline double predict_crossing_time(double wbar_tau1, const ExpFit& fit,
                                    const NormalFormCoeffs& c, double tau1) {
    return predict_crossing_time(wbar_tau1, fit.k1, fit.k2, c, tau1);
}

struct EWSReport {
    enum class Verdict { coexistence_minimum, extinction_warning, inconclusive };

    Verdict verdict = Verdict::inconclusive;
    int i0 = 0; ///< 1-based triggering interval when warning, else 0
    double warning_time_tau = std::numeric_limits<double>::quiet_NaN();
    double warning_time_s = std::numeric_limits<double>::quiet_NaN();
    double tau_min_pred = std::numeric_limits<double>::quiet_NaN();
    double tau_cross_pred = std::numeric_limits<double>::quiet_NaN();
    TheoremBounds theorem_bounds;
    bool monotonic_k1 = true, monotonic_k2 = true;
    int n_intervals = 0;
    double tau1 = 0, period = 0;
    double data_ratio = 0; ///< N * delta / k, data-volume diagnostic
    EWSConfig config;
    CriticalCurveFamily curves;
    MovingAverage wbar, u2bar;
};

inline std::string to_string(EWSReport::Verdict v) {
    switch (v) {
    case EWSReport::Verdict::coexistence_minimum: return "coexistence-minimum";
    case EWSReport::Verdict::extinction_warning: return "extinction-warning";
    default: return "inconclusive";
    }
}

/// Nested-interval critical-curve scan of an inward-spiraling uvw
/// trajectory.  Builds I_i = [tau_1, tau_{k+i}] from the u-peak sequence
/// and fits (k1_i, k2_i) to the u^2 moving average on each I_i.  Stage i
/// fires an extinction warning when wbar sits below the i-th critical
/// curve by more than cross_tol throughout the newly revealed subinterval
/// (tau_{k+i-1}, tau_{k+i}] (one full average period, which is the
/// sustained-crossing requirement); the warning time is the earliest
/// point from which wbar stays below the curve through the interval end.
/// The default cross_tol is delta^4, the residual jitter scale of the
/// fits, so hairline coincidence of wbar with a curve does not trigger.
/// With no crossing through the last stage the verdict is
/// coexistence-minimum with the predicted minimum time attached.
inline EWSReport nested_interval_scan(const Trajectory& tr,
                                      const NormalFormCoeffs& c,
                                      EWSConfig config = {}) {
    config.validate();
    if (tr.frame() != Trajectory::Frame::normal_form_uvw)
        throw KindMismatchError("nested_interval_scan: expected a uvw trajectory");

    PeakSequence peaks = detect_peaks(tr, true, 0);
    const int k = config.k;
    std::size_t n_peaks = peaks.size();
    if (config.N > 0)
        n_peaks = std::min(n_peaks, std::size_t(config.N));
    if (n_peaks < std::size_t(k) + 1)
        throw InsufficientDataError("nested_interval_scan: fewer than k+1 peaks");

    // the averages only exist up to t_end - window, so drop peaks whose
    // interval end cannot be averaged
    peaks.times.resize(n_peaks);
    peaks.values.resize(n_peaks);
    const double p = peaks.period();
    const double l = config.window > 0 ? config.window : p;
    while (n_peaks > std::size_t(k) + 1 &&
           peaks.times[n_peaks - 1] > tr.t_end() - l + 1e-12)
        --n_peaks;
    if (peaks.times[n_peaks - 1] > tr.t_end() - l + 1e-12)
        throw InsufficientDataError(
            "nested_interval_scan: trajectory too short for the window");
    peaks.times.resize(n_peaks);
    peaks.values.resize(n_peaks);

    EWSReport rep;
    rep.config = config;
    rep.tau1 = peaks.times.front();
    rep.period = p;
    rep.data_ratio = double(n_peaks) * c.delta / double(k);
    rep.n_intervals = int(n_peaks) - k;
    rep.u2bar = moving_average(tr, MAChannel::u_squared, l);
    rep.wbar = moving_average(tr, MAChannel::w, l);
    rep.curves.tau1 = rep.tau1;

    // wbar at tau1 with the first-interval average period as window
    const double l1 = (peaks.times[std::size_t(k)] - peaks.times[0]) / double(k);
    const double wbar_tau1 = moving_average(tr, MAChannel::w, l1).eval(rep.tau1);
    rep.theorem_bounds.wbar_tau1 = wbar_tau1;

    const double dH3 = c.delta * c.H3;
    const double dH11 = c.delta * c.H11;
    const double tau1 = rep.tau1;
    const double tol = config.cross_tol >= 0
                           ? config.cross_tol
                           : c.delta * c.delta * c.delta * c.delta;

    int fired = 0;          // 1-based interval index of the sustained crossing
    double cross_tau = std::numeric_limits<double>::quiet_NaN();
    for (int i = 1; i <= rep.n_intervals; ++i) {
        const double t_hi = peaks.times[std::size_t(k + i - 1)];
        CriticalCurve cc;
        cc.t_hi = t_hi;
        try {
            const ExpFit fit = fit_exponential(rep.u2bar, tau1, t_hi);
            cc.k1 = fit.k1;
            cc.k2 = fit.k2;
        } catch (const Error& e) {
            throw Error("nested_interval_scan: interval " + std::to_string(i) +
                        ": " + e.what());
        }
        if (cc.k2 < dH3)
            cc.K = dH11 * cc.k1 / (2.0 * (cc.k2 - dH3));
        rep.curves.curves.push_back(cc);

        if (fired || std::isnan(cc.K))
            continue;
        const auto& wg = rep.wbar.grid;
        const auto& wv = rep.wbar.values;
        std::size_t hi = wg.size();
        while (hi > 0 && wg[hi - 1] > t_hi + 1e-12)
            --hi;
        std::size_t lo = 0;
        while (lo < hi && wg[lo] < tau1 - 1e-12)
            ++lo;
        if (lo >= hi)
            continue;
        auto below = [&](std::size_t j) {
            return wv[j] < rep.curves.eval(std::size_t(i - 1), wg[j]) - tol;
        };
        // the newly revealed subinterval (tau_{k+i-1}, tau_{k+i}] must sit
        // entirely below the curve (for i = 1 all of I_1)
        const double t_lo = i == 1 ? tau1 : peaks.times[std::size_t(k + i - 2)];
        std::size_t rev = lo;
        while (rev < hi && wg[rev] <= t_lo + 1e-12)
            ++rev;
        if (i == 1)
            rev = lo;
        bool all_below = rev < hi;
        for (std::size_t j = rev; j < hi && all_below; ++j)
            all_below = below(j);
        if (!all_below)
            continue;
        // the sustained excursion certified by this stage begins at the
        // revealed window's start; the warning cannot predate it
        fired = i;
        cross_tau = t_lo;
    }

    // monotonicity diagnostics of the fitted sequences
    for (std::size_t i = 0; i + 1 < rep.curves.curves.size(); ++i) {
        const auto& a = rep.curves.curves[i];
        const auto& b = rep.curves.curves[i + 1];
        if (b.k1 > a.k1 * (1.0 + 1e-12))
            rep.curves.monotonic_k1 = false;
        if (b.k2 < a.k2 * (1.0 + 1e-12))
            rep.curves.monotonic_k2 = false;
        if (!std::isnan(a.K) && !std::isnan(b.K)) {
            if (rep.curves.eval(i, tau1) >= rep.curves.eval(i + 1, tau1) ||
                rep.curves.eval(i, a.t_hi) >= rep.curves.eval(i + 1, a.t_hi))
                rep.curves.ordered = false;
        }
    }
    rep.monotonic_k1 = rep.curves.monotonic_k1;
    rep.monotonic_k2 = rep.curves.monotonic_k2;

    const CriticalCurve& last =
        rep.curves.curves[std::size_t(fired ? fired - 1 : rep.n_intervals - 1)];
    const WbarBase wb = wbar_base(wbar_tau1, last.k1, last.k2, c, tau1);
    rep.theorem_bounds.lower = wb.K + c.delta * c.delta;
    rep.theorem_bounds.upper = -c.H11 * last.k1 / (2.0 * c.H3);

    if (fired) {
        rep.verdict = EWSReport::Verdict::extinction_warning;
        rep.i0 = fired;
        rep.warning_time_tau = cross_tau;
        rep.warning_time_s = c.delta * cross_tau;
        try {
            rep.tau_cross_pred =
                predict_crossing_time(wbar_tau1, last.k1, last.k2, c, tau1);
        } catch (const DomainError&) {
        }
    } else {
        try {
            rep.tau_min_pred = predict_min_time(wbar_tau1, last.k1, last.k2, c, tau1);
            rep.verdict = EWSReport::Verdict::coexistence_minimum;
        } catch (const DomainError&) {
            rep.verdict = EWSReport::Verdict::inconclusive;
        }
    }
    return rep;
}

} // namespace fastslow
