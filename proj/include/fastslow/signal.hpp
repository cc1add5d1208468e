#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fastslow/errors.hpp"
#include "fastslow/integrate.hpp"

namespace fastslow {

/// Local maxima of a channel, truncated at the longest run of
/// non-increasing values (tolerance 1e-9 so constant-amplitude inputs keep
/// their full sequence).
struct PeakSequence {
    std::vector<double> times;  ///< strictly increasing
    std::vector<double> values; ///< non-increasing within tolerance

    std::size_t size() const { return times.size(); }

    /// Mean gap between successive peaks; needs at least two peaks.
    double period() const {
        if (times.size() < 2)
            throw InsufficientDataError("PeakSequence::period: need >= 2 peaks");
        return (times.back() - times.front()) / double(times.size() - 1);
    }
};

/// Discrete local maxima of one channel on the trajectory's own grid,
/// optionally refined by the parabola through the three bracketing samples.
/// The caller must provide a densely sampled trajectory (>= 20 samples per
/// oscillation).
inline PeakSequence detect_peaks(const Trajectory& tr, bool refine = true,
                                 int channel = 0) {
    const auto& ts = tr.grid();
    const std::size_t n = ts.size();
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i)
        ys[i] = tr.eval_channel(channel, ts[i]);

    PeakSequence out;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(ys[i] > ys[i - 1] && ys[i] > ys[i + 1]))
            continue;
        double tp = ts[i], yp = ys[i];
        if (refine) {
            // parabola through the three bracketing samples (Newton form)
            const double d1 = (ys[i] - ys[i - 1]) / (ts[i] - ts[i - 1]);
            const double d2 =
                ((ys[i + 1] - ys[i]) / (ts[i + 1] - ts[i]) - d1) / (ts[i + 1] - ts[i - 1]);
            if (d2 < 0.0) {
                double tv = 0.5 * (ts[i - 1] + ts[i]) - d1 / (2.0 * d2);
                tv = std::clamp(tv, ts[i - 1], ts[i + 1]);
                tp = tv;
                yp = ys[i - 1] + d1 * (tv - ts[i - 1]) +
                     d2 * (tv - ts[i - 1]) * (tv - ts[i]);
            }
        }
        out.times.push_back(tp);
        out.values.push_back(yp);
    }
    if (out.times.size() < 2)
        throw InsufficientDataError("detect_peaks: fewer than 2 peaks");

    std::size_t keep = 1;
    while (keep < out.values.size() && out.values[keep] <= out.values[keep - 1] + 1e-9)
        ++keep;
    out.times.resize(keep);
    out.values.resize(keep);
    if (keep < 2)
        throw InsufficientDataError("detect_peaks: peak values not decreasing");
    return out;
}

/// Channel fed into a moving average: the squared rotation channels or the
/// plain slow channel.
enum class MAChannel { u_squared, v_squared, w };

inline std::string to_string(MAChannel c) {
    switch (c) {
    case MAChannel::u_squared: return "u2";
    case MAChannel::v_squared: return "v2";
    default: return "w";
    }
}

/// Forward moving average gbar(t) = (1/l) * integral of g over [t, t+l],
/// sampled on the source grid restricted to t <= t_end - l.
struct MovingAverage {
    double window = 0;
    MAChannel channel = MAChannel::w;
    std::vector<double> grid;
    std::vector<double> values;

    double t_begin() const { return grid.front(); }
    double t_end() const { return grid.back(); }

    /// Linear interpolation on the sample grid.
    double eval(double t) const {
        if (grid.empty())
            throw DomainError("MovingAverage::eval: empty average");
        if (t < grid.front() - 1e-12 || t > grid.back() + 1e-12)
            throw DomainError("MovingAverage::eval: time outside averaged span");
        if (grid.size() == 1)
            return values.front();
        t = std::clamp(t, grid.front(), grid.back());
        const auto it = std::upper_bound(grid.begin(), grid.end(), t);
        const std::size_t j = std::min(grid.size() - 1,
                                       std::size_t(std::max<std::ptrdiff_t>(
                                           1, it - grid.begin())));
        const double th = (t - grid[j - 1]) / (grid[j] - grid[j - 1]);
        return (1.0 - th) * values[j - 1] + th * values[j];
    }
};

/// Trapezoidal moving average of a channel of a uvw trajectory.  The
/// quadrature runs on a uniform refinement of the source grid with exact
/// endpoint evaluations, so constants are averaged exactly and full-period
/// averages of smooth oscillations converge at high order.
inline MovingAverage moving_average(const Trajectory& tr, MAChannel channel,
                                    double l) {
    if (tr.frame() != Trajectory::Frame::normal_form_uvw)
        throw KindMismatchError("moving_average: expected a uvw trajectory");
    const double span = tr.t_end() - tr.t_begin();
    if (!(l > 0))
        throw DomainError("moving_average: window must be positive");
    if (l > span + 1e-12)
        throw DomainError("moving_average: window exceeds trajectory span");

    const auto& ts = tr.grid();
    const int src_channel = channel == MAChannel::w ? 2
                            : channel == MAChannel::v_squared ? 1
                                                              : 0;
    const bool squared = channel != MAChannel::w;
    auto g = [&](double t) {
        const double v = tr.eval_channel(src_channel, t);
        return squared ? v * v : v;
    };

    // uniform quadrature grid, no coarser than the source sampling
    std::vector<double> gaps(ts.size() - 1);
    for (std::size_t i = 0; i + 1 < ts.size(); ++i)
        gaps[i] = ts[i + 1] - ts[i];
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    double dt = std::min(gaps[gaps.size() / 2], l / 128.0);
    dt = std::max(dt, span / 6e6);
    const std::size_t m = std::max<std::size_t>(2, std::size_t(std::ceil(span / dt)));
    const double h = span / double(m);

    std::vector<double> gv(m + 1), cum(m + 1);
    for (std::size_t k = 0; k <= m; ++k)
        gv[k] = g(tr.t_begin() + k * h);
    cum[0] = 0.0;
    for (std::size_t k = 1; k <= m; ++k)
        cum[k] = cum[k - 1] + 0.5 * h * (gv[k - 1] + gv[k]);

    auto integral_to = [&](double t) {
        const double x = (t - tr.t_begin()) / h;
        const std::size_t k = std::min<std::size_t>(m - 1, std::size_t(std::max(0.0, x)));
        const double tk = tr.t_begin() + k * h;
        return cum[k] + 0.5 * (t - tk) * (gv[k] + g(t));
    };

    MovingAverage out;
    out.window = l;
    out.channel = channel;
    const double t_max = tr.t_end() - l;
    for (double t : ts) {
        if (t > t_max + 1e-12)
            break;
        const double tt = std::min(t, t_max);
        out.grid.push_back(tt);
        out.values.push_back((integral_to(tt + l) - integral_to(tt)) / l);
    }
    if (out.grid.empty())
        throw DomainError("moving_average: no sample fits the window");
    return out;
}

/// One-exponential fit g ~ k1 * exp(k2 * (t - t0)) over [t0, t1].
struct ExpFit {
    double k1 = 0; ///< amplitude at the interval start
    double k2 = 0; ///< growth/decay rate
    double t0 = 0, t1 = 0;
    double residual = 0; ///< RMS of log residuals at the final parameters
    double rms = 0;      ///< RMS on the original scale
    double gamma1 = 0, gamma2 = 0; ///< oscillatory remainder, diagnostic only
};

/// Log-linear least squares followed by a Gauss-Newton pass on the original
/// scale (<= 20 iterations), kept only when it lowers the untransformed RMS.
/// With theta > 0 the remainder is regressed on exp(k2 t)cos/sin(2 theta t)
/// to fill the diagnostic gamma coefficients.
inline ExpFit fit_exponential(const MovingAverage& ma, double t0, double t1,
                              double theta = 0) {
    if (!(t1 > t0))
        throw DomainError("fit_exponential: empty fit interval");
    std::vector<double> xs, gs;
    for (std::size_t i = 0; i < ma.grid.size(); ++i) {
        if (ma.grid[i] < t0 - 1e-12 || ma.grid[i] > t1 + 1e-12)
            continue;
        xs.push_back(ma.grid[i] - t0);
        gs.push_back(ma.values[i]);
    }
    const std::size_t n = xs.size();
    if (n < 3)
        throw InsufficientDataError("fit_exponential: fewer than 3 samples in interval");
    for (double v : gs)
        if (!(v > 0))
            throw DomainError("fit_exponential: nonpositive sample in interval");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = std::log(gs[i]);
        sx += xs[i];
        sy += y;
        sxx += xs[i] * xs[i];
        sxy += xs[i] * y;
    }
    const double det = n * sxx - sx * sx;
    if (!(det > 1e-14 * n * sxx))
        throw DomainError("fit_exponential: rank-deficient design");
    double k2 = (n * sxy - sx * sy) / det;
    double k1 = std::exp((sy - k2 * sx) / n);

    auto rms_of = [&](double a, double b) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = gs[i] - a * std::exp(b * xs[i]);
            s += r * r;
        }
        return std::sqrt(s / n);
    };
    const double rms_log_stage = rms_of(k1, k2);

    // Gauss-Newton on the original scale with step halving
    double a = k1, b = k2, best = rms_log_stage;
    for (int iter = 0; iter < 20; ++iter) {
        double j11 = 0, j12 = 0, j22 = 0, r1 = 0, r2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(b * xs[i]);
            const double r = gs[i] - a * e;
            const double da = e, db = a * xs[i] * e;
            j11 += da * da;
            j12 += da * db;
            j22 += db * db;
            r1 += da * r;
            r2 += db * r;
        }
        const double d = j11 * j22 - j12 * j12;
        if (!(std::abs(d) > 1e-300))
            break;
        double step_a = (j22 * r1 - j12 * r2) / d;
        double step_b = (j11 * r2 - j12 * r1) / d;
        double scale = 1.0;
        bool moved = false;
        for (int half = 0; half < 8; ++half, scale *= 0.5) {
            const double na = a + scale * step_a, nb = b + scale * step_b;
            if (!(na > 0) || !std::isfinite(na) || !std::isfinite(nb))
                continue;
            const double r = rms_of(na, nb);
            if (r < best) {
                a = na;
                b = nb;
                best = r;
                moved = true;
                break;
            }
        }
        if (!moved)
            break;
    }
    if (best < rms_log_stage) {
        k1 = a;
        k2 = b;
    }

    ExpFit fit;
    fit.k1 = k1;
    fit.k2 = k2;
    fit.t0 = t0;
    fit.t1 = t1;
    fit.rms = rms_of(k1, k2);
    double slog = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::log(gs[i]) - (std::log(k1) + k2 * xs[i]);
        slog += r * r;
    }
    fit.residual = std::sqrt(slog / n);

    if (theta > 0) {
        double p11 = 0, p12 = 0, p22 = 0, q1 = 0, q2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(k2 * xs[i]);
            const double c = e * std::cos(2.0 * theta * xs[i]);
            const double sn = e * std::sin(2.0 * theta * xs[i]);
            const double r = gs[i] - k1 * e;
            p11 += c * c;
            p12 += c * sn;
            p22 += sn * sn;
            q1 += c * r;
            q2 += sn * r;
        }
        const double d = p11 * p22 - p12 * p12;
        if (std::abs(d) > 1e-300) {
            fit.gamma1 = (p22 * q1 - p12 * q2) / d;
            fit.gamma2 = (p11 * q2 - p12 * q1) / d;
        }
    }
    return fit;
}

} // namespace fastslow
