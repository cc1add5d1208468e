#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fastslow/equilibria.hpp"
#include "fastslow/errors.hpp"
#include "fastslow/integrate.hpp"
#include "fastslow/normal_form.hpp"

namespace fastslow {

struct AttractorVerdict {
    enum class Kind { limit_cycle, boundary_xz, w_divergence, undecided };
    Kind kind = Kind::undecided;
    double decision_time = 0;
    std::string evidence; ///< populated whenever kind != undecided
};

inline const char* to_string(AttractorVerdict::Kind k) {
    switch (k) {
    case AttractorVerdict::Kind::limit_cycle:
        return "limit-cycle";
    case AttractorVerdict::Kind::boundary_xz:
        return "boundary-xz";
    case AttractorVerdict::Kind::w_divergence:
        return "w-divergence";
    default:
        return "undecided";
    }
}

namespace detail {

struct OscillationBand {
    bool is_cycle = false;
    double amp_mean = 0, amp_spread = 0;
    double t_first_peak = 0;
};

/// Tests the last 20% of the span for a bounded oscillation in channel 0
/// whose cycle amplitudes (peak minus following trough, values refined by a
/// quadratic through the three bracketing samples) stay within 5% of their
/// mean.  An amplitude floor rejects equilibrium convergence.
inline OscillationBand oscillation_band(const Trajectory& tr, double amp_floor) {
    OscillationBand out;
    const double t1 = tr.t_end();
    const double t0 = t1 - 0.2 * (t1 - tr.t_begin());
    const int n = 16384;
    const double dt = (t1 - t0) / (n - 1);
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i)
        s[i] = tr.eval_channel(0, t0 + i * dt);

    auto refine = [&](int i) { // quadratic vertex through samples i-1, i, i+1
        const double a = s[i - 1], b = s[i], c = s[i + 1];
        const double den = a - 2 * b + c;
        if (den == 0)
            return b;
        const double off = 0.5 * (a - c) / den;
        return b - 0.25 * (a - c) * off;
    };

    std::vector<double> peaks, troughs, peak_times;
    for (int i = 1; i + 1 < n; ++i) {
        if (s[i] > s[i - 1] && s[i] >= s[i + 1]) {
            peaks.push_back(refine(i));
            peak_times.push_back(t0 + i * dt);
        } else if (s[i] < s[i - 1] && s[i] <= s[i + 1]) {
            troughs.push_back(refine(i));
        }
    }
    if (peaks.size() < 3 || troughs.size() < 3)
        return out;
    const std::size_t m = std::min(peaks.size(), troughs.size());
    std::vector<double> amp(m);
    for (std::size_t j = 0; j < m; ++j)
        amp[j] = peaks[j] - troughs[j];
    const double mean = std::accumulate(amp.begin(), amp.end(), 0.0) / m;
    if (!(mean > amp_floor))
        return out;
    double spread = 0;
    for (double a : amp)
        spread = std::max(spread, std::abs(a - mean));
    out.amp_mean = mean;
    out.amp_spread = spread;
    out.t_first_peak = peak_times.front();
    out.is_cycle = spread <= 0.05 * mean;
    return out;
}

} // namespace detail

/// Asymptotic classification of an xyz trajectory.  Boundary absorption wins:
/// the verdict is boundary-xz at the first time y has fallen below 1e-4 with
/// (x,z) within 1e-3 of the xz boundary equilibrium.  Otherwise limit-cycle
/// if the last 20% of the run shows a stable bounded oscillation.
inline AttractorVerdict classify_attractor(const Trajectory& tr,
                                           const ModelParams& p) {
    if (tr.frame() != Trajectory::Frame::model_xyz)
        throw KindMismatchError("classify_attractor: expected an xyz trajectory");
    AttractorVerdict v;

    bool have_exz = true;
    State exz{};
    try {
        exz = find_equilibrium(p, EquilibriumKind::boundary_xz).state;
    } catch (const Error&) {
        have_exz = false;
    }
    if (have_exz) {
        for (double t : tr.grid()) {
            const Eigen::Vector3d q = tr.eval(t);
            if (q[1] < 1e-4 && std::abs(q[0] - exz.x) <= 1e-3 &&
                std::abs(q[2] - exz.z) <= 1e-3) {
                v.kind = AttractorVerdict::Kind::boundary_xz;
                v.decision_time = t;
                v.evidence = "y below 1e-4 and (x,z) within 1e-3 of the boundary "
                             "equilibrium";
                return v;
            }
        }
    }

    const auto band = detail::oscillation_band(tr, 1e-3);
    if (band.is_cycle) {
        v.kind = AttractorVerdict::Kind::limit_cycle;
        v.decision_time = band.t_first_peak;
        v.evidence = "x oscillation amplitude " + std::to_string(band.amp_mean) +
                     " stable to " +
                     std::to_string(100.0 * band.amp_spread / band.amp_mean) +
                     "% over the last 20% of the run";
        return v;
    }
    return v;
}

/// Asymptotic classification of a uvw (normal-form) trajectory.  Escape wins:
/// w reaching -5 is the proxy for divergence to -infinity.  Otherwise
/// limit-cycle on the u channel as in the xyz mode.
inline AttractorVerdict classify_attractor(const Trajectory& tr,
                                           const NormalFormCoeffs&) {
    if (tr.frame() != Trajectory::Frame::normal_form_uvw)
        throw KindMismatchError("classify_attractor: expected a uvw trajectory");
    AttractorVerdict v;

    for (const auto& e : tr.events) {
        if (e.name == "w-divergence") {
            v.kind = AttractorVerdict::Kind::w_divergence;
            v.decision_time = e.t;
            v.evidence = "w reached -5";
            return v;
        }
    }
    // sample-backed runs carry no event log; fall back to a scan
    if (!tr.interpolant_backed()) {
        for (double t : tr.grid()) {
            if (tr.eval_channel(2, t) <= -5.0) {
                v.kind = AttractorVerdict::Kind::w_divergence;
                v.decision_time = t;
                v.evidence = "w reached -5";
                return v;
            }
        }
    }

    const auto band = detail::oscillation_band(tr, 1e-3);
    if (band.is_cycle) {
        v.kind = AttractorVerdict::Kind::limit_cycle;
        v.decision_time = band.t_first_peak;
        v.evidence = "u oscillation amplitude " + std::to_string(band.amp_mean) +
                     " stable to " +
                     std::to_string(100.0 * band.amp_spread / band.amp_mean) +
                     "% over the last 20% of the run";
        return v;
    }
    return v;
}

} // namespace fastslow
