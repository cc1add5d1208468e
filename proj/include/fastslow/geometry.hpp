#pragma once

#include <cmath>

#include "fastslow/errors.hpp"
#include "fastslow/normal_form.hpp"

namespace fastslow {

/// Point in normal-form coordinates.
struct NFState {
    double u = 0, v = 0, w = 0;
};

/// Closed-form solution of the oscillation pair linearized at the folded
/// equilibrium, with the slow mode driven by the squared oscillation:
///   u' = delta alpha u + v,  v' = -u,  w' = delta (H3 w + H11 u^2 / 2).
/// u and v are damped (alpha < 0) spirals of amplitude A; w is the exact
/// variation-of-constants solution for that forcing.
struct LinearFlowModel {
    double A = 0;      ///< spiral amplitude
    double theta = 0;  ///< spiral frequency sqrt(1 - alpha^2 delta^2 / 4)
    double phi1 = 0;   ///< u phase
    double phi2 = 0;   ///< v phase
    double Cc = 0;     ///< cos(2 theta tau) forcing-response coefficient
    double Dd = 0;     ///< sin(2 theta tau) forcing-response coefficient
    double Ee = 0;     ///< non-oscillatory forcing-response coefficient
    double alpha = 0, delta = 0, H3 = 0, H11 = 0;
    double u0 = 0, v0 = 0, w0 = 0;

    double u(double tau) const {
        return A * std::exp(alpha * delta * tau / 2.0) * std::sin(theta * tau + phi1);
    }
    double v(double tau) const {
        return A * std::exp(alpha * delta * tau / 2.0) * std::sin(theta * tau + phi2);
    }
    double w(double tau) const {
        const double hom =
            std::exp(delta * H3 * tau) * (w0 - (delta * H11 / 2.0) * (Cc + Ee));
        const double part = (delta * H11 / 2.0) * std::exp(alpha * delta * tau) *
                            (Cc * std::cos(2.0 * theta * tau) +
                             Dd * std::sin(2.0 * theta * tau) + Ee);
        return hom + part;
    }
    NFState state(double tau) const { return {u(tau), v(tau), w(tau)}; }
};

/// Build the closed-form linear flow through (u0, v0, w0).
/// Requires |alpha delta| < 2 (oscillatory pair) and alpha != H3 (no
/// resonance between the pair envelope and the slow mode).
inline LinearFlowModel linear_flow(const NormalFormCoeffs& c, double alpha,
                                   double u0, double v0, double w0) {
    LinearFlowModel m;
    m.alpha = alpha;
    m.delta = c.delta;
    m.H3 = c.H3;
    m.H11 = c.H11;
    m.u0 = u0;
    m.v0 = v0;
    m.w0 = w0;

    const double ad = alpha * c.delta;
    if (ad * ad >= 4.0)
        throw DomainError("linear_flow: pair is not oscillatory (|alpha delta| >= 2)");
    m.theta = std::sqrt(1.0 - ad * ad / 4.0);

    const double q = u0 * u0 + ad * u0 * v0 + v0 * v0; // positive definite here
    m.A = std::sqrt(q) / m.theta;
    m.phi1 = std::atan2(2.0 * m.theta * u0, 2.0 * v0 + ad * u0);
    m.phi2 = std::atan2(2.0 * m.theta * v0, -(2.0 * u0 + ad * v0));

    const double k = c.delta * (alpha - c.H3);
    if (k == 0.0)
        throw DomainError("linear_flow: resonant slow mode (alpha = H3)");
    const double th2 = m.theta * m.theta;
    const double S = 2.0 * v0 + ad * u0;
    const double den = 4.0 * th2 + k * k;
    m.Cc = (k * (4.0 * th2 * u0 * u0 - S * S) - 8.0 * th2 * u0 * S) /
           (8.0 * th2 * den);
    m.Dd = (4.0 * th2 * u0 * u0 - S * S + 2.0 * k * u0 * S) / (4.0 * m.theta * den);
    m.Ee = m.A * m.A / (2.0 * k);
    return m;
}

/// Quadratic graph w = Theta(u, v) of the local stable manifold of the folded
/// equilibrium (2D for alpha < 0: the damped pair directions).
struct StableManifoldGraph {
    double theta_uu = 0; ///< second derivative; equals theta_vv
    double theta_vv = 0;
    double theta_uv = 0; ///< mixed second derivative (O(delta) tilt)

    double eval(double u, double v) const {
        return 0.5 * theta_uu * u * u + 0.5 * theta_vv * v * v + theta_uv * u * v;
    }
};

inline StableManifoldGraph stable_manifold(const NormalFormCoeffs& c, double alpha) {
    if (alpha == c.H3)
        throw DomainError("stable_manifold: alpha = H3 makes the graph singular");
    StableManifoldGraph g;
    g.theta_uu = c.H11 / (2.0 * (alpha - c.H3));
    g.theta_vv = g.theta_uu;
    g.theta_uv = c.delta * c.H3 * c.H11 / (4.0 * (alpha - c.H3));
    return g;
}

/// Funnel membership: above (or on) the separating paraboloid
/// w = -(H11 / (2 H3)) (u^2 + v^2).  Trajectories in the funnel approach the
/// limit cycle; the region below it is the one solutions can leave towards
/// w -> -infinity.
inline bool in_funnel(const NormalFormCoeffs& c, const NFState& q) {
    if (c.H3 == 0.0)
        throw DomainError("in_funnel: H3 = 0");
    return q.w >= -(c.H11 / (2.0 * c.H3)) * (q.u * q.u + q.v * q.v);
}

} // namespace fastslow
