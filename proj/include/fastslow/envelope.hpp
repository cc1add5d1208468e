#pragma once

#include <cmath>

#include "fastslow/errors.hpp"
#include "fastslow/geometry.hpp"
#include "fastslow/normal_form.hpp"
#include "fastslow/signal.hpp"

namespace fastslow {

/// Envelope constants of the inward-spiraling rotation: upper envelopes
/// A e^{c2 t}, B e^{c2 t} and the averaged-square forcing u2bar_base =
/// b1 e^{b2 (t - t1)}.
struct BCoefficients {
    double A = 0;     ///< rotation amplitude at the initial point
    double theta = 0; ///< angular frequency sqrt(1 - alpha^2 delta^2 / 4)
    double b1 = 0;    ///< averaged-square amplitude, > 0
    double b2 = 0;    ///< averaged-square decay rate, < 0
    double B = 0;     ///< = A / (c2^2 + theta^2)
    double c2 = 0;    ///< = b2 / 2
};

/// Assembles the envelope constants from the initial point and the peak
/// sequence.  b2 defaults to the leading-order alpha*delta and is replaced
/// by the fitted rate when an empirical fit is supplied; b1 follows from
/// the averaged-square relation with the angular frequency estimated from
/// the average period (theta ~ 2 pi / p).
inline BCoefficients b_coefficients(const NFState& ic, const NormalFormCoeffs& c,
                                    double alpha, const PeakSequence& peaks,
                                    const ExpFit* empirical = nullptr) {
    BCoefficients b;
    b.b2 = empirical ? empirical->k2 : alpha * c.delta;
    if (!(b.b2 < 0))
        throw DomainError("b_coefficients: b2 >= 0, not in the decaying regime");
    b.theta = std::sqrt(1.0 - alpha * alpha * c.delta * c.delta / 4.0);
    b.A = std::sqrt(ic.u * ic.u + ic.u * ic.v * b.b2 + ic.v * ic.v) / b.theta;
    const double p = peaks.period();
    const double theta_p = 2.0 * M_PI / p;
    b.b1 = b.A * b.A * theta_p / (4.0 * M_PI * b.b2) *
           (1.0 - std::exp(-2.0 * M_PI * b.b2 / theta_p));
    b.c2 = b.b2 / 2.0;
    b.B = b.A / (b.c2 * b.c2 + b.theta * b.theta);
    return b;
}

/// Closed-form solution of the averaged slow equation
/// wbar' = delta H3 wbar + (delta/2) H11 u2bar_base with
/// u2bar_base(t) = b1 e^{b2 (t - t1)}:
/// wbar(t) = (W - K) e^{delta H3 (t - t1)} + K e^{b2 (t - t1)},
/// K = delta H11 b1 / (2 (b2 - delta H3)).
struct WbarBase {
    double W = 0;    ///< wbar at the anchor time
    double K = 0;    ///< particular-solution amplitude
    double b1 = 0, b2 = 0;
    double dH3 = 0;  ///< delta * H3
    double dH11 = 0; ///< delta * H11
    double tau1 = 0;

    double operator()(double tau) const {
        const double dt = tau - tau1;
        return (W - K) * std::exp(dH3 * dt) + K * std::exp(b2 * dt);
    }
    double derivative(double tau) const {
        const double dt = tau - tau1;
        return (W - K) * dH3 * std::exp(dH3 * dt) + K * b2 * std::exp(b2 * dt);
    }
    /// The forcing the closed form solves against.
    double u2_base(double tau) const { return b1 * std::exp(b2 * (tau - tau1)); }
};

inline WbarBase wbar_base(double wbar_tau1, double b1, double b2,
                          const NormalFormCoeffs& c, double tau1) {
    WbarBase w;
    w.W = wbar_tau1;
    w.b1 = b1;
    w.b2 = b2;
    w.dH3 = c.delta * c.H3;
    w.dH11 = c.delta * c.H11;
    w.tau1 = tau1;
    const double den = b2 - w.dH3;
    if (std::abs(den) < 1e-12 * (std::abs(b2) + std::abs(w.dH3) + 1e-30))
        throw DomainError("wbar_base: resonant denominator b2 = delta*H3");
    w.K = w.dH11 * b1 / (2.0 * den);
    return w;
}

inline WbarBase wbar_base(double wbar_tau1, const ExpFit& fit,
                          const NormalFormCoeffs& c, double tau1) {
    return wbar_base(wbar_tau1, fit.k1, fit.k2, c, tau1);
}

inline WbarBase wbar_base(double wbar_tau1, const BCoefficients& b,
                          const NormalFormCoeffs& c, double tau1) {
    return wbar_base(wbar_tau1, b.b1, b.b2, c, tau1);
}

} // namespace fastslow
