#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <string>

#include "fastslow/errors.hpp"

namespace fastslow {

/// Parameters of the one-prey-two-predator slow-fast model.
/// Defaults are the reference parameter set used throughout the test suite;
/// h is the bifurcation parameter (predator-interference strength).
struct ModelParams {
    double beta1 = 0.1923; ///< half-saturation of predator 1 response
    double beta2 = 0.6;    ///< half-saturation of predator 2 response
    double c     = 0.4;    ///< predator 1 death rate
    double d     = 0.21;   ///< predator 2 death rate
    double a12   = 0.5;    ///< effect of predator 2 on predator 1
    double a21   = 0.1;    ///< effect of predator 1 on predator 2
    double h     = 0.2649; ///< predator 2 self-interference (bifurcation parameter)
    double zeta  = 0.01;   ///< timescale separation (prey is fast)

    void validate() const {
        auto bad = [](double v) { return !std::isfinite(v); };
        if (bad(beta1) || bad(beta2) || bad(c) || bad(d) || bad(a12) || bad(a21) ||
            bad(h) || bad(zeta))
            throw DomainError("ModelParams: non-finite parameter");
        auto unit = [](double v) { return v > 0.0 && v < 1.0; };
        if (!unit(beta1) || !unit(beta2) || !unit(c) || !unit(d) || !unit(a12) ||
            !unit(a21))
            throw DomainError(
                "ModelParams: beta1, beta2, c, d, a12, a21 must lie in (0, 1)");
        if (h < 0.0)
            throw DomainError("ModelParams: h must be nonnegative");
        if (zeta <= 0.0)
            throw DomainError("ModelParams: zeta must be positive");
    }
};

/// Point in (prey, predator 1, predator 2) phase space.
struct State {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

/// Which clock the right-hand side is expressed on.  On the slow clock the
/// prey equation carries 1/zeta; on the fast clock the predator equations
/// carry zeta.  The two fields differ by the scalar factor zeta only.
enum class Timescale { slow, fast };

/// Per-capita growth functions (phi, chi, psi) and their partial derivatives
/// at a state, through third order in x plus the cross terms used by the
/// normal-form machinery, plus derivatives in the bifurcation parameter h.
struct PartialTable {
    double phi = 0, chi = 0, psi = 0;

    // first order
    double phi_x = 0, phi_y = 0, phi_z = 0;
    double chi_x = 0, chi_y = 0, chi_z = 0;
    double psi_x = 0, psi_y = 0, psi_z = 0;

    // second order (order >= 2)
    double phi_xx = 0, phi_xy = 0, phi_xz = 0;
    double chi_xx = 0, psi_xx = 0;

    // third order (order >= 3)
    double phi_xxx = 0;

    // derivatives in the bifurcation parameter h
    double phi_h = 0, chi_h = 0, psi_h = 0, phi_xh = 0;
};

/// A slow-fast model with one fast direction: exposes the per-capita rates,
/// their partial-derivative table, and the timescale separation.
template <class M>
concept SlowFastModel = requires(const M& m, const State& s, int order) {
    { m.phi(s) } -> std::convertible_to<double>;
    { m.chi(s) } -> std::convertible_to<double>;
    { m.psi(s) } -> std::convertible_to<double>;
    { m.partials(s, order) } -> std::convertible_to<PartialTable>;
    { m.zeta() } -> std::convertible_to<double>;
};

/// The concrete one-prey-two-predator model
///   zeta x' = x phi,   y' = y chi,   z' = z psi          (slow clock)
/// with Holling type II predation and predator 2 self-interference:
///   phi = 1 - x - y/(beta1+x) - z/(beta2+x)
///   chi = x/(beta1+x) - c - a12 z
///   psi = x/(beta2+x) - d - a21 y - h z
class PredatorPreyModel {
  public:
    explicit PredatorPreyModel(const ModelParams& p) : p_(p) { p_.validate(); }

    const ModelParams& params() const { return p_; }
    double zeta() const { return p_.zeta; }

    double phi(const State& s) const {
        auto [b1x, b2x] = denominators(s);
        return 1.0 - s.x - s.y / b1x - s.z / b2x;
    }
    double chi(const State& s) const {
        auto [b1x, b2x] = denominators(s);
        (void)b2x;
        return s.x / b1x - p_.c - p_.a12 * s.z;
    }
    double psi(const State& s) const {
        auto [b1x, b2x] = denominators(s);
        (void)b1x;
        return s.x / b2x - p_.d - p_.a21 * s.y - p_.h * s.z;
    }

    /// Closed-form derivative table.  `order` in {1,2,3} selects how deep the
    /// table is filled; entries above the requested order stay zero.
    PartialTable partials(const State& s, int order = 3) const {
        if (order < 1 || order > 3)
            throw DomainError("partials: order must be 1, 2, or 3");
        auto [b1x, b2x] = denominators(s);
        const double b1x2 = b1x * b1x, b2x2 = b2x * b2x;
        const double b1x3 = b1x2 * b1x, b2x3 = b2x2 * b2x;

        PartialTable t;
        t.phi = 1.0 - s.x - s.y / b1x - s.z / b2x;
        t.chi = s.x / b1x - p_.c - p_.a12 * s.z;
        t.psi = s.x / b2x - p_.d - p_.a21 * s.y - p_.h * s.z;

        t.phi_x = -1.0 + s.y / b1x2 + s.z / b2x2;
        t.phi_y = -1.0 / b1x;
        t.phi_z = -1.0 / b2x;
        t.chi_x = p_.beta1 / b1x2;
        t.chi_y = 0.0;
        t.chi_z = -p_.a12;
        t.psi_x = p_.beta2 / b2x2;
        t.psi_y = -p_.a21;
        t.psi_z = -p_.h;

        t.phi_h = 0.0;
        t.chi_h = 0.0;
        t.psi_h = -s.z;
        t.phi_xh = 0.0;

        if (order >= 2) {
            t.phi_xx = -2.0 * s.y / b1x3 - 2.0 * s.z / b2x3;
            t.phi_xy = 1.0 / b1x2;
            t.phi_xz = 1.0 / b2x2;
            t.chi_xx = -2.0 * p_.beta1 / b1x3;
            t.psi_xx = -2.0 * p_.beta2 / b2x3;
        }
        if (order >= 3)
            t.phi_xxx = 6.0 * s.y / (b1x3 * b1x) + 6.0 * s.z / (b2x3 * b2x);
        return t;
    }

  private:
    std::pair<double, double> denominators(const State& s) const {
        if (!s.finite())
            throw DomainError("model: non-finite state");
        const double b1x = p_.beta1 + s.x;
        const double b2x = p_.beta2 + s.x;
        if (std::abs(b1x) < 1e-14 || std::abs(b2x) < 1e-14)
            throw DomainError("model: state at a response-function pole");
        return {b1x, b2x};
    }

    ModelParams p_;
};

/// Vector field of a slow-fast model on the requested clock.
/// Slow clock: (x phi / zeta, y chi, z psi).  Fast clock is zeta times that.
template <SlowFastModel M>
std::array<double, 3> eval_rhs(const State& s, const M& m, Timescale ts) {
    const double f1 = s.x * m.phi(s);
    const double f2 = s.y * m.chi(s);
    const double f3 = s.z * m.psi(s);
    const double zeta = m.zeta();
    if (ts == Timescale::slow)
        return {f1 / zeta, f2, f3};
    return {f1, zeta * f2, zeta * f3};
}

inline std::array<double, 3> eval_rhs(const State& s, const ModelParams& p,
                                      Timescale ts = Timescale::slow) {
    return eval_rhs(s, PredatorPreyModel(p), ts);
}

inline PartialTable partials(const State& s, const ModelParams& p, int order = 3) {
    return PredatorPreyModel(p).partials(s, order);
}

} // namespace fastslow
