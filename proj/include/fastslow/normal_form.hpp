#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>

#include "fastslow/equilibria.hpp"
#include "fastslow/ftable.hpp"
#include "fastslow/model.hpp"

namespace fastslow {

/// Coefficients of the three-dimensional singular-Hopf normal form
///   u' = v + u^2/2 + delta (alpha u + F13 u w + F111 u^3 / 6)
///   v' = -u
///   w' = delta (H3 w + H11 u^2 / 2)
/// on the oscillation timescale tau, together with the affine law
/// alpha(h) = alpha_slope * h + alpha_intercept mapping the model parameter
/// onto the unfolding parameter.
struct NormalFormCoeffs {
    double omega = 0;  ///< fast-pair frequency scale, omega^2 = -(f1y f2x + f1z f3x)
    double delta = 0;  ///< sqrt(zeta)/omega, the small parameter of the form
    double F13 = 0;    ///< u-w coupling
    double F111 = 0;   ///< cubic damping
    double H3 = 0;     ///< slow-mode growth rate
    double H11 = 0;    ///< quadratic forcing of the slow mode
    double alpha_slope = 0;
    double alpha_intercept = 0;
    double h_fsn = 0;      ///< parameter value of the folded singularity
    State fsn_point;       ///< its phase-space location
    double zeta = 0;

    double alpha(double h) const { return alpha_slope * h + alpha_intercept; }

    /// The sign regime all asymptotic results assume.
    bool sign_regime_ok() const { return F13 > 0 && F111 < 0 && H3 > 0 && H11 < 0; }
};

/// Evaluate the normal-form coefficients at a folded singularity.
/// `pbar` must carry h = h_fsn and `fsn` the matching coexistence point.
/// Throws DomainError when the point is not a folded singularity (fold or
/// oscillation condition violated).
inline NormalFormCoeffs compute_coeffs(const ModelParams& pbar, const Equilibrium& fsn) {
    const State& s = fsn.state;
    const PartialTable t = partials(s, pbar, 3);
    const FTable f = FTable::assemble(s, t);

    if (std::abs(t.phi_x) > 1e-6)
        throw DomainError("compute_coeffs: point is not on the fold (phi_x != 0)");
    const double w2 = -(f.f1_y * f.f2_x + f.f1_z * f.f3_x);
    if (w2 <= 0)
        throw DomainError("compute_coeffs: no oscillation (omega^2 <= 0)");
    if (std::abs(f.f1_xx) < 1e-12)
        throw DomainError("compute_coeffs: degenerate fold (f1_xx = 0)");

    NormalFormCoeffs c;
    c.zeta = pbar.zeta;
    c.h_fsn = pbar.h;
    c.fsn_point = s;
    c.omega = std::sqrt(w2);
    c.delta = std::sqrt(pbar.zeta) / c.omega;

    const double x = s.x, y = s.y, z = s.z;

    c.F13 = x * t.phi_z * (z * t.psi_z - y * t.chi_y) +
            (x / t.phi_y) * (y * t.phi_y * t.phi_y * t.chi_z -
                             z * t.phi_z * t.phi_z * t.psi_y) +
            (w2 / (t.phi_xx * t.phi_y)) * (t.phi_xz * t.phi_y - t.phi_xy * t.phi_z);

    c.F111 = (w2 / (x * x * t.phi_xx * t.phi_xx)) * (3.0 * t.phi_xx + x * t.phi_xxx) +
             (x / w2) * (y * t.chi_x * (y * t.phi_y * t.chi_y + z * t.phi_z * t.psi_y) +
                         z * t.psi_x * (y * t.phi_y * t.chi_z + z * t.phi_z * t.psi_z)) +
             (1.0 / (x * t.phi_xx)) *
                 (y * t.chi_x * (t.phi_y + x * t.phi_xy) +
                  z * t.psi_x * (t.phi_z + x * t.phi_xz) +
                  x * (y * t.phi_y * t.chi_xx + z * t.phi_z * t.psi_xx));

    c.H3 = (x * y * z / w2) *
           (t.psi_x * (t.phi_y * t.chi_z - t.phi_z * t.chi_y) -
            t.chi_x * (t.phi_y * t.psi_z - t.phi_z * t.psi_y));

    // Slow-mode forcing: project the quadratic part of the slow combination's
    // derivative onto the slow direction; mu is the fast-component residue
    // cancelled by the X-proportional correction, whose own derivative feeds
    // back an X^2 term.
    const double g2 = f.f2_y * f.f2_x + f.f2_z * f.f3_x;
    const double g3 = f.f3_y * f.f2_x + f.f3_z * f.f3_x;
    const double mu = (f.f2_x * g3 - f.f3_x * g2) / w2;
    c.H11 = (f.f1_y / w2) *
            ((f.f3_x * f.f2_xx - f.f2_x * f.f3_xx) / f.f1_xx - mu);

    // alpha(h): fold-drift rate of the fast pair.  The slope comes from how
    // the fold-point linearization moves with h (through the equilibrium
    // shift J^{-1} f_h); the intercept correction is the fixed quadratic
    // drift at h = h_fsn.
    Eigen::Vector3d fh(f.f1_h, f.f2_h, f.f3_h);
    Eigen::Vector3d xi = f.jacobian().partialPivLu().solve(fh);
    const double bracket =
        -(f.f1_xx * xi[0] + f.f1_xy * xi[1] + f.f1_xz * xi[2]) + f.f1_xh;
    const double corr = (f.f1_y * g2 + f.f1_z * g3) / w2;
    c.alpha_slope = bracket / pbar.zeta;
    c.alpha_intercept = -c.alpha_slope * pbar.h - corr;
    return c;
}

/// Parameter value where the fast pair crosses the imaginary axis: the root
/// of alpha(h).
inline double hopf_location(const NormalFormCoeffs& c) {
    if (c.alpha_slope == 0.0)
        throw DomainError("hopf_location: alpha does not depend on h");
    return -c.alpha_intercept / c.alpha_slope;
}

struct LyapunovResult {
    double l1 = 0;       ///< first Lyapunov quantity (delta/4) * bracket
    double bracket = 0;  ///< F111/2 - F13 H11 / H3
    bool subcritical = false;
};

/// First Lyapunov quantity of the singular Hopf bifurcation; positive means
/// the emerging cycle is repelling (subcritical).
inline LyapunovResult lyapunov_l1(const NormalFormCoeffs& c) {
    LyapunovResult r;
    if (c.H3 == 0.0)
        throw DomainError("lyapunov_l1: H3 = 0");
    r.bracket = c.F111 / 2.0 - c.F13 * c.H11 / c.H3;
    r.l1 = (c.delta / 4.0) * r.bracket;
    r.subcritical = r.l1 > 0.0;
    return r;
}

/// Eigenvalues of the normal-form linearization at the origin on the tau
/// clock: the slow mode delta*H3 and the quasi-elastic pair
/// (alpha delta +/- sqrt(alpha^2 delta^2 - 4)) / 2.  Returned slow-first,
/// then +Im, then -Im.
inline std::array<std::complex<double>, 3>
eigenvalues_qe(const NormalFormCoeffs& c, double alpha) {
    std::array<std::complex<double>, 3> ev;
    ev[0] = c.delta * c.H3;
    const double ad = alpha * c.delta;
    const double disc = ad * ad - 4.0;
    if (disc < 0) {
        const double im = std::sqrt(-disc) / 2.0;
        ev[1] = {ad / 2.0, im};
        ev[2] = {ad / 2.0, -im};
    } else {
        const double rt = std::sqrt(disc);
        ev[1] = {(ad + rt) / 2.0, 0.0};
        ev[2] = {(ad - rt) / 2.0, 0.0};
    }
    return ev;
}

/// Rescaled-amplitude value at which the pair regains neutrality when the
/// cycle envelope is treated quasi-statically: alpha + F13 * lambda = 0.
inline double lambda_hopf(const NormalFormCoeffs& c, double alpha) {
    if (c.F13 == 0.0)
        throw DomainError("lambda_hopf: F13 = 0");
    return -alpha / c.F13;
}

/// Fast-pair eigenvalues with the u-w coupling folded in at envelope value
/// lambda: (delta(alpha + F13 lambda) +/- sqrt(disc)) / 2.
inline std::pair<std::complex<double>, std::complex<double>>
sigma_eigenvalues(const NormalFormCoeffs& c, double alpha, double lambda) {
    const double base = c.delta * (alpha + c.F13 * lambda);
    const double disc = base * base - 4.0;
    if (disc < 0) {
        const double im = std::sqrt(-disc) / 2.0;
        return {{base / 2.0, im}, {base / 2.0, -im}};
    }
    const double rt = std::sqrt(disc);
    return {{(base + rt) / 2.0, 0.0}, {(base - rt) / 2.0, 0.0}};
}

} // namespace fastslow
