#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fastslow/equilibria.hpp"
#include "fastslow/errors.hpp"
#include "fastslow/ftable.hpp"
#include "fastslow/geometry.hpp"
#include "fastslow/integrate.hpp"
#include "fastslow/model.hpp"
#include "fastslow/normal_form.hpp"

namespace fastslow {

/// Maps (x,y,z) to the normal-form variables (u,v,w).
///
/// The rescaled displacements are X=(x-x0)/sqrt(zeta), Y=(y-y0)/zeta,
/// Z=(z-z0)/zeta about the coexistence equilibrium E*(h) of the run's
/// parameters; the derivative tables are frozen at the fold point.  The
/// delta-order corrections (A1, A2, B1, B2, C_uv) are included unless
/// leading-order-only diagnostic mode is requested.
///
/// Reconciliations applied to the source expressions (all verified against
/// the normal-form flow): the Z term of w is divided by omega^2, the X term
/// of w's bracket is delta*A1*X/omega (matching the brackets inside B1/B2),
/// g3 = f3y*f2x + f3z*f3x throughout, the constant-looking terms of B1/B2
/// carry X^2 (otherwise E* would not map to the origin), and C_uv's last
/// term uses f3xx.
class NormalFormTransform {
  public:
    NormalFormTransform(const ModelParams& params, const Equilibrium& fsn,
                        const NormalFormCoeffs& coeffs,
                        bool leading_order_only = false)
        : delta_(coeffs.delta), om_(coeffs.omega), zeta_(params.zeta),
          leading_(leading_order_only) {
        center_ = find_equilibrium(params, EquilibriumKind::coexistence, fsn.state)
                      .state;
        ModelParams pbar = params;
        pbar.h = coeffs.h_fsn;
        const FTable f = ftable(fsn.state, pbar);
        const double om2 = om_ * om_;

        f1y_ = f.f1_y;
        f1z_ = f.f1_z;
        f1xx_ = f.f1_xx;
        f2x_ = f.f2_x;
        f3x_ = f.f3_x;
        f2y_ = f.f2_y;
        f2z_ = f.f2_z;
        f3y_ = f.f3_y;
        f3z_ = f.f3_z;
        f2xx_ = f.f2_xx;
        f3xx_ = f.f3_xx;

        const double g2 = f.f2_y * f.f2_x + f.f2_z * f.f3_x;
        const double g3 = f.f3_y * f.f2_x + f.f3_z * f.f3_x;
        g2_ = g2;
        g3_ = g3;
        c2y_ = 1.0 + f.f2_x * f.f1_y / om2; // Y weight of w's bracket
        c2z_ = f.f2_x * f.f1_z / om2;       // Z weight of w's bracket
        c3y_ = f.f3_x * f.f1_y / om2;
        c3z_ = 1.0 + f.f3_x * f.f1_z / om2;
        A1_ = c2y_ * g2 + c2z_ * g3;
        A2_ = c3y_ * g2 + c3z_ * g3;
        Cuv_ = -(f.f1_y * g2 + f.f1_z * g3) / om2 -
               (f.f1_xy * f.f2_x + f.f1_xz * f.f3_x + f.f1_y * f.f2_xx +
                f.f1_z * f.f3_xx) /
                   f.f1_xx;
    }

    const State& center() const { return center_; }

    /// A point is extrapolated when any rescaled displacement leaves the
    /// O(1) validity box (|X|, |Y| or |Z| above 3).
    bool in_validity_box(const State& s) const {
        const double X = (s.x - center_.x) / std::sqrt(zeta_);
        const double Y = (s.y - center_.y) / zeta_;
        const double Z = (s.z - center_.z) / zeta_;
        return std::abs(X) <= 3.0 && std::abs(Y) <= 3.0 && std::abs(Z) <= 3.0;
    }

    NFState apply(const State& s, bool* extrapolated = nullptr) const {
        if (extrapolated)
            *extrapolated = !in_validity_box(s);
        const double om2 = om_ * om_;
        const double X = (s.x - center_.x) / std::sqrt(zeta_);
        const double Y = (s.y - center_.y) / zeta_;
        const double Z = (s.z - center_.z) / zeta_;

        const double S = f1y_ * Y + f1z_ * Z;
        const double v = f1xx_ / om2 * S;

        if (leading_) {
            const double w0 = -(f1xx_ * f1y_ / (om2 * f1z_)) * (c2y_ * Y + c2z_ * Z);
            return NFState{f1xx_ / om_ * X, v, w0};
        }

        const double G2 = c2y_ * Y + c2z_ * Z + delta_ * A1_ * X / om_;
        const double G3 = c3y_ * Y + c3z_ * Z + delta_ * A2_ * X / om_;
        const double w = -(f1xx_ * f1y_ / (om2 * f1z_)) * G2;

        const double B1 = S * g2_ / om2 + f1xx_ * f2xx_ / (2.0 * om2) * X * X +
                          f2y_ * f1xx_ / om2 * G2 + f2z_ * f1xx_ / om2 * G3;
        const double B2 = S * g3_ / om2 + f1xx_ * f3xx_ / (2.0 * om2) * X * X +
                          f3y_ * f1xx_ / om2 * G2 + f3z_ * f1xx_ / om2 * G3;
        const double u_lead = f1xx_ / om_ * X - delta_ * (f1y_ * B1 + f1z_ * B2);
        const double u =
            u_lead + delta_ / 3.0 * Cuv_ * (u_lead * u_lead * (v / 2.0 - 1.0) + v * v);
        return NFState{u, v, w};
    }

    NFState operator()(const State& s) const { return apply(s); }

  private:
    double delta_, om_, zeta_;
    bool leading_;
    State center_{};
    double f1y_ = 0, f1z_ = 0, f1xx_ = 0, f2x_ = 0, f3x_ = 0;
    double f2y_ = 0, f2z_ = 0, f3y_ = 0, f3z_ = 0, f2xx_ = 0, f3xx_ = 0;
    double g2_ = 0, g3_ = 0, c2y_ = 0, c2z_ = 0, c3y_ = 0, c3z_ = 0;
    double A1_ = 0, A2_ = 0, Cuv_ = 0;
};

/// One-shot transform of a single state.
inline NFState to_normal_form(const State& state, const Equilibrium& fsn,
                              const NormalFormCoeffs& coeffs,
                              const ModelParams& params,
                              bool* extrapolated = nullptr) {
    return NormalFormTransform(params, fsn, coeffs).apply(state, extrapolated);
}

/// Pointwise transform of an xyz trajectory onto a uniform normal-form time
/// grid (tau = s / delta), returned as a sample-backed uvw trajectory.
/// Terminal events of the source are carried over with rescaled times.
inline Trajectory transform_trajectory(const Trajectory& xyz, const Equilibrium& fsn,
                                       const NormalFormCoeffs& coeffs,
                                       const ModelParams& params,
                                       double dtau = 0.02) {
    if (xyz.frame() != Trajectory::Frame::model_xyz)
        throw KindMismatchError("transform_trajectory: expected an xyz trajectory");
    if (!(dtau > 0))
        throw DomainError("transform_trajectory: dtau must be positive");
    const NormalFormTransform T(params, fsn, coeffs, false);
    const double de = coeffs.delta;
    const double tau_end = (xyz.t_end() - xyz.t_begin()) / de;
    const std::size_t n = static_cast<std::size_t>(tau_end / dtau);
    if (n < 2)
        throw DomainError("transform_trajectory: source span shorter than dtau");

    std::vector<double> taus(n + 1);
    std::vector<Eigen::Vector3d> qs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double tau = i * dtau;
        const double s = xyz.t_begin() + tau * de;
        const Eigen::Vector3d q = xyz.eval(std::min(s, xyz.t_end()));
        const NFState nf = T(State{q[0], q[1], q[2]});
        taus[i] = tau;
        qs[i] = Eigen::Vector3d(nf.u, nf.v, nf.w);
    }
    Trajectory out = Trajectory::from_samples(Trajectory::Frame::normal_form_uvw,
                                              std::move(taus), std::move(qs));
    out.stop_reason = xyz.stop_reason;
    for (const auto& e : xyz.events) {
        const NFState nf = T(State{e.y[0], e.y[1], e.y[2]});
        out.events.push_back({e.name, (e.t - xyz.t_begin()) / de,
                              Eigen::Vector3d(nf.u, nf.v, nf.w)});
    }
    return out;
}

} // namespace fastslow
