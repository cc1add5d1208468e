#pragma once

#include <Eigen/Dense>

#include "fastslow/model.hpp"

namespace fastslow {

/// Derivative table of the unscaled field f = (x phi, y chi, z psi),
/// assembled by the product rule from a PartialTable.  "Unscaled" means no
/// 1/zeta on the first component; the slow-clock Jacobian divides row 1.
struct FTable {
    double f1 = 0, f2 = 0, f3 = 0;

    double f1_x = 0, f1_y = 0, f1_z = 0;
    double f2_x = 0, f2_y = 0, f2_z = 0;
    double f3_x = 0, f3_y = 0, f3_z = 0;

    double f1_xx = 0, f1_xy = 0, f1_xz = 0;
    double f2_xx = 0, f3_xx = 0;
    double f1_xxx = 0;

    // derivatives in the bifurcation parameter h
    double f1_h = 0, f2_h = 0, f3_h = 0, f1_xh = 0;

    static FTable assemble(const State& s, const PartialTable& t) {
        FTable f;
        f.f1 = s.x * t.phi;
        f.f2 = s.y * t.chi;
        f.f3 = s.z * t.psi;

        f.f1_x = t.phi + s.x * t.phi_x;
        f.f1_y = s.x * t.phi_y;
        f.f1_z = s.x * t.phi_z;
        f.f2_x = s.y * t.chi_x;
        f.f2_y = t.chi + s.y * t.chi_y;
        f.f2_z = s.y * t.chi_z;
        f.f3_x = s.z * t.psi_x;
        f.f3_y = s.z * t.psi_y;
        f.f3_z = t.psi + s.z * t.psi_z;

        f.f1_xx = 2.0 * t.phi_x + s.x * t.phi_xx;
        f.f1_xy = t.phi_y + s.x * t.phi_xy;
        f.f1_xz = t.phi_z + s.x * t.phi_xz;
        f.f2_xx = s.y * t.chi_xx;
        f.f3_xx = s.z * t.psi_xx;
        f.f1_xxx = 3.0 * t.phi_xx + s.x * t.phi_xxx;

        f.f1_h = s.x * t.phi_h;
        f.f2_h = s.y * t.chi_h;
        f.f3_h = s.z * t.psi_h;
        f.f1_xh = t.phi_h + s.x * t.phi_xh;
        return f;
    }

    /// Jacobian of the unscaled field (no 1/zeta).
    Eigen::Matrix3d jacobian() const {
        Eigen::Matrix3d J;
        J << f1_x, f1_y, f1_z,
             f2_x, f2_y, f2_z,
             f3_x, f3_y, f3_z;
        return J;
    }

    /// Jacobian of the slow-clock field (first row divided by zeta);
    /// stability of equilibria is read from this matrix.
    Eigen::Matrix3d jacobian_slow(double zeta) const {
        Eigen::Matrix3d J = jacobian();
        J.row(0) /= zeta;
        return J;
    }
};

template <SlowFastModel M>
FTable ftable(const State& s, const M& m, int order = 3) {
    return FTable::assemble(s, m.partials(s, order));
}

inline FTable ftable(const State& s, const ModelParams& p, int order = 3) {
    return FTable::assemble(s, partials(s, p, order));
}

} // namespace fastslow
