#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "fastslow/errors.hpp"

namespace fastslow {

struct NewtonOptions {
    double tol = 1e-10;   ///< residual max-norm for convergence
    int max_iter = 100;
    int max_halvings = 40;
};

/// Damped Newton for F(x) = 0 with analytic Jacobian.  Takes the full step,
/// halving it while the residual max-norm would increase.  Throws
/// ConvergenceError when out of iterations or when damping stalls.
template <int N, class Fn, class Jac>
Eigen::Matrix<double, N, 1> newton_solve(Fn&& f, Jac&& jac,
                                         Eigen::Matrix<double, N, 1> x,
                                         const NewtonOptions& opts = {}) {
    using Vec = Eigen::Matrix<double, N, 1>;
    Vec r = f(x);
    double rn = r.template lpNorm<Eigen::Infinity>();
    for (int it = 0; it < opts.max_iter; ++it) {
        if (rn <= opts.tol)
            return x;
        Eigen::Matrix<double, N, N> J = jac(x);
        Vec step = J.partialPivLu().solve(-r);
        if (!step.allFinite())
            throw ConvergenceError("newton_solve: singular Jacobian");

        double lambda = 1.0;
        for (int halv = 0;; ++halv) {
            Vec xt = x + lambda * step;
            Vec rt = f(xt);
            double rtn = rt.template lpNorm<Eigen::Infinity>();
            if (std::isfinite(rtn) && (rtn < rn || rtn <= opts.tol)) {
                x = xt;
                r = rt;
                rn = rtn;
                break;
            }
            if (halv >= opts.max_halvings)
                throw ConvergenceError("newton_solve: damping stalled");
            lambda *= 0.5;
        }
    }
    if (rn <= opts.tol)
        return x;
    throw ConvergenceError("newton_solve: iteration limit reached");
}

/// Bisection for a sign change of g on [lo, hi].  Requires g(lo)*g(hi) <= 0.
/// Returns the midpoint once the interval is below xtol (absolute).
inline double bisect(const std::function<double(double)>& g, double lo, double hi,
                     double xtol = 1e-14, int max_iter = 200) {
    double glo = g(lo), ghi = g(hi);
    if (glo == 0.0)
        return lo;
    if (ghi == 0.0)
        return hi;
    if ((glo > 0) == (ghi > 0))
        throw NotFoundError("bisect: no sign change in bracket");
    for (int it = 0; it < max_iter && (hi - lo) > xtol; ++it) {
        double mid = 0.5 * (lo + hi);
        double gm = g(mid);
        if (gm == 0.0)
            return mid;
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace fastslow
