#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fastslow/errors.hpp"
#include "fastslow/geometry.hpp"
#include "fastslow/model.hpp"
#include "fastslow/normal_form.hpp"

namespace fastslow {

/// Scalar event function g(t, y); a root is located whenever g changes sign
/// across an accepted step in the requested direction.
struct EventSpec {
    std::string name;
    std::function<double(double, const Eigen::Vector3d&)> g;
    int direction = 0;     ///< -1: down-crossing, +1: up-crossing, 0: either
    bool terminal = false; ///< stop the integration at the event time
};

struct EventHit {
    std::string name;
    double t = 0;
    Eigen::Vector3d y = Eigen::Vector3d::Zero();
};

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    double t_final = 500.0;
    bool dense_output = true; ///< false: keep only accepted-step samples
    std::vector<EventSpec> events;
    double initial_step = 0.0; ///< 0 = choose automatically
    std::size_t max_steps = 4'000'000;

    void validate() const {
        if (!(rel_tol > 0) || !(abs_tol > 0))
            throw DomainError("IntegratorConfig: tolerances must be positive");
        if (!(t_final > 0))
            throw DomainError("IntegratorConfig: t_final must be positive");
        if (!(max_step > 0))
            throw DomainError("IntegratorConfig: max_step must be positive");
    }
};

struct StepStats {
    std::size_t n_accepted = 0;
    std::size_t n_rejected = 0;
    std::size_t n_rhs_evals = 0;
};

namespace detail {

/// One accepted step's continuous extension: the standard fifth-order
/// interpolation polynomial in the normalized offset theta
///   y(theta) = r1 + theta (r2 + (1-theta)(r3 + theta (r4 + (1-theta) r5)))
struct StepRecord {
    double t0 = 0, h = 0;
    Eigen::Vector3d r1, r2, r3, r4, r5;

    Eigen::Vector3d eval(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
    }
};

struct TrajectoryAccess;

} // namespace detail

/// A continuous-in-time solution record.  Two backends:
///  - interpolant: produced by the integrator with dense output on; evaluates
///    the stored per-step polynomials anywhere in [t_begin, t_end];
///  - samples: built from discrete points (a coordinate-transformed run, or
///    dense output off); evaluates a local cubic through the nearest points.
class Trajectory {
  public:
    enum class Frame { model_xyz, normal_form_uvw };
    enum class StopReason { reached_t_final, terminal_event };

    StopReason stop_reason = StopReason::reached_t_final;
    std::vector<EventHit> events;
    StepStats stats;

    static Trajectory from_samples(Frame fr, std::vector<double> t,
                                   std::vector<Eigen::Vector3d> y) {
        if (t.size() != y.size() || t.size() < 2)
            throw DomainError("Trajectory::from_samples: need >= 2 samples");
        for (std::size_t i = 1; i < t.size(); ++i)
            if (!(t[i] > t[i - 1]))
                throw DomainError("Trajectory::from_samples: times not increasing");
        for (const auto& v : y)
            if (!v.allFinite())
                throw DomainError("Trajectory::from_samples: non-finite state");
        Trajectory tr;
        tr.frame_ = fr;
        tr.grid_ = std::move(t);
        tr.samples_ = std::move(y);
        return tr;
    }

    Frame frame() const { return frame_; }
    double t_begin() const { return grid_.front(); }
    double t_end() const { return grid_.back(); }

    bool interpolant_backed() const { return !steps_.empty(); }

    /// Accepted-step times (interpolant) or sample times.
    const std::vector<double>& grid() const { return grid_; }

    Eigen::Vector3d eval(double t) const {
        if (grid_.size() < 2)
            throw DomainError("Trajectory: empty");
        if (t < t_begin() - 1e-12 || t > t_end() + 1e-12)
            throw DomainError("Trajectory::eval: time outside the solution span");
        t = std::clamp(t, t_begin(), t_end());
        if (interpolant_backed())
            return steps_[locate(t)].eval(t);
        return sample_eval(t);
    }

    double eval_channel(int ch, double t) const {
        if (ch < 0 || ch > 2)
            throw DomainError("Trajectory::eval_channel: channel out of range");
        return eval(t)[ch];
    }

  private:
    friend struct detail::TrajectoryAccess;

    std::size_t locate(double t) const {
        // index of the step/sample interval containing t
        auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - grid_.begin());
        if (i > 0)
            --i;
        const std::size_t n_int =
            interpolant_backed() ? steps_.size() : samples_.size() - 1;
        return std::min(i, n_int - 1);
    }

    Eigen::Vector3d sample_eval(double t) const {
        const std::size_t n = samples_.size();
        const std::size_t i = locate(t);
        if (n < 4) { // linear fallback
            const double w = (t - grid_[i]) / (grid_[i + 1] - grid_[i]);
            return (1.0 - w) * samples_[i] + w * samples_[i + 1];
        }
        // cubic through the 4 points around the interval [i, i+1]
        std::size_t j0 = (i == 0) ? 0 : i - 1;
        j0 = std::min(j0, n - 4);
        Eigen::Vector3d acc = Eigen::Vector3d::Zero();
        for (std::size_t a = 0; a < 4; ++a) {
            double L = 1.0;
            for (std::size_t b = 0; b < 4; ++b)
                if (b != a)
                    L *= (t - grid_[j0 + b]) / (grid_[j0 + a] - grid_[j0 + b]);
            acc += L * samples_[j0 + a];
        }
        return acc;
    }

    Frame frame_ = Frame::model_xyz;
    std::vector<double> grid_;
    std::vector<detail::StepRecord> steps_; // interpolant backend
    std::vector<Eigen::Vector3d> samples_;  // sample backend
};

namespace detail {

struct TrajectoryAccess {
    static Trajectory::Frame& frame(Trajectory& tr) { return tr.frame_; }
    static std::vector<double>& grid(Trajectory& tr) { return tr.grid_; }
    static std::vector<StepRecord>& steps(Trajectory& tr) { return tr.steps_; }
    static std::vector<Eigen::Vector3d>& samples(Trajectory& tr) {
        return tr.samples_;
    }
};

// Dormand-Prince 5(4) tableau
inline constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;
inline constexpr double A21 = 1.0 / 5;
inline constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
inline constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
inline constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187,
                        A53 = 64448.0 / 6561, A54 = -212.0 / 729;
inline constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33,
                        A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                        A65 = -5103.0 / 18656;
inline constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                        B5 = -2187.0 / 6784, B6 = 11.0 / 84;
// embedded error coefficients (5th minus 4th order)
inline constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                        E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;
// continuous-extension weights for the r5 coefficient
inline constexpr double D1 = -12715105075.0 / 11282082432.0;
inline constexpr double D3 = 87487479700.0 / 32700410799.0;
inline constexpr double D4 = -10690763975.0 / 1880347072.0;
inline constexpr double D5 = 701980252875.0 / 199316789632.0;
inline constexpr double D6 = -1453857185.0 / 822651844.0;
inline constexpr double D7 = 69997945.0 / 29380423.0;

inline double rms3(const Eigen::Vector3d& v) { return v.norm() / std::sqrt(3.0); }

} // namespace detail

/// Adaptive Dormand-Prince 5(4) with a continuous extension and event
/// location on it.  `rhs(t, y)` is the vector field; integration runs forward
/// from t0 to t0 + cfg.t_final unless a terminal event stops it.  Event times
/// are located by bisection on the continuous extension to 1e-8.
template <class RHS>
Trajectory integrate_dense(RHS&& rhs, const Eigen::Vector3d& y0, double t0,
                           const IntegratorConfig& cfg = {},
                           Trajectory::Frame frame = Trajectory::Frame::model_xyz) {
    using Eigen::Vector3d;
    namespace d = detail;
    cfg.validate();
    const double t1 = t0 + cfg.t_final;

    Trajectory tr;
    detail::TrajectoryAccess::frame(tr) = frame;
    auto& grid = detail::TrajectoryAccess::grid(tr);
    auto& steps = detail::TrajectoryAccess::steps(tr);
    auto& samples = detail::TrajectoryAccess::samples(tr);
    std::size_t n_rhs = 0;

    auto safe_rhs = [&rhs, &n_rhs](double t, const Vector3d& y, Vector3d& out) -> bool {
        ++n_rhs;
        try {
            out = rhs(t, y);
        } catch (const DomainError&) {
            return false;
        }
        return out.allFinite();
    };

    double t = t0;
    Vector3d y = y0;
    Vector3d f;
    if (!y.allFinite() || !safe_rhs(t, y, f))
        throw DomainError("integrate_dense: field undefined at the initial point");

    // initial step: match the scale of y and f, then refine with one Euler probe
    double h;
    if (cfg.initial_step > 0) {
        h = cfg.initial_step;
    } else {
        const Vector3d scale =
            (cfg.abs_tol + cfg.rel_tol * y.cwiseAbs().array()).matrix();
        const double d0 = d::rms3((y.array() / scale.array()).matrix());
        const double d1 = d::rms3((f.array() / scale.array()).matrix());
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        Vector3d f1;
        double d2 = 0.0;
        if (safe_rhs(t + h0, y + h0 * f, f1))
            d2 = d::rms3(((f1 - f).array() / scale.array()).matrix()) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = (dm <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                        : std::pow(0.01 / dm, 0.2);
        h = std::min(100.0 * h0, h1);
    }
    h = std::min({h, cfg.max_step, t1 - t0});

    const auto& events = cfg.events;
    std::vector<double> g_prev(events.size());
    for (std::size_t i = 0; i < events.size(); ++i)
        g_prev[i] = events[i].g(t, y);

    grid.push_back(t);
    if (!cfg.dense_output)
        samples.push_back(y);
    bool done = false;

    while (!done) {
        if (tr.stats.n_accepted >= cfg.max_steps)
            throw ConvergenceError("integrate_dense: max step count exceeded");
        h = std::min(h, t1 - t);
        const bool last_step = (t + h >= t1 - 1e-14 * (std::abs(t1) + 1.0));

        Vector3d k1 = f, k2, k3, k4, k5, k6, k7, ynew;
        double err = 0.0;
        for (;;) { // until accepted
            if (h < 1e-14 * (std::abs(t) + 1.0))
                throw ConvergenceError(
                    "integrate_dense: step size underflow at t=" + std::to_string(t));
            bool ok =
                safe_rhs(t + d::C2 * h, y + h * (d::A21 * k1), k2) &&
                safe_rhs(t + d::C3 * h, y + h * (d::A31 * k1 + d::A32 * k2), k3) &&
                safe_rhs(t + d::C4 * h,
                         y + h * (d::A41 * k1 + d::A42 * k2 + d::A43 * k3), k4) &&
                safe_rhs(t + d::C5 * h,
                         y + h * (d::A51 * k1 + d::A52 * k2 + d::A53 * k3 +
                                  d::A54 * k4),
                         k5) &&
                safe_rhs(t + h,
                         y + h * (d::A61 * k1 + d::A62 * k2 + d::A63 * k3 +
                                  d::A64 * k4 + d::A65 * k5),
                         k6);
            if (ok) {
                ynew = y + h * (d::B1 * k1 + d::B3 * k3 + d::B4 * k4 + d::B5 * k5 +
                                d::B6 * k6);
                ok = ynew.allFinite() && safe_rhs(t + h, ynew, k7);
            }
            if (!ok) {
                ++tr.stats.n_rejected;
                h *= 0.25; // field blew up inside the step: hard backoff
                continue;
            }
            const Vector3d evec = h * (d::E1 * k1 + d::E3 * k3 + d::E4 * k4 +
                                       d::E5 * k5 + d::E6 * k6 + d::E7 * k7);
            const Vector3d scale =
                (cfg.abs_tol +
                 cfg.rel_tol * y.cwiseAbs().cwiseMax(ynew.cwiseAbs()).array())
                    .matrix();
            err = d::rms3((evec.array() / scale.array()).matrix());
            if (err <= 1.0)
                break;
            ++tr.stats.n_rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
        ++tr.stats.n_accepted;

        // continuous extension for the accepted step
        detail::StepRecord rec;
        rec.t0 = t;
        rec.h = h;
        rec.r1 = y;
        rec.r2 = ynew - y;
        rec.r3 = h * k1 - rec.r2;
        rec.r4 = rec.r2 - h * k7 - rec.r3;
        rec.r5 = h * (d::D1 * k1 + d::D3 * k3 + d::D4 * k4 + d::D5 * k5 +
                      d::D6 * k6 + d::D7 * k7);

        double t_stop = t + h;
        bool stop_event = false;

        for (std::size_t i = 0; i < events.size(); ++i) {
            const double g0 = g_prev[i];
            const double g1 = events[i].g(t + h, ynew);
            g_prev[i] = g1;
            const bool down = g0 > 0 && g1 <= 0;
            const bool up = g0 < 0 && g1 >= 0;
            const bool hit = (events[i].direction < 0 && down) ||
                             (events[i].direction > 0 && up) ||
                             (events[i].direction == 0 && (down || up));
            if (!hit)
                continue;
            // bisect the continuous extension for the crossing time
            double a = t, b = t + h, ga = g0;
            while (b - a > 1e-8) {
                const double mid = 0.5 * (a + b);
                const double gm = events[i].g(mid, rec.eval(mid));
                if ((gm > 0) == (ga > 0)) {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            const double te = 0.5 * (a + b);
            if (events[i].terminal && te < t_stop) {
                t_stop = te;
                stop_event = true;
            }
            tr.events.push_back({events[i].name, te, rec.eval(te)});
        }

        if (stop_event) {
            // truncate at the event time; the step polynomial stays valid on
            // [t, t_stop] with its original parametrization
            std::erase_if(tr.events, [&](const EventHit& e) { return e.t > t_stop; });
            grid.push_back(t_stop);
            if (cfg.dense_output)
                steps.push_back(rec);
            else
                samples.push_back(rec.eval(t_stop));
            tr.stop_reason = Trajectory::StopReason::terminal_event;
            done = true;
            break;
        }

        grid.push_back(t + h);
        if (cfg.dense_output)
            steps.push_back(rec);
        else
            samples.push_back(ynew);
        t += h;
        y = ynew;
        f = k7; // first-same-as-last

        if (last_step) {
            tr.stop_reason = Trajectory::StopReason::reached_t_final;
            done = true;
        } else {
            h *= std::min(10.0,
                          std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
            h = std::min(h, cfg.max_step);
        }
    }
    tr.stats.n_rhs_evals = n_rhs;
    return tr;
}

/// Integrate the model on the slow clock from an xyz initial condition.
/// Termination guards: the t_final cap and a terminal "y-extinction" event
/// when predator 1 falls to 1e-6, below which the dynamics is effectively
/// the boundary subsystem.
inline Trajectory integrate_model(const State& ic, const ModelParams& p,
                                  const IntegratorConfig& cfg = {}) {
    if (!ic.finite() || ic.x < 0 || ic.y < 0 || ic.z < 0)
        throw DomainError("integrate_model: initial state must lie in the closed "
                          "positive octant");
    PredatorPreyModel m(p);
    auto rhs = [m](double, const Eigen::Vector3d& q) {
        auto r = eval_rhs(State{q[0], q[1], q[2]}, m, Timescale::slow);
        return Eigen::Vector3d(r[0], r[1], r[2]);
    };
    IntegratorConfig c = cfg;
    c.events.push_back({"y-extinction",
                        [](double, const Eigen::Vector3d& q) { return q[1] - 1e-6; },
                        -1, true});
    return integrate_dense(rhs, Eigen::Vector3d(ic.x, ic.y, ic.z), 0.0, c,
                           Trajectory::Frame::model_xyz);
}

/// Integrate the truncated normal form on the oscillation clock tau.
/// Event hooks: "w-zero" (descending w=0 crossing), "funnel-entry" (crossing
/// into w >= -(H11/(2 H3))(u^2+v^2)), and the terminal guard "w-divergence"
/// at w = -5, the proxy for escape to w -> -infinity.
inline Trajectory integrate_nf(const NFState& ic, const NormalFormCoeffs& c,
                               double alpha, const IntegratorConfig& cfg = {}) {
    const double de = c.delta, F13 = c.F13, F111 = c.F111, H3 = c.H3, H11 = c.H11;
    auto rhs = [=](double, const Eigen::Vector3d& q) {
        const double u = q[0], v = q[1], w = q[2];
        return Eigen::Vector3d(
            v + u * u / 2.0 + de * (alpha * u + F13 * u * w + F111 * u * u * u / 6.0),
            -u, de * (H3 * w + H11 * u * u / 2.0));
    };
    IntegratorConfig cf = cfg;
    cf.events.push_back(
        {"w-zero", [](double, const Eigen::Vector3d& q) { return q[2]; }, -1, false});
    const double funnel_k = -H11 / (2.0 * H3);
    cf.events.push_back({"funnel-entry",
                         [funnel_k](double, const Eigen::Vector3d& q) {
                             return q[2] - funnel_k * (q[0] * q[0] + q[1] * q[1]);
                         },
                         +1, false});
    cf.events.push_back({"w-divergence",
                         [](double, const Eigen::Vector3d& q) { return q[2] + 5.0; },
                         -1, true});
    return integrate_dense(rhs, Eigen::Vector3d(ic.u, ic.v, ic.w), 0.0, cf,
                           Trajectory::Frame::normal_form_uvw);
}

} // namespace fastslow
