#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "fastslow/equilibria.hpp"
#include "fastslow/errors.hpp"
#include "fastslow/model.hpp"

namespace fastslow {

struct BranchPoint {
    double h = 0;
    Equilibrium eq;
};

/// Equilibrium branch over the competition parameter.  `base` keeps the
/// off-branch parameters so events can be refined by re-solving.
struct Branch {
    EquilibriumKind kind = EquilibriumKind::coexistence;
    ModelParams base;
    double h_lo = 0, h_hi = 0, step = 0;
    std::vector<BranchPoint> points; ///< ascending in h, residual <= 1e-10
    bool terminated_early = false;
    double h_failed = std::numeric_limits<double>::quiet_NaN(); ///< first h that failed
    std::string termination_note;
};

enum class BifurcationKind { hopf, transcritical };

inline std::string to_string(BifurcationKind k) {
    return k == BifurcationKind::hopf ? "hopf" : "transcritical";
}

struct BifurcationEvent {
    BifurcationKind kind = BifurcationKind::hopf;
    double h = 0;                   ///< refined location
    EquilibriumKind branch = EquilibriumKind::coexistence;
    double h_lo = 0, h_hi = 0;      ///< bracket whose criterion changes sign
    std::complex<double> eigenvalue; ///< crossing pair member / near-zero eigenvalue
    std::string note;
};

/// Minimal-assignment distance between two eigenvalue triples: the smallest
/// over pairings of the largest matched gap.  Bounded jumps along a branch
/// certify that the eigenvalue curves were followed continuously.
inline double matched_eigen_distance(const std::array<std::complex<double>, 3>& a,
                                     const std::array<std::complex<double>, 3>& b) {
    static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pm : perms) {
        double mx = 0;
        for (int i = 0; i < 3; ++i)
            mx = std::max(mx, std::abs(a[std::size_t(i)] - b[std::size_t(pm[i])]));
        best = std::min(best, mx);
    }
    return best;
}

namespace detail {

inline Equilibrium branch_solve(const ModelParams& base, EquilibriumKind kind,
                                double h, const State* warm) {
    ModelParams p = base;
    p.h = h;
    std::optional<State> guess;
    if (warm)
        guess = *warm;
    return find_equilibrium(p, kind, guess);
}

/// Real part of the complex eigenvalue pair, NaN when the spectrum is real.
inline double pair_re(const Equilibrium& e) {
    for (const auto& l : e.eigenvalues)
        if (l.imag() != 0.0)
            return l.real();
    return std::numeric_limits<double>::quiet_NaN();
}

/// Largest real part among the purely real eigenvalues (a 3x3 real matrix
/// always has at least one).
inline double real_max_re(const Equilibrium& e) {
    double r = -std::numeric_limits<double>::infinity();
    for (const auto& l : e.eigenvalues)
        if (l.imag() == 0.0)
            r = std::max(r, l.real());
    return r;
}

inline bool sign_change(double a, double b) {
    return std::isfinite(a) && std::isfinite(b) &&
           ((a < 0 && b > 0) || (a > 0 && b < 0));
}

} // namespace detail

/// Natural-parameter continuation of one equilibrium branch from h_lo to
/// h_hi with Newton warm starts.  A failing step is halved down to 1e-6;
/// persistent failure terminates the branch with a report (expected where
/// the branch loses its defining positivity, e.g. the coexistence branch at
/// the transcritical point).  Steps across a stability or eigenvalue-sign
/// change are subdivided so events end up tightly bracketed.
inline Branch continue_branch(EquilibriumKind kind, double h_lo, double h_hi,
                              double step, const ModelParams& base = {}) {
    if (!(h_hi > h_lo))
        throw DomainError("continue_branch: need h_hi > h_lo");
    if (!(step > 0))
        throw DomainError("continue_branch: step must be positive");

    Branch br;
    br.kind = kind;
    br.base = base;
    br.h_lo = h_lo;
    br.h_hi = h_hi;
    br.step = step;

    Equilibrium e = detail::branch_solve(base, kind, h_lo, nullptr);
    br.points.push_back({h_lo, e});

    double ds = step;
    double h = h_lo;
    while (h < h_hi - 1e-12) {
        const double try_h = std::min(h + ds, h_hi);
        try {
            Equilibrium next = detail::branch_solve(base, kind, try_h, &e.state);
            h = try_h;
            e = next;
            br.points.push_back({h, e});
            ds = step;
        } catch (const Error& err) {
            if (ds <= 1e-6 * (1.0 + 1e-9)) {
                br.terminated_early = true;
                br.h_failed = try_h;
                br.termination_note = err.what();
                break;
            }
            ds /= 2.0;
        }
    }

    // subdivide steps that straddle a sign change until they are fine enough
    // for the event refinement to start from a tight bracket
    const double min_gap = step / 16.0;
    for (int pass = 0; pass < 4; ++pass) {
        bool changed = false;
        for (std::size_t i = 0; i + 1 < br.points.size(); ++i) {
            const BranchPoint& a = br.points[i];
            const BranchPoint& b = br.points[i + 1];
            if (b.h - a.h <= min_gap)
                continue;
            const bool interesting =
                a.eq.stability != b.eq.stability ||
                detail::sign_change(detail::pair_re(a.eq), detail::pair_re(b.eq)) ||
                detail::sign_change(detail::real_max_re(a.eq),
                                    detail::real_max_re(b.eq));
            if (!interesting)
                continue;
            const double hm = 0.5 * (a.h + b.h);
            Equilibrium mid = detail::branch_solve(base, kind, hm, &a.eq.state);
            br.points.insert(br.points.begin() + std::ptrdiff_t(i + 1), {hm, mid});
            changed = true;
            ++i; // skip the freshly inserted point this pass
        }
        if (!changed)
            break;
    }
    return br;
}

/// Scan a branch for Hopf points (the complex pair's real part changes sign)
/// and transcritical points (a real eigenvalue changes sign, or the branch
/// itself ends by losing a positive coordinate).  Each event is refined by
/// bisection in h on the defining criterion; an empty list is a valid result.
inline std::vector<BifurcationEvent> detect_events(const Branch& br) {
    std::vector<BifurcationEvent> events;
    if (br.points.size() < 2)
        return events;

    auto solve = [&](double h, const State& warm) {
        return detail::branch_solve(br.base, br.kind, h, &warm);
    };

    auto refine = [&](double lo, double hi, const State& warm0,
                      double (*crit)(const Equilibrium&)) {
        State warm = warm0;
        Equilibrium elo = solve(lo, warm);
        double clo = crit(elo);
        Equilibrium at = elo;
        for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            Equilibrium em = solve(mid, warm);
            warm = em.state;
            const double cm = crit(em);
            if (!std::isfinite(cm))
                break;
            if ((cm < 0) == (clo < 0)) {
                lo = mid;
                clo = cm;
            } else {
                hi = mid;
            }
            at = em;
        }
        return std::pair<double, Equilibrium>{0.5 * (lo + hi), at};
    };

    for (std::size_t i = 0; i + 1 < br.points.size(); ++i) {
        const BranchPoint& a = br.points[i];
        const BranchPoint& b = br.points[i + 1];

        if (detail::sign_change(detail::pair_re(a.eq), detail::pair_re(b.eq))) {
            auto [h, eq] = refine(a.h, b.h, a.eq.state, detail::pair_re);
            BifurcationEvent ev;
            ev.kind = BifurcationKind::hopf;
            ev.h = h;
            ev.branch = br.kind;
            ev.h_lo = a.h;
            ev.h_hi = b.h;
            for (const auto& l : eq.eigenvalues)
                if (l.imag() > 0.0)
                    ev.eigenvalue = l;
            ev.note = "complex pair crosses the imaginary axis";
            events.push_back(ev);
        }

        if (detail::sign_change(detail::real_max_re(a.eq),
                                detail::real_max_re(b.eq))) {
            auto [h, eq] = refine(a.h, b.h, a.eq.state, detail::real_max_re);
            BifurcationEvent ev;
            ev.kind = BifurcationKind::transcritical;
            ev.h = h;
            ev.branch = br.kind;
            ev.h_lo = a.h;
            ev.h_hi = b.h;
            ev.eigenvalue = detail::real_max_re(eq);
            ev.note = "real eigenvalue crosses zero";
            events.push_back(ev);
        }
    }

    // a branch that ended by losing positivity pins the exchange point at
    // the boundary of existence
    if (br.terminated_early && std::isfinite(br.h_failed)) {
        double lo = br.points.back().h;
        double hi = br.h_failed;
        State warm = br.points.back().eq.state;
        Equilibrium last = br.points.back().eq;
        for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            try {
                last = solve(mid, warm);
                warm = last.state;
                lo = mid;
            } catch (const Error&) {
                hi = mid;
            }
        }
        BifurcationEvent ev;
        ev.kind = BifurcationKind::transcritical;
        ev.h = 0.5 * (lo + hi);
        ev.branch = br.kind;
        ev.h_lo = br.points.back().h;
        ev.h_hi = br.h_failed;
        std::complex<double> nearest = last.eigenvalues[0];
        for (const auto& l : last.eigenvalues)
            if (std::abs(l) < std::abs(nearest))
                nearest = l;
        ev.eigenvalue = nearest;
        ev.note = "branch endpoint: a population coordinate reaches zero";
        events.push_back(ev);
    }

    std::sort(events.begin(), events.end(),
              [](const BifurcationEvent& x, const BifurcationEvent& y) {
                  return x.h < y.h;
              });
    return events;
}

} // namespace fastslow
