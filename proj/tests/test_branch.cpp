#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fastslow/branch.hpp"
#include "fastslow/normal_form.hpp"

using namespace fastslow;

namespace {

struct Sweep {
    Branch coex; // h in [0.2, 0.36], ends at the exchange point
    Branch xz;   // h in [0.05, 0.45]
    Branch xy;   // h-independent saddle
    std::vector<BifurcationEvent> coex_events, xz_events, xy_events;
    double hopf_nf; // alpha-root of the reduced form, for cross-validation
};

const Sweep& sweep() {
    static const Sweep s = [] {
        Sweep w;
        w.coex = continue_branch(EquilibriumKind::coexistence, 0.2, 0.36, 1e-3);
        w.xz = continue_branch(EquilibriumKind::boundary_xz, 0.05, 0.45, 1e-3);
        w.xy = continue_branch(EquilibriumKind::boundary_xy, 0.2, 0.36, 4e-3);
        w.coex_events = detect_events(w.coex);
        w.xz_events = detect_events(w.xz);
        w.xy_events = detect_events(w.xy);
        ModelParams p;
        auto [hbar, fsn] = find_fsn2(p);
        p.h = hbar;
        w.hopf_nf = hopf_location(compute_coeffs(p, fsn));
        return w;
    }();
    return s;
}

const BifurcationEvent* find_event(const std::vector<BifurcationEvent>& evs,
                                   BifurcationKind kind) {
    for (const auto& e : evs)
        if (e.kind == kind)
            return &e;
    return nullptr;
}

} // namespace

TEST_CASE("continuation input validation") {
    CHECK_THROWS_AS(continue_branch(EquilibriumKind::coexistence, 0.3, 0.2, 1e-3),
                    DomainError);
    CHECK_THROWS_AS(continue_branch(EquilibriumKind::coexistence, 0.2, 0.3, 0.0),
                    DomainError);
}

TEST_CASE("coexistence branch: convergence, range, endpoint") {
    const Branch& br = sweep().coex;
    REQUIRE(br.points.size() > 100);
    for (const auto& bp : br.points) {
        CHECK(bp.eq.residual <= 1e-10);
        CHECK(bp.h >= 0.2);
        CHECK(bp.h <= 0.36);
        CHECK(bp.eq.state.y > 0.0);
    }
    for (std::size_t i = 1; i < br.points.size(); ++i)
        CHECK(br.points[i].h > br.points[i - 1].h);

    // the branch cannot be continued past the exchange with the xz branch
    CHECK(br.terminated_early);
    CHECK(std::abs(br.points.back().h - 0.3577) < 5e-4);
    CHECK(br.points.back().eq.state.y < 1e-4);
    CHECK(br.h_failed > br.points.back().h);
}

TEST_CASE("coexistence branch events: subcritical Hopf and exchange point") {
    const auto& evs = sweep().coex_events;
    REQUIRE(evs.size() == 2);

    const BifurcationEvent* hopf = find_event(evs, BifurcationKind::hopf);
    REQUIRE(hopf != nullptr);
    CHECK(std::abs(hopf->h - 0.2646) < 5e-4);
    CHECK(std::abs(hopf->h - sweep().hopf_nf) < 2e-3);
    CHECK(std::abs(hopf->eigenvalue.real()) < 1e-8);
    CHECK(hopf->eigenvalue.imag() > 0.0);
    CHECK(hopf->h_lo <= hopf->h);
    CHECK(hopf->h <= hopf->h_hi);

    const BifurcationEvent* tc = find_event(evs, BifurcationKind::transcritical);
    REQUIRE(tc != nullptr);
    CHECK(std::abs(tc->h - 0.3577) < 5e-4);
    CHECK(std::abs(tc->eigenvalue) < 1e-6);
}

TEST_CASE("boundary-xz branch: stability window between the events") {
    const Branch& br = sweep().xz;
    CHECK_FALSE(br.terminated_early);
    CHECK(br.points.front().h == 0.05);
    CHECK(std::abs(br.points.back().h - 0.45) < 1e-12);
    for (const auto& bp : br.points) {
        CHECK(bp.eq.residual <= 1e-10);
        CHECK(bp.eq.state.y == 0.0);
    }

    const auto& evs = sweep().xz_events;
    REQUIRE(evs.size() == 2);
    const BifurcationEvent* hopf = find_event(evs, BifurcationKind::hopf);
    REQUIRE(hopf != nullptr);
    CHECK(std::abs(hopf->h - 0.0613) < 5e-4);
    CHECK(std::abs(hopf->eigenvalue.real()) < 1e-8);

    const BifurcationEvent* tc = find_event(evs, BifurcationKind::transcritical);
    REQUIRE(tc != nullptr);
    CHECK(std::abs(tc->h - 0.3577) < 5e-4);
    CHECK(std::abs(tc->eigenvalue.real()) < 1e-8);
    CHECK(tc->eigenvalue.imag() == 0.0);

    // locally stable strictly between the Hopf and the exchange point
    for (const auto& bp : br.points) {
        if (bp.h > hopf->h + 2e-3 && bp.h < tc->h - 2e-3)
            CHECK(bp.eq.stability == StabilityTag::stable_node_focus);
        if (bp.h < hopf->h - 2e-3 || bp.h > tc->h + 2e-3)
            CHECK(bp.eq.stability != StabilityTag::stable_node_focus);
    }

    // both branches place the exchange at the same parameter value
    const BifurcationEvent* tc2 =
        find_event(sweep().coex_events, BifurcationKind::transcritical);
    REQUIRE(tc2 != nullptr);
    CHECK(std::abs(tc->h - tc2->h) < 1e-5);
}

TEST_CASE("boundary-xy branch: an h-independent saddle") {
    const Branch& br = sweep().xy;
    REQUIRE(br.points.size() > 10);
    const State& s0 = br.points.front().eq.state;
    for (const auto& bp : br.points) {
        CHECK(bp.eq.stability != StabilityTag::stable_node_focus);
        CHECK(bp.eq.eigenvalues[0].real() > 0.0);
        CHECK(std::abs(bp.eq.state.x - s0.x) < 1e-12);
        CHECK(std::abs(bp.eq.state.y - s0.y) < 1e-12);
        CHECK(bp.eq.state.z == 0.0);
    }
    CHECK(sweep().xy_events.empty());
}

TEST_CASE("eigenvalues vary continuously along the branches") {
    for (const Branch* br : {&sweep().coex, &sweep().xz}) {
        std::vector<double> slopes;
        for (std::size_t i = 0; i + 1 < br->points.size(); ++i) {
            const auto& a = br->points[i];
            const auto& b = br->points[i + 1];
            slopes.push_back(matched_eigen_distance(a.eq.eigenvalues,
                                                    b.eq.eigenvalues) /
                             (b.h - a.h));
        }
        REQUIRE(slopes.size() > 2);
        // no isolated jumps: each secant slope is explained by its neighbors
        // (slopes may grow smoothly, e.g. where two eigenvalues collide)
        for (std::size_t i = 1; i + 1 < slopes.size(); ++i)
            CHECK(slopes[i] <= 10.0 * std::max(slopes[i - 1], slopes[i + 1]));
    }
}

TEST_CASE("steps straddling an event are subdivided") {
    const Branch& br = sweep().coex;
    const BifurcationEvent* hopf =
        find_event(sweep().coex_events, BifurcationKind::hopf);
    REQUIRE(hopf != nullptr);
    for (std::size_t i = 0; i + 1 < br.points.size(); ++i) {
        const double a = br.points[i].h, b = br.points[i + 1].h;
        if (a <= hopf->h && hopf->h <= b)
            CHECK(b - a <= br.step / 16.0 + 1e-12);
    }
}
