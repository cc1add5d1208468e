#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fastslow/integrate.hpp"
#include "fastslow/transform.hpp"

using namespace fastslow;

namespace {

struct Setup {
    ModelParams pbar;
    Equilibrium fsn;
    NormalFormCoeffs coeffs;
};

const Setup& setup() {
    static const Setup s = [] {
        ModelParams p;
        auto [hbar, fsn] = find_fsn2(p);
        p.h = hbar;
        return Setup{p, fsn, compute_coeffs(p, fsn)};
    }();
    return s;
}

ModelParams params_h(double h) {
    ModelParams p;
    p.h = h;
    return p;
}

} // namespace

TEST_CASE("the coexistence equilibrium maps to the origin") {
    const auto& s = setup();
    for (double h : {0.2649, 0.25, s.coeffs.h_fsn}) {
        const ModelParams run = params_h(h);
        NormalFormTransform T(run, s.fsn, s.coeffs);
        bool extrapolated = true;
        const NFState q = T.apply(T.center(), &extrapolated);
        CHECK(std::abs(q.u) < 1e-12);
        CHECK(std::abs(q.v) < 1e-12);
        CHECK(std::abs(q.w) < 1e-12);
        CHECK_FALSE(extrapolated);
    }
}

TEST_CASE("v is linear in the slow displacements and independent of x") {
    const auto& s = setup();
    const ModelParams run = params_h(0.2649);
    NormalFormTransform T(run, s.fsn, s.coeffs);
    const State c = T.center();

    const State a{c.x, c.y + 1e-3, c.z + 7e-4};
    const State b{c.x, c.y + 2e-3, c.z + 14e-4};
    const NFState qa = T(a);
    const NFState qb = T(b);
    REQUIRE(std::abs(qa.v) > 1e-6);
    CHECK(qb.v / qa.v == Catch::Approx(2.0).epsilon(1e-12));

    const State ax{c.x + 0.02, a.y, a.z};
    CHECK(T(ax).v == Catch::Approx(qa.v).epsilon(1e-14));
}

TEST_CASE("published initial data start above the w=0 plane") {
    const auto& s = setup();
    const ModelParams run = params_h(0.2649);
    NormalFormTransform T(run, s.fsn, s.coeffs);

    bool extrapolated = true;
    const NFState qa = T.apply({0.2785, 0.1181, 0.4164}, &extrapolated);
    CHECK(qa.w > 0.0);
    CHECK_FALSE(extrapolated);

    const NFState qb = T.apply({0.278, 0.1181, 0.4165}, &extrapolated);
    CHECK(qb.w > 0.0);
    CHECK_FALSE(extrapolated);
}

TEST_CASE("pointwise transform commutes with the normal-form flow to second order") {
    const auto& s = setup();
    const ModelParams run = params_h(0.2649);
    const double de = s.coeffs.delta;
    const double alpha = s.coeffs.alpha(run.h);
    const State ic{0.2785, 0.1181, 0.4164};

    IntegratorConfig cm;
    cm.t_final = 2.0 * M_PI * de; // one oscillation period in slow time
    cm.rel_tol = 1e-10;
    cm.abs_tol = 1e-12;
    const Trajectory xyz = integrate_model(ic, run, cm);
    const Trajectory uvw = transform_trajectory(xyz, s.fsn, s.coeffs, run, 0.005);

    const NFState q0 = to_normal_form(ic, s.fsn, s.coeffs, run);
    IntegratorConfig cn;
    cn.t_final = uvw.t_end();
    cn.rel_tol = 1e-10;
    cn.abs_tol = 1e-12;
    const Trajectory nf = integrate_nf(q0, s.coeffs, alpha, cn);

    double sup_u = 0, sup_v = 0, sup_w = 0;
    for (double tau = 0; tau <= uvw.t_end(); tau += 0.01) {
        const Eigen::Vector3d a = uvw.eval(tau);
        const Eigen::Vector3d b = nf.eval(tau);
        sup_u = std::max(sup_u, std::abs(a[0] - b[0]));
        sup_v = std::max(sup_v, std::abs(a[1] - b[1]));
        sup_w = std::max(sup_w, std::abs(a[2] - b[2]));
    }
    const double bound = de * de;
    CHECK(sup_u < bound);
    CHECK(sup_v < bound);
    CHECK(sup_w < bound);
    // the comparison is nontrivial: the flows do differ at higher order
    CHECK(sup_u > 1e-4);
}

TEST_CASE("points outside the validity box are flagged as extrapolated") {
    const auto& s = setup();
    const ModelParams run = params_h(0.2649);
    NormalFormTransform T(run, s.fsn, s.coeffs);
    const State c = T.center();

    bool extrapolated = false;
    (void)T.apply({c.x, c.y + 0.05, c.z}, &extrapolated); // Y = 5 leaves the box
    CHECK(extrapolated);
    (void)T.apply({c.x + 0.5, c.y, c.z}, &extrapolated);
    CHECK(extrapolated);
    (void)T.apply({c.x + 1e-3, c.y + 1e-4, c.z - 1e-4}, &extrapolated);
    CHECK_FALSE(extrapolated);

    // the free function agrees with the class
    const State p{0.2785, 0.1181, 0.4164};
    const NFState q1 = to_normal_form(p, s.fsn, s.coeffs, run);
    const NFState q2 = T(p);
    CHECK(q1.u == q2.u);
    CHECK(q1.v == q2.v);
    CHECK(q1.w == q2.w);
}

TEST_CASE("leading-order mode keeps v and drops the delta corrections") {
    const auto& s = setup();
    const ModelParams run = params_h(0.2649);
    NormalFormTransform full(run, s.fsn, s.coeffs, false);
    NormalFormTransform lead(run, s.fsn, s.coeffs, true);
    const State c = full.center();

    // pure x displacement: leading u is linear and leading w vanishes
    const State dx1{c.x + 0.01, c.y, c.z};
    const State dx2{c.x + 0.02, c.y, c.z};
    CHECK(lead(dx2).u / lead(dx1).u == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(lead(dx1).w == 0.0);
    CHECK(lead(dx1).v == 0.0);
    // the full transform keeps an O(delta) x contribution in w
    CHECK(std::abs(full(dx1).w) > 1e-6);
    CHECK(std::abs(full(dx1).w) < s.coeffs.delta);

    const State p{0.2785, 0.1181, 0.4164};
    CHECK(lead(p).v == full(p).v);
    CHECK(std::abs(lead(p).u - full(p).u) < s.coeffs.delta);
    CHECK(lead(p).u != full(p).u);
}

TEST_CASE("trajectory transform rescales time and matches the pointwise map") {
    const auto& s = setup();
    const ModelParams run = params_h(0.2649);
    const double de = s.coeffs.delta;

    IntegratorConfig cfg;
    cfg.t_final = 2.0;
    const Trajectory xyz = integrate_model({0.2785, 0.1181, 0.4164}, run, cfg);
    const Trajectory uvw = transform_trajectory(xyz, s.fsn, s.coeffs, run, 0.02);

    CHECK(uvw.frame() == Trajectory::Frame::normal_form_uvw);
    CHECK(uvw.t_end() == Catch::Approx(cfg.t_final / de).margin(0.02));

    NormalFormTransform T(run, s.fsn, s.coeffs);
    for (double tau : {0.0, 0.3141, 1.77, 4.2, 7.9}) {
        const Eigen::Vector3d a = uvw.eval(tau);
        const Eigen::Vector3d g = xyz.eval(tau * de);
        const NFState q = T(State{g[0], g[1], g[2]});
        CHECK(a[0] == Catch::Approx(q.u).margin(1e-6));
        CHECK(a[1] == Catch::Approx(q.v).margin(1e-6));
        CHECK(a[2] == Catch::Approx(q.w).margin(1e-6));
    }

    CHECK_THROWS_AS(transform_trajectory(uvw, s.fsn, s.coeffs, run),
                    KindMismatchError);
    CHECK_THROWS_AS(transform_trajectory(xyz, s.fsn, s.coeffs, run, -0.1),
                    DomainError);
}
