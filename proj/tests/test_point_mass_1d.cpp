#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "cuspflow/errors.hpp"
#include "cuspflow/point_mass_1d.hpp"
#include "cuspflow/richardson.hpp"
#include "doctest.h"

using namespace cuspflow;

namespace {

Cubic1DProblem canonical() { return Cubic1DProblem::make(1, 0, 0, 0, 1, 6, 0); }
Cubic1DProblem skew() { return Cubic1DProblem::make(1, 1.5, 0, 0, 1, 6, 0); }
Cubic1DProblem quartic() { return Cubic1DProblem::make(1, 0, 0, 0, 1, 6, 12); }
Cubic1DProblem mixed() { return Cubic1DProblem::make(1, 1.5, 0, 0, 1, 6, 12); }
Cubic1DProblem offscale() { return Cubic1DProblem::make(2, -1, 0.3, 0.5, 2, 5, -3); }

struct Poly {
    std::vector<double> c;
    double eval(double x) const {
        double r = 0.0;
        for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) r = r * x + c[i];
        return r;
    }
};

Poly mul(const Poly& a, const Poly& b) {
    Poly r;
    r.c.assign(a.c.size() + b.c.size() - 1, 0.0);
    for (size_t i = 0; i < a.c.size(); ++i)
        for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
    return r;
}

Poly antider(const Poly& a) {
    Poly r;
    r.c.assign(a.c.size() + 1, 0.0);
    for (size_t i = 0; i < a.c.size(); ++i) r.c[i + 1] = a.c[i] / static_cast<double>(i + 1);
    return r;
}

Poly rho_poly(const Cubic1DProblem& pb) { return Poly{{pb.rho0, pb.rho1, pb.rho2 / 2.0}}; }

Poly w_poly(const Cubic1DProblem& pb) {
    return Poly{{pb.omega0, -pb.omega1, 0.0, pb.omega3 / 6.0, pb.omega4 / 24.0}};
}

double fitted_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    size_t n = xs.size();
    for (size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

TEST_CASE("construction rejects data outside the blow-up hypotheses") {
    CHECK_THROWS_AS(Cubic1DProblem::make(0, 0, 0, 0, 1, 6, 0), hypothesis_violation);
    CHECK_THROWS_AS(Cubic1DProblem::make(1, 0, 0, 0, -1, 6, 0), hypothesis_violation);
    CHECK_THROWS_AS(Cubic1DProblem::make(1, 0, 0, 0, 1, 0, 0), hypothesis_violation);
    CHECK(canonical().t0 == 1.0);
    CHECK(offscale().t0 == 0.5);
}

TEST_CASE("companion roots solve the shared-image equation") {
    auto pb = canonical();
    auto rt = companion_roots(pb, 1.21, 0.0);
    CHECK(rt.x_plus == doctest::Approx(std::sqrt(0.21 / 1.21)).epsilon(1e-13));
    CHECK(rt.x_minus == doctest::Approx(-rt.x_plus).epsilon(1e-13));
    CHECK(rt.residual <= 1e-14);

    for (double x : {0.0, 0.1, 0.2, -0.15}) {
        for (double t : {1.21, 1.4, 1.5}) {
            if (pb.tau(x) >= t) continue;
            auto r = companion_roots(pb, t, x);
            CHECK(r.x_minus < x);
            CHECK(x < r.x_plus);
            double img = x + t * pb.w(x);
            CHECK(std::abs(r.x_minus + t * pb.w(r.x_minus) - img) < 1e-13);
            CHECK(std::abs(r.x_plus + t * pb.w(r.x_plus) - img) < 1e-13);
            CHECK(pb.tau(r.x_minus) > t);
            CHECK(pb.tau(r.x_plus) > t);
        }
    }
}

TEST_CASE("fold boundary merges the same-side companion and rejects the outside") {
    auto pb = canonical();
    double x = 0.2;
    double tf = pb.tau(x);
    // at the fold time of x = 0.2 the image has preimages {0.2 (double), -0.4}
    auto rt = companion_roots(pb, tf, x);
    CHECK(rt.x_plus == x);
    CHECK(rt.x_minus == doctest::Approx(-0.4).epsilon(1e-9));
    auto close = companion_roots(pb, tf * (1.0 + 1e-6), x);
    CHECK(close.x_minus == doctest::Approx(-0.4).epsilon(1e-3));
    CHECK(close.x_plus > x);
    CHECK(close.x_plus - x < 1e-4);
    CHECK_THROWS_AS(companion_roots(pb, tf * (1.0 - 1e-6), x), error);
    CHECK_THROWS_AS(companion_roots(pb, 0.9, 0.0), error);

    // the cusp tip is the only point where the whole interval degenerates
    auto tip = companion_roots(pb, pb.t0, 0.0);
    CHECK(tip.x_minus == 0.0);
    CHECK(tip.x_plus == 0.0);
}

TEST_CASE("root magnitude scales as a half power and seeds are first-order accurate") {
    auto pb = quartic();
    std::vector<double> logd, logmag, logerr;
    for (int k = 0; k <= 6; ++k) {
        double dt = 0.04 * std::pow(2.0, -k);
        double t = pb.t0 + dt;
        auto rt = companion_roots(pb, t, 0.0);
        double seed_p = pb.B(t) - pb.C(t, 0.0);
        logd.push_back(std::log(dt));
        logmag.push_back(std::log(rt.x_plus));
        logerr.push_back(std::log(std::abs(rt.x_plus - seed_p)));
    }
    CHECK(fitted_slope(logd, logmag) == doctest::Approx(0.5).epsilon(0.04));
    CHECK(fitted_slope(logd, logerr) >= 1.4);
}

TEST_CASE("accretion integrals match closed-form antiderivatives") {
    for (auto pb : {skew(), mixed(), offscale()}) {
        Poly R = antider(rho_poly(pb));
        Poly P = antider(mul(rho_poly(pb), w_poly(pb)));
        for (double dt : {0.02, 0.1, 0.2}) {
            double t = pb.t0 + dt;
            auto rt = companion_roots(pb, t, 0.0);
            auto acc = accretion_integrals(pb, rt);
            double m_ref = R.eval(rt.x_plus) - R.eval(rt.x_minus);
            double p_ref = P.eval(rt.x_plus) - P.eval(rt.x_minus);
            CHECK(acc.m == doctest::Approx(m_ref).epsilon(1e-13));
            CHECK(acc.p == doctest::Approx(p_ref).epsilon(1e-12));
            CHECK(acc.m > 0.0);
        }
    }
}

TEST_CASE("swept mass follows the square-root law") {
    for (auto pb : {canonical(), skew(), offscale()}) {
        double target = 2.0 * pb.omega1 * pb.rho0 * std::sqrt(6.0 / pb.omega3);
        std::vector<double> samples;
        for (int k = 0; k <= 4; ++k) {
            double dt = 0.04 / pb.omega1 * std::pow(4.0, -k);
            auto acc = accretion_integrals(pb, pb.t0 + dt, 0.0);
            samples.push_back(acc.m / std::sqrt(dt));
        }
        CHECK(richardson(samples, 0.5).value == doctest::Approx(target).epsilon(1e-6));
        CHECK(aitken(samples).value == doctest::Approx(target).epsilon(0.01));
    }
}

TEST_CASE("symmetric data has a vanishing drift and a pinned point mass") {
    auto pb = canonical();
    for (double t : {1.01, 1.1, 1.3, 1.5}) {
        Vec2 f = drift_field(pb, t, 0.0);
        CHECK(f.x == doctest::Approx(1.0 - t).epsilon(1e-14));
        CHECK(std::abs(f.y) < 1e-13);
    }
    auto traj = track_point_mass(pb, 1.4);
    for (const auto& st : traj) {
        CHECK(std::abs(st.x) < 1e-9);
        CHECK(std::abs(st.y) < 1e-9);
        CHECK(std::abs(st.v) < 1e-9);
    }
    double m_end = traj.back().m;
    CHECK(m_end == doctest::Approx(2.0 * std::sqrt(0.4 / 1.4)).epsilon(1e-10));
}

TEST_CASE("equilibrium jacobian: analytic entries and numeric confirmation") {
    {
        auto [analytic, numeric] = equilibrium_jacobian(skew());
        CHECK(analytic.a == -1.0);
        CHECK(analytic.b == 0.0);
        CHECK(analytic.c == doctest::Approx(-0.5).epsilon(1e-14));
        CHECK(analytic.d == 1.5);
        CHECK(std::abs(numeric.a - analytic.a) < 1e-4);
        CHECK(std::abs(numeric.b - analytic.b) < 1e-4);
        CHECK(std::abs(numeric.c - analytic.c) < 1e-4);
        CHECK(std::abs(numeric.d - analytic.d) < 1e-4);
    }
    {
        auto [analytic, numeric] = equilibrium_jacobian(quartic());
        CHECK(analytic.c == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(std::abs(numeric.c - analytic.c) < 1e-4);
        CHECK(std::abs(numeric.d - 1.5) < 1e-4);
    }
    {
        auto [analytic, numeric] = equilibrium_jacobian(offscale());
        CHECK(analytic.a == -2.0);
        CHECK(analytic.d == 3.0);
        CHECK(analytic.c == doctest::Approx(0.88).epsilon(1e-14));
        CHECK(std::abs(numeric.a - analytic.a) < 1e-4);
        CHECK(std::abs(numeric.c - analytic.c) < 1e-4);
        CHECK(std::abs(numeric.d - analytic.d) < 1e-4);
    }
}

TEST_CASE("saddle structure ties the jacobian to the drift coefficient") {
    for (auto pb : {skew(), quartic(), offscale()}) {
        Mat2 J = equilibrium_jacobian_analytic(pb);
        double s0 = s0_coefficient(pb);
        // (1, s0) spans the slow eigendirection with eigenvalue -omega1
        CHECK(J.c * 1.0 + J.d * s0 == doctest::Approx(-pb.omega1 * s0).epsilon(1e-12));
    }
}

TEST_CASE("drift coefficient: closed form against the integrability route") {
    CHECK(s0_coefficient(canonical()) == 0.0);
    CHECK(s0_coefficient(skew()) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(s0_coefficient(quartic()) == doctest::Approx(-0.1).epsilon(1e-14));
    CHECK(s0_coefficient(mixed()) == doctest::Approx(0.1).epsilon(1e-13));
    CHECK(s0_coefficient(offscale()) == doctest::Approx(-0.176).epsilon(1e-13));
    for (auto pb : {canonical(), skew(), quartic(), mixed(), offscale()}) {
        auto route = s0_integrability(pb);
        CHECK(std::abs(route.s0 - s0_coefficient(pb)) < 1e-6);
        CHECK(route.slope == doctest::Approx(3.75).epsilon(1e-3));
    }
}

TEST_CASE("tracked point mass leaves the singularity with the predicted slope") {
    auto pb = skew();
    TrackControls ctl;
    auto traj = track_point_mass(pb, pb.t0 + 2.0 * ctl.delta, ctl);
    double x1 = traj.front().x;
    double x2 = traj.back().x;
    CHECK(x1 == doctest::Approx(ctl.delta * 0.2).epsilon(1e-12));
    CHECK((x2 - x1) / ctl.delta == doctest::Approx(0.2).epsilon(5e-3));
}

TEST_CASE("mass location converges to the blow-up image") {
    auto pb = Cubic1DProblem::make(1, 1.5, 0, 1, 1, 6, 0);
    std::vector<double> ys;
    for (int k = 0; k <= 5; ++k) {
        double dt = 0.04 * std::pow(2.0, -k);
        auto traj = track_point_mass(pb, pb.t0 + dt);
        CHECK(traj.back().t == doctest::Approx(pb.t0 + dt).epsilon(1e-15));
        ys.push_back(traj.back().y);
    }
    double y0 = richardson(ys, 0.5).value;
    CHECK(y0 == doctest::Approx(pb.t0 * pb.omega0).epsilon(1e-6));
}

TEST_CASE("trajectory states keep the defining invariants") {
    auto pb = mixed();
    auto traj = track_point_mass(pb, pb.t0 + 0.3);
    REQUIRE(traj.size() > 5);
    double m_prev = 0.0;
    for (const auto& st : traj) {
        CHECK(st.x_minus < st.x);
        CHECK(st.x < st.x_plus);
        CHECK(pb.tau(st.x) < st.t);
        CHECK(pb.tau(st.x_minus) > st.t);
        CHECK(pb.tau(st.x_plus) > st.t);
        CHECK(st.residual <= 1e-13);
        CHECK(st.m > m_prev);
        m_prev = st.m;
    }
}

TEST_CASE("second order system matches the tracked trajectory") {
    for (auto pb : {skew(), mixed()}) {
        double t_end = pb.t0 + 0.04;
        auto a = track_point_mass(pb, t_end);
        auto b = second_order_system(pb, t_end);
        double ya = a.back().y, yb = b.back().y;
        double ma = a.back().m, mb = b.back().m;
        CHECK(std::abs(ya - yb) <= 1e-5 * (std::abs(ya) + 1e-12));
        CHECK(std::abs(ma - mb) <= 1e-5 * std::abs(ma));
        CHECK(a.back().v == doctest::Approx(b.back().v).epsilon(1e-4));
    }
}

TEST_CASE("second order system keeps momentum consistent with the quadratures") {
    auto pb = skew();
    auto traj = second_order_system(pb, pb.t0 + 0.1);
    for (size_t i = 0; i < traj.size(); i += 3) {
        const auto& st = traj[i];
        auto acc = accretion_integrals(pb, st.t, st.x);
        CHECK(std::abs(st.m * st.v - acc.p) < 1e-8);
    }
}

TEST_CASE("second order system rides the constant-velocity solution when symmetric") {
    auto pb = Cubic1DProblem::make(1, 0, 0, 2, 1, 6, 0);
    auto traj = second_order_system(pb, pb.t0 + 0.3);
    for (const auto& st : traj) {
        CHECK(std::abs(st.v - 2.0) < 1e-9);
        CHECK(std::abs(st.x) < 1e-9);
        CHECK(std::abs(st.S) < 1e-9);
    }
}

TEST_CASE("accretion rate and sheet densities follow the blow-up laws") {
    auto pb = mixed();
    double s0 = s0_coefficient(pb);
    std::vector<double> rate, dplus, dminus;
    for (int k = 0; k <= 4; ++k) {
        double dt = 0.01 * std::pow(4.0, -k);
        double t = pb.t0 + dt;
        double x = s0 * dt;
        auto rt = companion_roots(pb, t, x);
        double rm = pb.rho(rt.x_minus) / (1.0 + t * pb.wp(rt.x_minus));
        double rp = pb.rho(rt.x_plus) / (1.0 + t * pb.wp(rt.x_plus));
        double v = pb.w(x) + (1.0 + t * pb.wp(x)) * s0;
        rate.push_back(((v - pb.w(rt.x_plus)) * rp - (v - pb.w(rt.x_minus)) * rm) * std::sqrt(dt));
        dplus.push_back(rp * 2.0 * pb.omega1 * dt);
        dminus.push_back(rm * 2.0 * pb.omega1 * dt);
    }
    double rate0 = richardson(rate, 0.5).value;
    CHECK(rate0 == doctest::Approx(pb.omega1 * pb.rho0 * std::sqrt(6.0 / pb.omega3)).epsilon(1e-4));
    CHECK(richardson(dplus, 0.5).value == doctest::Approx(pb.rho0).epsilon(1e-4));
    CHECK(richardson(dminus, 0.5).value == doctest::Approx(pb.rho0).epsilon(1e-4));
}

TEST_CASE("tracking window is enforced") {
    auto pb = canonical();
    CHECK_THROWS_AS(track_point_mass(pb, pb.t0 + 0.51), error);
    CHECK_THROWS_AS(track_point_mass(pb, pb.t0 + 5e-5), error);
    auto pb2 = offscale();
    CHECK_THROWS_AS(track_point_mass(pb2, pb2.t0 + 0.26), error);
}
