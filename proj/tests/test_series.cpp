#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "cuspflow/errors.hpp"
#include "cuspflow/series.hpp"

using namespace cuspflow;

namespace {

Series1 random_poly1(std::mt19937& rng, int order, bool unit_constant = false) {
    std::uniform_int_distribution<int> coeff(-64, 64);
    Series1 p(order);
    for (int k = 0; k <= order; ++k) p[k] = coeff(rng) / 64.0;
    if (unit_constant) p[0] = 1.0 + std::abs(p[0]);
    return p;
}

Series2 random_poly2(std::mt19937& rng, int order, bool unit_constant = false) {
    std::uniform_int_distribution<int> coeff(-64, 64);
    Series2 p(order);
    for (int i = 0; i <= order; ++i)
        for (int j = 0; i + j <= order; ++j) p.at(i, j) = coeff(rng) / 64.0;
    if (unit_constant) p.at(0, 0) = 1.0 + std::abs(p.at(0, 0));
    return p;
}

} // namespace

TEST_CASE("univariate product and sum are exact on polynomials") {
    // (1 + 2u + 3u^2)(4 - u) = 4 + 7u + 10u^2 - 3u^3
    Series1 a(3);
    a[0] = 1; a[1] = 2; a[2] = 3;
    Series1 b(3);
    b[0] = 4; b[1] = -1;
    Series1 p = a * b;
    CHECK(p[0] == 4.0);
    CHECK(p[1] == 7.0);
    CHECK(p[2] == 10.0);
    CHECK(p[3] == -3.0);

    Series1 s = a + b;
    CHECK(s[0] == 5.0);
    CHECK(s[1] == 1.0);
    CHECK(s[2] == 3.0);
}

TEST_CASE("univariate division round-trips") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        Series1 a = random_poly1(rng, 8);
        Series1 b = random_poly1(rng, 8, true);
        Series1 q = a / b;
        Series1 back = q * b;
        for (int k = 0; k <= 8; ++k)
            CHECK(back[k] == doctest::Approx(a[k]).scale(1.0).epsilon(1e-13));
    }
    Series1 zero_const(4);
    CHECK_THROWS_AS(Series1(4, 1.0) / zero_const, numeric_failure);
}

TEST_CASE("univariate analytic functions match std at evaluation points") {
    const double base = 0.7;
    Series1 u = Series1::var(10, base);
    Series1 se = exp(u), sl = log(u), ss = sin(u), sc = cos(u), sq = sqrt(u);
    for (double h : {-0.03, -0.01, 0.02, 0.03}) {
        CHECK(se.eval(h) == doctest::Approx(std::exp(base + h)).epsilon(1e-13));
        CHECK(sl.eval(h) == doctest::Approx(std::log(base + h)).epsilon(1e-13));
        CHECK(ss.eval(h) == doctest::Approx(std::sin(base + h)).epsilon(1e-13));
        CHECK(sc.eval(h) == doctest::Approx(std::cos(base + h)).epsilon(1e-13));
        CHECK(sq.eval(h) == doctest::Approx(std::sqrt(base + h)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(sqrt(Series1(3, -1.0)), numeric_failure);
    CHECK_THROWS_AS(log(Series1(3, 0.0)), numeric_failure);
}

TEST_CASE("integer powers are exact, fractional powers invert") {
    Series1 u = Series1::var(5, 1.0); // 1 + h
    Series1 cube = pow(u, 3.0);
    CHECK(cube[0] == 1.0);
    CHECK(cube[1] == 3.0);
    CHECK(cube[2] == 3.0);
    CHECK(cube[3] == 1.0);
    CHECK(cube[4] == 0.0);

    // integer power with zero constant term stays polynomial-exact
    Series1 v = Series1::var(5, 0.0);
    Series1 v4 = pow(v, 4.0);
    CHECK(v4[4] == 1.0);
    CHECK(v4[3] == 0.0);

    Series1 w = Series1::var(6, 2.0);
    Series1 h = pow(w, 0.5);
    Series1 back = h * h;
    for (int k = 0; k <= 6; ++k)
        CHECK(back[k] == doctest::Approx(w.coeff(k)).epsilon(1e-13).scale(1.0));

    Series1 inv = pow(w, -2.0);
    Series1 one = inv * w * w;
    CHECK(one[0] == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 1; k <= 4; ++k) CHECK(std::abs(one[k]) < 1e-13);
}

TEST_CASE("derivative and antiderivative shift coefficients correctly") {
    Series1 p(4);
    p[0] = 2; p[1] = -1; p[2] = 4; p[3] = 0.5; p[4] = -2;
    Series1 d = p.derivative();
    CHECK(d[0] == -1.0);
    CHECK(d[1] == 8.0);
    CHECK(d[2] == 1.5);
    CHECK(d[3] == -8.0);
    Series1 a = d.antiderivative();
    for (int k = 1; k <= 4; ++k) CHECK(a[k] == p[k]);
    CHECK(a[0] == 0.0);
}

TEST_CASE("univariate composition is exact polynomial evaluation") {
    // p(y) = 1 + y + y^2 at y = g(u) = 2u - u^2
    Series1 p(4);
    p[0] = 1; p[1] = 1; p[2] = 1;
    Series1 g(4);
    g[1] = 2; g[2] = -1;
    Series1 c = compose(p, g);
    // 1 + (2u - u^2) + (2u - u^2)^2 = 1 + 2u + 3u^2 - 4u^3 + u^4
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 2.0);
    CHECK(c[2] == 3.0);
    CHECK(c[3] == -4.0);
    CHECK(c[4] == 1.0);
}

TEST_CASE("bivariate algebra is exact: (u + 2v)^3") {
    Series2 u = Series2::var_u(3), v = Series2::var_v(3);
    Series2 s = u + 2.0 * v;
    Series2 cube = s * s * s;
    CHECK(cube.at(3, 0) == 1.0);
    CHECK(cube.at(2, 1) == 6.0);
    CHECK(cube.at(1, 2) == 12.0);
    CHECK(cube.at(0, 3) == 8.0);
    CHECK(cube.at(0, 0) == 0.0);
    CHECK(cube.at(1, 0) == 0.0);
}

TEST_CASE("bivariate division, sqrt and pow round-trip") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Series2 a = random_poly2(rng, 6);
        Series2 b = random_poly2(rng, 6, true);
        Series2 q = a / b;
        Series2 back = q * b;
        for (int i = 0; i <= 6; ++i)
            for (int j = 0; i + j <= 6; ++j)
                CHECK(back.at(i, j) == doctest::Approx(a.at(i, j)).epsilon(1e-12).scale(1.0));

        Series2 r = sqrt(b);
        Series2 b2 = r * r;
        for (int i = 0; i <= 6; ++i)
            for (int j = 0; i + j <= 6; ++j)
                CHECK(b2.at(i, j) == doctest::Approx(b.at(i, j)).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("bivariate evaluation, restriction, and calculus") {
    // f(u,v) = 3 + u^2 v - 2 v^3
    Series2 f(4);
    f.at(0, 0) = 3;
    f.at(2, 1) = 1;
    f.at(0, 3) = -2;
    CHECK(f.eval(0.5, -0.25) == doctest::Approx(3 + 0.25 * (-0.25) - 2 * (-0.015625)));

    Series2 fu = f.derivative_u();
    CHECK(fu.at(1, 1) == 2.0);
    Series2 fv = f.derivative_v();
    CHECK(fv.at(2, 0) == 1.0);
    CHECK(fv.at(0, 2) == -6.0);

    Series2 fa = fv.antiderivative_v();
    CHECK(fa.at(2, 1) == 1.0);
    CHECK(fa.at(0, 3) == -2.0);

    Series1 on_v = f.restrict_v(4); // u = 0
    CHECK(on_v[0] == 3.0);
    CHECK(on_v[3] == -2.0);
    Series1 on_u = f.restrict_u(4); // v = 0
    CHECK(on_u[0] == 3.0);
    CHECK(on_u[2] == 0.0);

    CHECK(f.max_abs_at_order(3) == 2.0);
    CHECK(f.max_abs_at_order(4) == 0.0);
}

TEST_CASE("bivariate analytic functions agree with pointwise evaluation") {
    Series2 u = Series2::var_u(10, 0.3), v = Series2::var_v(10, -0.2);
    Series2 g = u * u + 2.0 * v + 1.5;
    Series2 eg = exp(g), sg = sin(g), cg = cos(g), lg = log(g), qg = sqrt(g);
    for (double du : {-0.04, 0.03})
        for (double dv : {-0.03, 0.05}) {
            const double gval = std::pow(0.3 + du, 2) + 2.0 * (-0.2 + dv) + 1.5;
            CHECK(eg.eval(du, dv) == doctest::Approx(std::exp(gval)).epsilon(1e-12));
            CHECK(sg.eval(du, dv) == doctest::Approx(std::sin(gval)).epsilon(1e-12));
            CHECK(cg.eval(du, dv) == doctest::Approx(std::cos(gval)).epsilon(1e-12));
            CHECK(lg.eval(du, dv) == doctest::Approx(std::log(gval)).epsilon(1e-12));
            CHECK(qg.eval(du, dv) == doctest::Approx(std::sqrt(gval)).epsilon(1e-12));
        }
}

TEST_CASE("bivariate composition substitutes series arguments exactly") {
    // p(a,b) = a^2 + 3 a b, composed with a = u + v, b = u - v
    Series2 p(4);
    p.at(2, 0) = 1;
    p.at(1, 1) = 3;
    Series2 u = Series2::var_u(4), v = Series2::var_v(4);
    Series2 c = compose(p, u + v, u - v);
    // (u+v)^2 + 3(u+v)(u-v) = 4u^2 - 2v^2 + 2uv
    CHECK(c.at(2, 0) == 4.0);
    CHECK(c.at(0, 2) == -2.0);
    CHECK(c.at(1, 1) == 2.0);
}
