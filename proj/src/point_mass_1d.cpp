#include "cuspflow/point_mass_1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cuspflow/errors.hpp"
#include "cuspflow/ode.hpp"
#include "cuspflow/quadrature.hpp"
#include "cuspflow/richardson.hpp"

namespace cuspflow {

Cubic1DProblem Cubic1DProblem::make(double rho0, double rho1, double rho2, double omega0,
                                    double omega1, double omega3, double omega4) {
    if (!(rho0 > 0.0))
        throw hypothesis_violation("1d data needs a positive central density rho0");
    if (!(omega1 > 0.0))
        throw hypothesis_violation("1d data needs omega1 > 0 (compression at x = 0)");
    if (!(omega3 > 0.0))
        throw hypothesis_violation("1d data needs omega3 > 0 (strict minimum of w')");
    Cubic1DProblem pb;
    pb.rho0 = rho0;
    pb.rho1 = rho1;
    pb.rho2 = rho2;
    pb.omega0 = omega0;
    pb.omega1 = omega1;
    pb.omega3 = omega3;
    pb.omega4 = omega4;
    pb.t0 = 1.0 / omega1;
    return pb;
}

double Cubic1DProblem::w(double x) const {
    return omega0 - omega1 * x + omega3 * x * x * x / 6.0 + omega4 * x * x * x * x / 24.0;
}

double Cubic1DProblem::wp(double x) const {
    return -omega1 + omega3 * x * x / 2.0 + omega4 * x * x * x / 6.0;
}

double Cubic1DProblem::wpp(double x) const { return omega3 * x + omega4 * x * x / 2.0; }

double Cubic1DProblem::rho(double x) const { return rho0 + rho1 * x + rho2 * x * x / 2.0; }

double Cubic1DProblem::tau(double x) const {
    double d = wp(x);
    if (d >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / d;
}

double Cubic1DProblem::B(double t) const {
    return std::sqrt(std::max(0.0, 6.0 * omega1 * omega1 * (t - t0) / omega3));
}

double Cubic1DProblem::C(double t, double x) const {
    return x / 2.0 + 3.0 * omega1 * omega1 * omega4 * (t - t0) / (4.0 * omega3 * omega3);
}

double Cubic1DProblem::E(double S0) const {
    return (omega3 * omega3 * S0 - 0.5 * omega1 * omega1 * omega4) * std::sqrt(6.0 / omega3) /
           (4.0 * omega1 * omega3);
}

namespace {

// divided difference (w(X) - w(x)) / (X - x), written out so the companion
// equation 1 + t dd = 0 stays exact at X = x
double divided_difference(const Cubic1DProblem& pb, double X, double x) {
    double q = X * X + X * x + x * x;
    double c = X * X * X + X * X * x + X * x * x + x * x * x;
    return -pb.omega1 + pb.omega3 * q / 6.0 + pb.omega4 * c / 24.0;
}

double companion_f(const Cubic1DProblem& pb, double t, double X, double x) {
    return 1.0 + t * divided_difference(pb, X, x);
}

double companion_fprime(const Cubic1DProblem& pb, double t, double X, double x) {
    return t * (pb.omega3 * (2.0 * X + x) / 6.0 +
                pb.omega4 * (3.0 * X * X + 2.0 * X * x + x * x) / 24.0);
}

double newton_companion(const Cubic1DProblem& pb, double t, double x, double seed) {
    double X = seed;
    double f = companion_f(pb, t, X, x);
    for (int it = 0; it < 50 && std::abs(f) > 1e-16; ++it) {
        double fp = companion_fprime(pb, t, X, x);
        if (fp == 0.0) break;
        double step = f / fp;
        double Xn = X - step;
        double fn = companion_f(pb, t, Xn, x);
        int halvings = 0;
        while (std::abs(fn) > std::abs(f) && halvings < 30) {
            step *= 0.5;
            Xn = X - step;
            fn = companion_f(pb, t, Xn, x);
            ++halvings;
        }
        if (Xn == X) break;
        X = Xn;
        f = fn;
    }
    return X;
}

} // namespace

CompanionRoots1D companion_roots(const Cubic1DProblem& pb, double t, double x) {
    double d = 1.0 + t * pb.wp(x);
    if (d > 0.0)
        throw error("companion roots requested outside the accretion region (t < tau(x))");
    if (d == 0.0) {
        // fold boundary: x merges with the companion on its own side while the
        // other root stays at finite distance (both collapse only at the tip)
        double qb0 = t * pb.wpp(x) / 2.0;
        if (qb0 == 0.0) return CompanionRoots1D{x, x, 0.0};
        double qa0 = t * (pb.omega3 + pb.omega4 * x) / 6.0;
        if (qa0 <= 0.0) throw numeric_failure("degenerate fold geometry", qa0);
        double other = newton_companion(pb, t, x, x - qb0 / qa0);
        double res = std::abs(companion_f(pb, t, other, x));
        if (res > 1e-13) throw numeric_failure("companion root iteration stalled", res);
        if (qb0 > 0.0) {
            if (!(other < x)) throw numeric_failure("companion roots lost the ordering", res);
            return CompanionRoots1D{other, x, res};
        }
        if (!(other > x)) throw numeric_failure("companion roots lost the ordering", res);
        return CompanionRoots1D{x, other, res};
    }

    // seed from the quadratic truncation of the companion cubic about X = x:
    // f = d + t [w''(x)/2 (X-x) + w'''(x)/6 (X-x)^2 + omega4/24 (X-x)^3]
    double curv = pb.omega3 + pb.omega4 * x;
    double qa = t * curv / 6.0;
    double qb = t * pb.wpp(x) / 2.0;
    double disc = qb * qb - 4.0 * qa * d;
    double sm, sp;
    if (qa > 0.0 && disc > 0.0) {
        double sq = std::sqrt(disc);
        sm = x + (-qb - sq) / (2.0 * qa);
        sp = x + (-qb + sq) / (2.0 * qa);
    } else {
        double bt = std::sqrt(std::max(0.0, 6.0 * (t * pb.omega1 - 1.0) / (t * pb.omega3)));
        double c = pb.C(t, x);
        sm = -bt - c;
        sp = bt - c;
    }
    double xm = newton_companion(pb, t, x, sm);
    double xp = newton_companion(pb, t, x, sp);

    double rm = std::abs(companion_f(pb, t, xm, x));
    double rp = std::abs(companion_f(pb, t, xp, x));
    CompanionRoots1D out{xm, xp, std::max(rm, rp)};
    if (out.residual > 1e-13)
        throw numeric_failure("companion root iteration stalled", out.residual);
    if (!(xm < x && x < xp))
        throw numeric_failure("companion roots lost the ordering X- < x < X+", out.residual);
    return out;
}

Accretion accretion_integrals(const Cubic1DProblem& pb, const CompanionRoots1D& roots) {
    Accretion a;
    a.m = integrate([&](double s) { return pb.rho(s); }, roots.x_minus, roots.x_plus, 1e-12);
    a.p = integrate([&](double s) { return pb.rho(s) * pb.w(s); }, roots.x_minus, roots.x_plus,
                    1e-12);
    return a;
}

Accretion accretion_integrals(const Cubic1DProblem& pb, double t, double x) {
    return accretion_integrals(pb, companion_roots(pb, t, x));
}

Vec2 drift_field(const Cubic1DProblem& pb, double t, double x) {
    auto roots = companion_roots(pb, t, x);
    double hw = 0.5 * (roots.x_plus - roots.x_minus);
    if (hw <= 0.0) throw numeric_failure("degenerate accretion interval in drift field");
    auto acc = accretion_integrals(pb, roots);
    double M = acc.m / hw;
    double G = acc.p / hw;
    return Vec2{1.0 + t * pb.wp(x), G / M - pb.w(x)};
}

Mat2 equilibrium_jacobian_analytic(const Cubic1DProblem& pb) {
    double w1 = pb.omega1, w3 = pb.omega3, w4 = pb.omega4;
    double lower_left =
        3.0 * w1 * w1 * w1 * w4 / (4.0 * w3 * w3) - 2.0 * pb.rho1 * w1 * w1 * w1 / (pb.rho0 * w3);
    return Mat2{-w1, 0.0, lower_left, 1.5 * w1};
}

JacobianPair equilibrium_jacobian(const Cubic1DProblem& pb) {
    JacobianPair out;
    out.analytic = equilibrium_jacobian_analytic(pb);

    const double h = 1e-5;
    const int levels = 6;
    std::vector<double> a(levels), b(levels), c(levels), d(levels);
    for (int k = 0; k < levels; ++k) {
        double delta = 1e-3 * std::pow(2.0, -k);
        double t = pb.t0 + delta;
        auto f1 = [&](double tt, double xx) { return 1.0 + tt * pb.wp(xx); };
        auto F = [&](double tt, double xx) { return drift_field(pb, tt, xx).y; };
        a[k] = (f1(t + h, 0.0) - f1(t - h, 0.0)) / (2.0 * h);
        b[k] = (f1(t, h) - f1(t, -h)) / (2.0 * h);
        c[k] = (F(t + h, 0.0) - F(t - h, 0.0)) / (2.0 * h);
        d[k] = (F(t, h) - F(t, -h)) / (2.0 * h);
    }
    out.numeric = Mat2{richardson(a, 0.5).value, richardson(b, 0.5).value,
                       richardson(c, 0.5).value, richardson(d, 0.5).value};
    return out;
}

double s0_coefficient(const Cubic1DProblem& pb) {
    double w1 = pb.omega1, w3 = pb.omega3, w4 = pb.omega4;
    return 0.8 * pb.rho1 * w1 * w1 / (pb.rho0 * w3) - 0.3 * w1 * w1 * w4 / (w3 * w3);
}

namespace {

// bracket of the acceleration balance along the trial trajectory x = S0 (t - t0);
// its limit at t0 is affine in S0 and vanishes exactly at the admissible drift
double acceleration_bracket(const Cubic1DProblem& pb, double t, double S0) {
    double x = S0 * (t - pb.t0);
    auto roots = companion_roots(pb, t, x);
    auto acc = accretion_integrals(pb, roots);
    double d = 1.0 + t * pb.wp(x);
    double v = pb.w(x) + d * S0;
    double vm = pb.w(roots.x_minus);
    double vp = pb.w(roots.x_plus);
    double rm = pb.rho(roots.x_minus) / (1.0 + t * pb.wp(roots.x_minus));
    double rp = pb.rho(roots.x_plus) / (1.0 + t * pb.wp(roots.x_plus));
    double dv_m = v - vm;
    double dv_p = v - vp;
    return dv_m * dv_m * rm / acc.m - dv_p * dv_p * rp / acc.m - 2.0 * pb.wp(x) * S0 -
           t * pb.wpp(x) * S0 * S0;
}

double bracket_limit(const Cubic1DProblem& pb, double S0) {
    const double eps = 1e-2 / pb.omega1;
    const int levels = 5;
    std::vector<double> samples(levels);
    for (int k = 0; k < levels; ++k)
        samples[k] = acceleration_bracket(pb, pb.t0 + eps * std::pow(4.0, -k), S0);
    // corrections enter by half powers of t - t0, so quartering the offset
    // halves the expansion variable
    return richardson(samples, 0.5).value;
}

} // namespace

S0Integrability s0_integrability(const Cubic1DProblem& pb) {
    double psi0 = bracket_limit(pb, 0.0);
    double psi1 = bracket_limit(pb, 1.0);
    double raw_slope = psi1 - psi0;
    if (std::abs(raw_slope) < 1e-8)
        throw numeric_failure("degenerate drift balance", std::abs(raw_slope));
    S0Integrability out;
    out.s0 = -psi0 / raw_slope;
    out.slope = raw_slope / pb.omega1; // scale-free, 15/4 for admissible data
    return out;
}

namespace {

PointMassState assemble_state(const Cubic1DProblem& pb, double t, double x) {
    auto roots = companion_roots(pb, t, x);
    auto acc = accretion_integrals(pb, roots);
    PointMassState st;
    st.t = t;
    st.x = x;
    st.x_minus = roots.x_minus;
    st.x_plus = roots.x_plus;
    st.y = x + t * pb.w(x);
    st.m = acc.m;
    st.v = acc.p / acc.m;
    st.residual = roots.residual;
    return st;
}

void check_window(const Cubic1DProblem& pb, double t_end, double delta) {
    if (!(delta > 0.0)) throw error("point mass tracking needs a positive start offset");
    if (!(t_end > pb.t0 + delta))
        throw error("point mass tracking needs t_end past the asymptotic start");
    if (t_end > pb.t0 + 0.5 / pb.omega1 + 1e-12)
        throw error("point mass tracking limited to t <= t0 + 1/(2 omega1)");
}

} // namespace

std::vector<PointMassState> track_point_mass(const Cubic1DProblem& pb, double t_end,
                                             const TrackControls& ctl) {
    check_window(pb, t_end, ctl.delta);
    double s0 = s0_coefficient(pb);
    double t_start = pb.t0 + ctl.delta;
    std::vector<double> y0{s0 * ctl.delta};

    std::vector<PointMassState> out;
    OdeRhs rhs = [&](double t, const std::vector<double>& yv, std::vector<double>& dy) {
        double d = 1.0 + t * pb.wp(yv[0]);
        if (d >= -1e-12)
            throw numeric_failure("point mass tracking lost: trajectory left the region t > tau(x)",
                                  d);
        Vec2 f = drift_field(pb, t, yv[0]);
        dy[0] = f.y / f.x;
    };
    OdeControls octl;
    octl.rel_tol = ctl.rel_tol;
    octl.abs_tol = ctl.abs_tol;
    octl.h_init = ctl.delta / 10.0;
    ode_integrate(rhs, t_start, y0, t_end, octl, [&](double t, const std::vector<double>& yv) {
        out.push_back(assemble_state(pb, t, yv[0]));
    });
    return out;
}

std::vector<SecondOrderState> second_order_system(const Cubic1DProblem& pb, double t_end,
                                                  const TrackControls& ctl) {
    check_window(pb, t_end, ctl.delta);
    double s0 = s0_coefficient(pb);
    double t_start = pb.t0 + ctl.delta;
    double x0 = s0 * ctl.delta;
    double m0 = accretion_integrals(pb, t_start, x0).m;
    std::vector<double> y0{m0, x0, s0};

    std::vector<SecondOrderState> out;
    OdeRhs rhs = [&](double t, const std::vector<double>& yv, std::vector<double>& dy) {
        double m = yv[0], x = yv[1], S = yv[2];
        double d = 1.0 + t * pb.wp(x);
        if (d >= -1e-12)
            throw numeric_failure("second order system left the region t > tau(x)", d);
        auto roots = companion_roots(pb, t, x);
        double vm = pb.w(roots.x_minus);
        double vp = pb.w(roots.x_plus);
        double rm = pb.rho(roots.x_minus) / (1.0 + t * pb.wp(roots.x_minus));
        double rp = pb.rho(roots.x_plus) / (1.0 + t * pb.wp(roots.x_plus));
        double v = pb.w(x) + d * S;
        dy[0] = (v - vp) * rp - (v - vm) * rm;
        dy[1] = S;
        dy[2] = ((v - vm) * (v - vm) * rm / m - (v - vp) * (v - vp) * rp / m -
                 2.0 * pb.wp(x) * S - t * pb.wpp(x) * S * S) /
                d;
    };
    OdeControls octl;
    octl.rel_tol = ctl.rel_tol;
    octl.abs_tol = ctl.abs_tol;
    octl.h_init = ctl.delta / 10.0;
    ode_integrate(rhs, t_start, y0, t_end, octl, [&](double t, const std::vector<double>& yv) {
        SecondOrderState st;
        st.t = t;
        st.m = yv[0];
        st.x = yv[1];
        st.S = yv[2];
        st.y = st.x + t * pb.w(st.x);
        st.v = pb.w(st.x) + (1.0 + t * pb.wp(st.x)) * st.S;
        out.push_back(st);
    });
    return out;
}

} // namespace cuspflow
