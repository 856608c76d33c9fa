#pragma once

#include <vector>

#include "cuspflow/vec2.hpp"

namespace cuspflow {

// 1D initial data: quadratic density rho0 + rho1 x + rho2 x^2/2 and quartic
// velocity omega0 - omega1 x + omega3 x^3/6 + omega4 x^4/24 (the normal form
// of a generic 1D blow-up at x = 0, t0 = 1/omega1).
struct Cubic1DProblem {
    double rho0 = 1.0, rho1 = 0.0, rho2 = 0.0;
    double omega0 = 0.0, omega1 = 1.0, omega3 = 6.0, omega4 = 0.0;
    double t0 = 1.0;

    static Cubic1DProblem make(double rho0, double rho1, double rho2, double omega0,
                               double omega1, double omega3, double omega4);

    double w(double x) const;
    double wp(double x) const;
    double wpp(double x) const;
    double rho(double x) const;
    double tau(double x) const; // -1/w'(x), +inf where w' >= 0

    // leading-order root building blocks
    double B(double t) const;            // sqrt(6 omega1^2 (t-t0)/omega3)
    double C(double t, double x) const;  // x/2 + 3 omega1^2 omega4 (t-t0)/(4 omega3^2)
    double E(double S0) const;           // density-split amplitude
};

struct CompanionRoots1D {
    double x_minus = 0.0, x_plus = 0.0;
    double residual = 0.0; // max |f| over the two roots
};

// The two extreme-sheet preimages sharing the Eulerian point of (t, x),
// i.e. the nontrivial solutions of X + t w(X) = x + t w(x). Requires
// t >= tau(x); at equality the same-side companion merges with x while the
// opposite one stays at finite distance (both collapse only at the tip).
CompanionRoots1D companion_roots(const Cubic1DProblem& pb, double t, double x);

struct Accretion {
    double m = 0.0; // mass swept between the companion roots
    double p = 0.0; // momentum
};

Accretion accretion_integrals(const Cubic1DProblem& pb, const CompanionRoots1D& roots);
Accretion accretion_integrals(const Cubic1DProblem& pb, double t, double x);

// (f1, f2) = (1 + t w'(x), F(t,x)) with F = G/M - w(x), the amplitudes G, M
// being the accretion quadratures divided by the half-width (X+ - X-)/2.
Vec2 drift_field(const Cubic1DProblem& pb, double t, double x);

Mat2 equilibrium_jacobian_analytic(const Cubic1DProblem& pb);

struct JacobianPair {
    Mat2 analytic;
    Mat2 numeric; // Richardson limit of centered differences of drift_field
};
JacobianPair equilibrium_jacobian(const Cubic1DProblem& pb);

// closed-form drift slope of the pullback trajectory x(t) ~ S0 (t - t0)
double s0_coefficient(const Cubic1DProblem& pb);

// independent route: impose integrability of the second-order system; the
// bracket limit is affine in the trial S0 and the slope, in units of omega1,
// is the universal 15/4
struct S0Integrability {
    double s0 = 0.0;
    double slope = 0.0;
};
S0Integrability s0_integrability(const Cubic1DProblem& pb);

struct PointMassState {
    double t = 0.0;
    double x = 0.0; // middle-sheet pullback
    double x_minus = 0.0, x_plus = 0.0;
    double y = 0.0; // mass location x + t w(x)
    double m = 0.0;
    double v = 0.0; // mass velocity = momentum / mass
    double residual = 0.0;
};

struct TrackControls {
    double delta = 1e-4; // asymptotic start offset past t0
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
};

// forward integration of (1 + t w'(x)) x' = F(t,x) from the linearized start
// x(t0 + delta) = S0 delta; states recorded at every accepted step
std::vector<PointMassState> track_point_mass(const Cubic1DProblem& pb, double t_end,
                                             const TrackControls& ctl = {});

struct SecondOrderState {
    double t = 0.0;
    double m = 0.0, x = 0.0, S = 0.0;
    double y = 0.0, v = 0.0;
};

// the (m, x, S) closure of the mass/momentum balance, same solution as
// track_point_mass but driven by the gas states at the companion roots
std::vector<SecondOrderState> second_order_system(const Cubic1DProblem& pb, double t_end,
                                                  const TrackControls& ctl = {});

} // namespace cuspflow
