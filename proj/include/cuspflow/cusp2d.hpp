#pragma once

#include <memory>
#include <vector>

#include "cuspflow/characteristics.hpp"
#include "cuspflow/series.hpp"

namespace cuspflow {

// All scalar data attached to one point of the distinguished curve gamma*.
// tau is the local blow-up time 1/omega1; c2(sigma_tilde) = sigma_tilde + c2_const.
struct ChartPoint {
    double xi = 0.0;
    Vec2 gamma;
    Vec2 r2_star;             // unit tangent d gamma*/d xi
    EigenFrame frame;         // eigenframe of Dw at gamma*(xi)
    double tau = 0.0;
    double dtau_dxi = 0.0;
    double omega1 = 0.0, omega3 = 0.0, omega4 = 0.0;
    double q1 = 0.0, q2 = 0.0, q3 = 0.0, q4 = 0.0;
    double q5 = 0.0, q6 = 0.0, q7 = 0.0, q8 = 0.0;
    double p0 = 0.0;          // transversality factor <r1_perp, (I + tau Dw) r2*>
    double c1 = 0.0, c2_const = 0.0, c3 = 0.0;
    Vec2 l1_star, l2_star;    // dual basis of {r1, r2*}
};

// Arclength chart along gamma* with local Taylor models for off-grid queries.
// Built in two stages: build_gamma_star (geometry) then taylor_along_flow
// (flow Taylor data); build_cusp_chart runs both.
class CuspChart {
public:
    // gamma* and its xi-derivatives at one parameter value.
    struct Geometry {
        Vec2 gamma;
        Vec2 r2_star;
        Vec2 d2, d3, d4;      // second to fourth xi-derivatives of gamma*
        EigenFrame frame;
        double tau = 0.0;
    };

    const AnalyticPlaneField& field() const { return w_; }
    const AnalyticScalarField& density() const { return rho_; }
    const GenericSingularity& singularity() const { return sing_; }
    const std::vector<ChartPoint>& nodes() const { return nodes_; }
    double xi_range() const { return range_; }
    double node_spacing() const { return h_; }
    // true when the r1 integral curves are straight lines (checked at build)
    bool straight_flow() const { return straight_flow_; }
    bool taylor_ready() const { return taylor_ready_; }

    Geometry geometry_at(double xi) const;
    ChartPoint at(double xi) const;

private:
    friend CuspChart build_gamma_star(const AnalyticPlaneField&, const AnalyticScalarField&,
                                      const GenericSingularity&, double, int);
    friend void taylor_along_flow(CuspChart&);

    // Taylor model of gamma*(xi_node + d) about one node, arclength in d
    struct CurveLocal {
        Series1 gx, gy;
    };

    CuspChart() = default;
    int nearest_node(double xi) const;

    AnalyticPlaneField w_;
    AnalyticScalarField rho_;
    GenericSingularity sing_;
    std::vector<ChartPoint> nodes_;
    std::vector<CurveLocal> local_;
    double range_ = 0.0;
    double h_ = 0.0;
    bool straight_flow_ = false;
    bool taylor_ready_ = false;
};

// Continuation of <grad lambda1, r1> = 0 from the singular point, arclength
// parametrized with gamma*(0) = x0 and cross(r1, r2*) > 0. Geometry only.
CuspChart build_gamma_star(const AnalyticPlaneField& w, const AnalyticScalarField& rho_bar,
                           const GenericSingularity& sing, double xi_range, int n_xi);

// Fills the per-node flow Taylor data (omega/q/c coefficients, p0, duals) by
// jet transport along x_sigma = r1(x) to fourth order.
void taylor_along_flow(CuspChart& chart);

CuspChart build_cusp_chart(const AnalyticPlaneField& w, const AnalyticScalarField& rho_bar,
                           const GenericSingularity& sing, double xi_range, int n_xi);

// x(xi, sigma): flow of x' = r1(x) from gamma*(xi), adaptive integration at
// local tolerance 1e-12.
Vec2 flow_coordinates(const CuspChart& chart, double xi, double sigma);

// Chart map with first and second derivatives at (xi, sigma).
struct ChartMapDerivs {
    Vec2 x;
    Vec2 x_xi, x_sigma;
    Vec2 x_xixi, x_xisigma, x_sigmasigma;
};
ChartMapDerivs chart_map(const CuspChart& chart, double xi, double sigma);

// The two nontrivial companion roots Z-+ at chart coordinates (t, xi, sigma),
// sigma = sigma_tilde * (t - tau(xi)).
struct CompanionRoots2D {
    double t = 0.0, xi = 0.0, sigma_tilde = 0.0;
    double z_minus = 0.0, z_plus = 0.0;
    double phi_minus = 0.0, phi_plus = 0.0;   // shifted chart parameters phi(t,xi,sigma,Z)
    Vec2 x_minus, x_plus;                     // X-+ = x(phi, Z)
    double seed_minus = 0.0, seed_plus = 0.0; // closed-form seeds Z0-+
    double beta0 = 0.0, beta1 = 0.0;          // (Z+ + Z-)/2(t-tau), (Z+ - Z-)/2 sqrt(t-tau)
    double residual_minus = 0.0, residual_plus = 0.0;
    double min_dfdz = 0.0;                    // smallest |df/dZ| at the two seeds
    bool kantorovich_ok = true;               // min_dfdz >= sqrt(c1 (t-tau))
};
CompanionRoots2D companion_roots_2d(const CuspChart& chart, double t, double xi,
                                    double sigma_tilde);

// Two-sided gas state at (t, xi, sigma): sheet velocities/densities and the
// square-root split amplitudes.
struct GasState2D {
    Vec2 v_minus, v_plus;
    double rho_minus = 0.0, rho_plus = 0.0;
    Vec2 B1_hat, B2;   // (v+ + v-)/2 - w(gamma*), (v+ - v-)/2 sqrt(t-tau)
    double b1 = 0.0, b2 = 0.0;
    CompanionRoots2D roots;
};
GasState2D gas_state(const CuspChart& chart, double t, double xi, double sigma);

// Flow Taylor data cached about one chart parameter. Nearby evaluations reuse
// the stored series through a parameter shift instead of rebuilding the jet,
// so dense sweeps over (t, xi, sigma) stay affordable on fields without the
// straight-flow fast path. The root solves are the same exact Newton
// iterations as the uncached entry points; results agree with them to within
// the series truncation error of the two expansion centers.
class FlowPatch {
public:
    FlowPatch(const CuspChart& chart, double xi_center);
    FlowPatch(FlowPatch&&) noexcept;
    FlowPatch& operator=(FlowPatch&&) noexcept;
    ~FlowPatch();

    double xi_center() const { return xi0_; }
    // largest |xi - xi_center| the patch accepts
    static double reach();

    CompanionRoots2D companion(double t, double xi, double sigma_tilde) const;
    GasState2D gas(double t, double xi, double sigma) const;
    ChartMapDerivs map(double xi, double sigma) const;

private:
    struct Impl;
    const CuspChart* chart_;
    double xi0_ = 0.0;
    std::unique_ptr<Impl> impl_;
};

} // namespace cuspflow
