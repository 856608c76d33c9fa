#include "cuspflow/cusp2d.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cuspflow/errors.hpp"
#include "cuspflow/ode.hpp"

namespace cuspflow {

namespace {

constexpr int kLocalOrder = 9;    // gamma* Taylor order about each node
constexpr int kSolverOrder = 26;  // flow Taylor order for the root solver
constexpr int kMapOrder = 16;     // flow Taylor order for chart_map
constexpr double kFlowTube = 0.16;
constexpr double kCorrectorTol = 1e-10;

std::string num_str(double v) { return std::to_string(v); }

// <grad lambda1, r1> as a series about x; r1 sign tied to ref.
Series2 level_series(const AnalyticPlaneField& w, Vec2 x, Vec2 ref, int jet_order) {
    PlaneJet pj = w.jet(x, jet_order);
    SeriesEigen se = series_eigen(pj.w1.derivative_u(), pj.w1.derivative_v(),
                                  pj.w2.derivative_u(), pj.w2.derivative_v(), ref);
    return se.lambda1.derivative_u() * se.r1x + se.lambda1.derivative_v() * se.r1y;
}

struct Level {
    double g = 0.0;
    Vec2 grad;
};

Level level_at(const AnalyticPlaneField& w, Vec2 x, Vec2 ref) {
    Series2 g = level_series(w, x, ref, 3);
    return {g.coeff(0, 0), {g.coeff(1, 0), g.coeff(0, 1)}};
}

Vec2 level_tangent(const AnalyticPlaneField& w, Vec2 x, Vec2 ref) {
    Level lv = level_at(w, x, ref);
    const double gn = lv.grad.norm();
    if (gn < 1e-10)
        throw numeric_failure("gamma* tangent degenerate: |grad g| = " + num_str(gn), gn);
    return lv.grad.perp() / gn;
}

// Picard displacement series of the flow x' = r1(x) from the base point of se.
void flow_displacement(const SeriesEigen& se, int order, Series1& dx, Series1& dy) {
    dx = Series1(order);
    dy = Series1(order);
    for (int it = 0; it < order; ++it) {
        Series1 fx = compose(se.r1x, dx, dy);
        Series1 fy = compose(se.r1y, dx, dy);
        dx = fx.antiderivative().truncated(order);
        dy = fy.antiderivative().truncated(order);
    }
}

// Flow Taylor model about gamma*(xi): displacement series in sigma plus
// xi-variations J_k = d^k x / d xi^k along the flow, k <= nvar.
struct FlowJet {
    Vec2 base;
    Series1 x, y;  // displacement, zero constant term
    Series1 j1x, j1y, j2x, j2y, j3x, j3y, j4x, j4y;
};

FlowJet make_flow_jet(const AnalyticPlaneField& w, const CuspChart::Geometry& geo,
                      bool straight, int order, int nvar) {
    FlowJet fj;
    fj.base = geo.gamma;
    const Vec2 r1 = geo.frame.r1;
    if (straight) {
        fj.x = Series1(1);
        fj.y = Series1(1);
        fj.x[1] = r1.x;
        fj.y[1] = r1.y;
        fj.j1x = Series1(0, geo.r2_star.x);
        fj.j1y = Series1(0, geo.r2_star.y);
        fj.j2x = Series1(0, geo.d2.x);
        fj.j2y = Series1(0, geo.d2.y);
        fj.j3x = Series1(0, geo.d3.x);
        fj.j3y = Series1(0, geo.d3.y);
        fj.j4x = Series1(0, geo.d4.x);
        fj.j4y = Series1(0, geo.d4.y);
        return fj;
    }

    PlaneJet pj = w.jet(geo.gamma, order + 1);
    SeriesEigen se = series_eigen(pj.w1.derivative_u(), pj.w1.derivative_v(),
                                  pj.w2.derivative_u(), pj.w2.derivative_v(), r1);
    flow_displacement(se, order, fj.x, fj.y);

    if (nvar < 1) return fj;

    auto along = [&](const Series2& s) { return compose(s, fj.x, fj.y); };

    // first derivatives of r1 along the flow
    const Series1 m11 = along(se.r1x.derivative_u());
    const Series1 m12 = along(se.r1x.derivative_v());
    const Series1 m21 = along(se.r1y.derivative_u());
    const Series1 m22 = along(se.r1y.derivative_v());

    auto picard_var = [&](Vec2 ic, const Series1& fx, const Series1& fy, Series1& jx,
                          Series1& jy) {
        jx = Series1(order, ic.x);
        jy = Series1(order, ic.y);
        for (int it = 0; it < order; ++it) {
            Series1 rx = m11 * jx + m12 * jy + fx;
            Series1 ry = m21 * jx + m22 * jy + fy;
            rx = rx.antiderivative().truncated(order);
            ry = ry.antiderivative().truncated(order);
            rx[0] = ic.x;
            ry[0] = ic.y;
            jx = rx;
            jy = ry;
        }
    };

    const Series1 zero(0);
    picard_var(geo.r2_star, zero, zero, fj.j1x, fj.j1y);
    if (nvar < 2) return fj;

    // second derivatives of r1 along the flow, one triple per component
    const Series1 xuu = along(se.r1x.derivative_u().derivative_u());
    const Series1 xuv = along(se.r1x.derivative_u().derivative_v());
    const Series1 xvv = along(se.r1x.derivative_v().derivative_v());
    const Series1 yuu = along(se.r1y.derivative_u().derivative_u());
    const Series1 yuv = along(se.r1y.derivative_u().derivative_v());
    const Series1 yvv = along(se.r1y.derivative_v().derivative_v());

    auto d2x = [&](const Series1& ax, const Series1& ay, const Series1& bx, const Series1& by) {
        return xuu * (ax * bx) + xuv * (ax * by + ay * bx) + xvv * (ay * by);
    };
    auto d2y = [&](const Series1& ax, const Series1& ay, const Series1& bx, const Series1& by) {
        return yuu * (ax * bx) + yuv * (ax * by + ay * bx) + yvv * (ay * by);
    };

    picard_var(geo.d2, d2x(fj.j1x, fj.j1y, fj.j1x, fj.j1y),
               d2y(fj.j1x, fj.j1y, fj.j1x, fj.j1y), fj.j2x, fj.j2y);
    if (nvar < 3) return fj;

    const Series1 xuuu = along(se.r1x.derivative_u().derivative_u().derivative_u());
    const Series1 xuuv = along(se.r1x.derivative_u().derivative_u().derivative_v());
    const Series1 xuvv = along(se.r1x.derivative_u().derivative_v().derivative_v());
    const Series1 xvvv = along(se.r1x.derivative_v().derivative_v().derivative_v());
    const Series1 yuuu = along(se.r1y.derivative_u().derivative_u().derivative_u());
    const Series1 yuuv = along(se.r1y.derivative_u().derivative_u().derivative_v());
    const Series1 yuvv = along(se.r1y.derivative_u().derivative_v().derivative_v());
    const Series1 yvvv = along(se.r1y.derivative_v().derivative_v().derivative_v());

    // symmetric trilinear contraction with arguments (a, a, b)
    auto d3 = [&](const Series1& uuu, const Series1& uuv, const Series1& uvv,
                  const Series1& vvv, const Series1& ax, const Series1& ay, const Series1& bx,
                  const Series1& by) {
        return uuu * (ax * ax * bx) + uuv * (ax * ax * by + 2.0 * (ax * ay * bx)) +
               uvv * (ay * ay * bx + 2.0 * (ax * ay * by)) + vvv * (ay * ay * by);
    };

    {
        Series1 fx = 3.0 * d2x(fj.j1x, fj.j1y, fj.j2x, fj.j2y) +
                     d3(xuuu, xuuv, xuvv, xvvv, fj.j1x, fj.j1y, fj.j1x, fj.j1y);
        Series1 fy = 3.0 * d2y(fj.j1x, fj.j1y, fj.j2x, fj.j2y) +
                     d3(yuuu, yuuv, yuvv, yvvv, fj.j1x, fj.j1y, fj.j1x, fj.j1y);
        picard_var(geo.d3, fx, fy, fj.j3x, fj.j3y);
    }
    if (nvar < 4) return fj;

    const Series1 xu4 = along(se.r1x.derivative_u().derivative_u().derivative_u().derivative_u());
    const Series1 xu3v = along(se.r1x.derivative_u().derivative_u().derivative_u().derivative_v());
    const Series1 xu2v2 = along(se.r1x.derivative_u().derivative_u().derivative_v().derivative_v());
    const Series1 xuv3 = along(se.r1x.derivative_u().derivative_v().derivative_v().derivative_v());
    const Series1 xv4 = along(se.r1x.derivative_v().derivative_v().derivative_v().derivative_v());
    const Series1 yu4 = along(se.r1y.derivative_u().derivative_u().derivative_u().derivative_u());
    const Series1 yu3v = along(se.r1y.derivative_u().derivative_u().derivative_u().derivative_v());
    const Series1 yu2v2 = along(se.r1y.derivative_u().derivative_u().derivative_v().derivative_v());
    const Series1 yuv3 = along(se.r1y.derivative_u().derivative_v().derivative_v().derivative_v());
    const Series1 yv4 = along(se.r1y.derivative_v().derivative_v().derivative_v().derivative_v());

    // quadrilinear contraction with all four arguments equal
    auto d4 = [&](const Series1& u4, const Series1& u3v, const Series1& u2v2, const Series1& uv3,
                  const Series1& v4, const Series1& ax, const Series1& ay) {
        Series1 ax2 = ax * ax, ay2 = ay * ay;
        return u4 * (ax2 * ax2) + u3v * (4.0 * (ax2 * (ax * ay))) +
               u2v2 * (6.0 * (ax2 * ay2)) + uv3 * (4.0 * (ax * (ay * ay2))) + v4 * (ay2 * ay2);
    };

    {
        Series1 fx = 4.0 * d2x(fj.j1x, fj.j1y, fj.j3x, fj.j3y) +
                     3.0 * d2x(fj.j2x, fj.j2y, fj.j2x, fj.j2y) +
                     6.0 * d3(xuuu, xuuv, xuvv, xvvv, fj.j1x, fj.j1y, fj.j2x, fj.j2y) +
                     d4(xu4, xu3v, xu2v2, xuv3, xv4, fj.j1x, fj.j1y);
        Series1 fy = 4.0 * d2y(fj.j1x, fj.j1y, fj.j3x, fj.j3y) +
                     3.0 * d2y(fj.j2x, fj.j2y, fj.j2x, fj.j2y) +
                     6.0 * d3(yuuu, yuuv, yuvv, yvvv, fj.j1x, fj.j1y, fj.j2x, fj.j2y) +
                     d4(yu4, yu3v, yu2v2, yuv3, yv4, fj.j1x, fj.j1y);
        picard_var(geo.d4, fx, fy, fj.j4x, fj.j4y);
    }
    return fj;
}

struct FlowEval {
    Vec2 x;
    Vec2 x_xi;
    Vec2 x_sigma;
};

FlowEval flow_eval(const FlowJet& fj, double delta, double sigma) {
    const double c2 = 0.5 * delta * delta;
    const double c3 = c2 * delta / 3.0;
    const double c4 = c3 * delta / 4.0;
    FlowEval fe;
    fe.x = {fj.base.x + fj.x.eval(sigma) + fj.j1x.eval(sigma) * delta + fj.j2x.eval(sigma) * c2 +
                fj.j3x.eval(sigma) * c3 + fj.j4x.eval(sigma) * c4,
            fj.base.y + fj.y.eval(sigma) + fj.j1y.eval(sigma) * delta + fj.j2y.eval(sigma) * c2 +
                fj.j3y.eval(sigma) * c3 + fj.j4y.eval(sigma) * c4};
    fe.x_xi = {fj.j1x.eval(sigma) + fj.j2x.eval(sigma) * delta + fj.j3x.eval(sigma) * c2 +
                   fj.j4x.eval(sigma) * c3,
               fj.j1y.eval(sigma) + fj.j2y.eval(sigma) * delta + fj.j3y.eval(sigma) * c2 +
                   fj.j4y.eval(sigma) * c3};
    fe.x_sigma = {fj.x.derivative().eval(sigma) + fj.j1x.derivative().eval(sigma) * delta +
                      fj.j2x.derivative().eval(sigma) * c2 + fj.j3x.derivative().eval(sigma) * c3 +
                      fj.j4x.derivative().eval(sigma) * c4,
                  fj.y.derivative().eval(sigma) + fj.j1y.derivative().eval(sigma) * delta +
                      fj.j2y.derivative().eval(sigma) * c2 + fj.j3y.derivative().eval(sigma) * c3 +
                      fj.j4y.derivative().eval(sigma) * c4};
    return fe;
}

// sigma-Taylor data of lambda1 and r1 along the flow from cp.gamma.
void extract_taylor(const AnalyticPlaneField& w, ChartPoint& cp, bool straight) {
    const Vec2 r1 = cp.frame.r1;
    const Vec2 r1p = r1.perp();

    PlaneJet pj = w.jet(cp.gamma, 6);
    SeriesEigen se = series_eigen(pj.w1.derivative_u(), pj.w1.derivative_v(),
                                  pj.w2.derivative_u(), pj.w2.derivative_v(), r1);
    Series1 dx(4), dy(4);
    if (straight) {
        dx[1] = r1.x;
        dy[1] = r1.y;
    } else {
        flow_displacement(se, 4, dx, dy);
    }

    const Series1 lam = compose(se.lambda1, dx, dy);
    cp.omega1 = -lam[0];
    if (!(cp.omega1 > 0.0))
        throw hypothesis_violation("omega1(xi) = " + num_str(cp.omega1) +
                                   " not positive on gamma* at xi = " + num_str(cp.xi));
    if (std::abs(lam[1]) > 1e-9)
        throw numeric_failure("gamma* Taylor consistency: linear sigma-term of lambda1 = " +
                                  num_str(lam[1]) + " at xi = " + num_str(cp.xi),
                              lam[1]);
    cp.omega3 = 2.0 * lam[2];
    if (!(cp.omega3 > 0.0))
        throw hypothesis_violation("omega3(xi) = " + num_str(cp.omega3) +
                                   " not positive on gamma* at xi = " + num_str(cp.xi));
    cp.omega4 = 6.0 * lam[3];

    const Series1 r1xs = compose(se.r1x, dx, dy);
    const Series1 r1ys = compose(se.r1y, dx, dy);
    const Series1 par = r1xs * r1.x + r1ys * r1.y;
    const Series1 per = r1xs * r1p.x + r1ys * r1p.y;
    cp.q1 = par[2];
    cp.q2 = par[3];
    cp.q3 = per[1];
    cp.q4 = per[2];

    const Mat2 A = Mat2::identity() + cp.tau * w.jacobian(cp.gamma);
    cp.q8 = dot(r1, A * cp.r2_star);
    cp.p0 = dot(r1p, A * cp.r2_star);
    if (std::abs(cp.p0) < 1e-8)
        throw hypothesis_violation("chart degeneracy: |p0| = " + num_str(std::abs(cp.p0)) +
                                   " at xi = " + num_str(cp.xi));
    cp.q5 = cp.omega1 * cp.q3 / (2.0 * cp.p0);
    cp.q6 = cp.omega1 * cp.q4 / (3.0 * cp.p0);
    cp.q7 = -cp.omega3 * cp.tau * cp.q3 / (8.0 * cp.p0);

    cp.c1 = 6.0 * cp.omega1 * cp.omega1 / cp.omega3;
    cp.c2_const = 6.0 * cp.q5 * cp.q8 * cp.omega1 / cp.omega3;
    cp.c3 = cp.omega4 / (4.0 * cp.omega3) + 6.0 * cp.q7 * cp.q8 * cp.omega1 / cp.omega3;

    const double cr = cross(cp.frame.r1, cp.r2_star);
    if (std::abs(cr) < 1e-8)
        throw hypothesis_violation("chart basis collapse: cross(r1, r2*) = " + num_str(cr) +
                                   " at xi = " + num_str(cp.xi));
    cp.l1_star = cp.r2_star.perp() / cross(cp.r2_star, cp.frame.r1);
    cp.l2_star = cp.frame.r1.perp() / cr;
}

double dtau_along(const AnalyticPlaneField& w, Vec2 x, Vec2 tangent, double lambda1) {
    Series2 lj = lambda1_jet(w, x, 1);
    const Vec2 grad{lj.coeff(1, 0), lj.coeff(0, 1)};
    return dot(grad, tangent) / (lambda1 * lambda1);
}

} // namespace

// ------------------------------------------------------------------ CuspChart

int CuspChart::nearest_node(double xi) const {
    if (std::abs(xi) > range_ + 1e-12)
        throw error("xi = " + num_str(xi) + " outside the chart range " + num_str(range_));
    const int n = static_cast<int>(nodes_.size());
    int k = static_cast<int>(std::llround((xi + range_) / h_));
    return std::clamp(k, 0, n - 1);
}

CuspChart::Geometry CuspChart::geometry_at(double xi) const {
    const int k = nearest_node(xi);
    const double d = xi - nodes_[k].xi;
    const CurveLocal& cl = local_[k];
    Geometry geo;
    geo.gamma = {cl.gx.eval(d), cl.gy.eval(d)};
    const Series1 d1x = cl.gx.derivative(), d1y = cl.gy.derivative();
    const Series1 d2x = d1x.derivative(), d2y = d1y.derivative();
    const Series1 d3x = d2x.derivative(), d3y = d2y.derivative();
    geo.r2_star = {d1x.eval(d), d1y.eval(d)};
    geo.d2 = {d2x.eval(d), d2y.eval(d)};
    geo.d3 = {d3x.eval(d), d3y.eval(d)};
    geo.d4 = {d3x.derivative().eval(d), d3y.derivative().eval(d)};
    geo.frame = eigenframe(w_.jacobian(geo.gamma), nodes_[k].frame);
    geo.tau = geo.frame.tau;
    return geo;
}

ChartPoint CuspChart::at(double xi) const {
    if (!taylor_ready_) throw error("chart Taylor data not built (run taylor_along_flow)");
    const Geometry geo = geometry_at(xi);
    ChartPoint cp;
    cp.xi = xi;
    cp.gamma = geo.gamma;
    cp.r2_star = geo.r2_star;
    cp.frame = geo.frame;
    cp.tau = geo.tau;
    cp.dtau_dxi = dtau_along(w_, cp.gamma, cp.r2_star, cp.frame.lambda1);
    extract_taylor(w_, cp, straight_flow_);
    return cp;
}

// ------------------------------------------------------------ chart building

CuspChart build_gamma_star(const AnalyticPlaneField& w, const AnalyticScalarField& rho_bar,
                           const GenericSingularity& sing, double xi_range, int n_xi) {
    if (!(xi_range > 0.0)) throw config_error("xi_range must be positive");
    if (n_xi < 5 || n_xi % 2 == 0) throw config_error("n_xi must be odd and at least 5");
    if (w.jet_order() < kSolverOrder + 1)
        throw config_error("field jet order " + std::to_string(w.jet_order()) +
                           " too small for the cusp chart; parse the field with jet order >= " +
                           std::to_string(kSolverOrder + 1));

    CuspChart chart;
    chart.w_ = w;
    chart.rho_ = rho_bar;
    chart.sing_ = sing;
    chart.range_ = xi_range;
    const int center = (n_xi - 1) / 2;
    chart.h_ = xi_range / center;
    chart.nodes_.resize(n_xi);

    {
        Series2 lj = lambda1_jet(w, sing.x0, 1);
        const Vec2 grad{lj.coeff(1, 0), lj.coeff(0, 1)};
        if (grad.norm() > 1e-6)
            throw error("gamma* anchor: grad lambda1 at x0 has norm " + num_str(grad.norm()));
    }

    auto project = [&](Vec2 x, Vec2 ref, double xi_label) {
        for (int it = 0; it < 20; ++it) {
            Level lv = level_at(w, x, ref);
            if (std::abs(lv.g) <= 1e-13) return x;
            const double g2 = dot(lv.grad, lv.grad);
            if (g2 < 1e-20)
                throw numeric_failure("gamma* corrector: grad g vanished at xi = " +
                                          num_str(xi_label),
                                      g2);
            x -= lv.grad * (lv.g / g2);
        }
        const Level lv = level_at(w, x, ref);
        if (std::abs(lv.g) > kCorrectorTol)
            throw numeric_failure("gamma* corrector stalled; last good xi = " +
                                      num_str(xi_label) + ", residual " + num_str(lv.g),
                                  lv.g);
        return x;
    };

    auto advance = [&](Vec2 from, Vec2 t_prev, Vec2 r1_ref, double step) {
        OdeRhs rhs = [&](double, const std::vector<double>& yv, std::vector<double>& dy) {
            Vec2 tt = level_tangent(w, {yv[0], yv[1]}, r1_ref);
            if (dot(tt, t_prev) < 0.0) tt = -tt;
            dy[0] = tt.x;
            dy[1] = tt.y;
        };
        OdeControls ctl;
        ctl.rel_tol = 1e-12;
        ctl.abs_tol = 1e-14;
        const std::vector<double> out = ode_integrate(rhs, 0.0, {from.x, from.y}, step, ctl);
        return Vec2{out[0], out[1]};
    };

    // center node
    {
        ChartPoint& cp = chart.nodes_[center];
        cp.xi = 0.0;
        cp.gamma = project(sing.x0, eigenframe(w, sing.x0).r1, 0.0);
        cp.frame = eigenframe(w, cp.gamma);
        cp.tau = cp.frame.tau;
        Vec2 t0 = level_tangent(w, cp.gamma, cp.frame.r1);
        if (cross(cp.frame.r1, t0) < 0.0) t0 = -t0;
        if (std::abs(cross(cp.frame.r1, t0)) < 1e-10)
            throw numeric_failure("gamma* orientation degenerate at the singular point",
                                  cross(cp.frame.r1, t0));
        cp.r2_star = t0;
    }

    auto march = [&](int dir) {
        const ChartPoint& c0 = chart.nodes_[center];
        Vec2 x = c0.gamma;
        Vec2 t_prev = c0.r2_star;
        EigenFrame fr_prev = c0.frame;
        for (int k = 1; k <= center; ++k) {
            const double xi_k = dir * k * chart.h_;
            x = advance(x, t_prev, fr_prev.r1, dir * chart.h_);
            x = project(x, fr_prev.r1, xi_k);
            ChartPoint& cp = chart.nodes_[center + dir * k];
            cp.xi = xi_k;
            cp.gamma = x;
            cp.frame = eigenframe(w.jacobian(x), fr_prev);
            cp.tau = cp.frame.tau;
            Vec2 tt = level_tangent(w, x, cp.frame.r1);
            if (dot(tt, t_prev) < 0.0) tt = -tt;
            cp.r2_star = tt;
            t_prev = tt;
            fr_prev = cp.frame;
        }
    };
    march(+1);
    march(-1);

    for (ChartPoint& cp : chart.nodes_)
        cp.dtau_dxi = dtau_along(w, cp.gamma, cp.r2_star, cp.frame.lambda1);

    // local Taylor model of gamma* about each node (arclength flow of the
    // unit tangent field)
    chart.local_.resize(n_xi);
    for (int k = 0; k < n_xi; ++k) {
        const ChartPoint& cp = chart.nodes_[k];
        PlaneJet pj = w.jet(cp.gamma, kLocalOrder + 3);
        SeriesEigen se = series_eigen(pj.w1.derivative_u(), pj.w1.derivative_v(),
                                      pj.w2.derivative_u(), pj.w2.derivative_v(), cp.frame.r1);
        Series2 g = se.lambda1.derivative_u() * se.r1x + se.lambda1.derivative_v() * se.r1y;
        const Series2 gu = g.derivative_u(), gv = g.derivative_v();
        const Series2 nrm = sqrt(gu * gu + gv * gv);
        Series2 tx = -gv / nrm, ty = gu / nrm;
        if (dot({tx.coeff(0, 0), ty.coeff(0, 0)}, cp.r2_star) < 0.0) {
            tx = -tx;
            ty = -ty;
        }
        Series1 dx(kLocalOrder), dy(kLocalOrder);
        for (int it = 0; it < kLocalOrder; ++it) {
            Series1 fx = compose(tx, dx, dy);
            Series1 fy = compose(ty, dx, dy);
            dx = fx.antiderivative().truncated(kLocalOrder);
            dy = fy.antiderivative().truncated(kLocalOrder);
        }
        CuspChart::CurveLocal cl;
        cl.gx = dx + cp.gamma.x;
        cl.gy = dy + cp.gamma.y;
        chart.local_[k] = cl;
    }

    // straight-flow detection: the center frame direction r stays an exact
    // eigendirection of Dw near three probes, read off the quadratic form
    // cross(r, Dw r) as a jet. Polynomial in the field jets, so no eigenvalue
    // square roots or divisions pollute the high orders.
    chart.straight_flow_ = true;
    const Vec2 r = chart.nodes_[center].frame.r1;
    for (int k : {0, center, n_xi - 1}) {
        PlaneJet pj = w.jet(chart.nodes_[k].gamma, 21);
        Series2 q = pj.w2.derivative_u() * (r.x * r.x) +
                    (pj.w2.derivative_v() - pj.w1.derivative_u()) * (r.x * r.y) -
                    pj.w1.derivative_v() * (r.y * r.y);
        double dev = 0.0;
        for (int n = 0; n <= 20; ++n) dev += q.max_abs_at_order(n);
        if (dev > 1e-12) {
            chart.straight_flow_ = false;
            break;
        }
    }
    return chart;
}

void taylor_along_flow(CuspChart& chart) {
    if (chart.nodes_.empty()) throw error("chart geometry not built");
    for (ChartPoint& cp : chart.nodes_) extract_taylor(chart.w_, cp, chart.straight_flow_);
    const int center = (static_cast<int>(chart.nodes_.size()) - 1) / 2;
    for (std::size_t k = 0; k < chart.nodes_.size(); ++k) {
        if (chart.nodes_[k].omega1 > chart.nodes_[center].omega1 + 1e-14)
            throw hypothesis_violation(
                "omega1 not maximal at the singular point: omega1(" +
                num_str(chart.nodes_[k].xi) + ") exceeds the center value");
    }
    chart.taylor_ready_ = true;
}

CuspChart build_cusp_chart(const AnalyticPlaneField& w, const AnalyticScalarField& rho_bar,
                           const GenericSingularity& sing, double xi_range, int n_xi) {
    CuspChart chart = build_gamma_star(w, rho_bar, sing, xi_range, n_xi);
    taylor_along_flow(chart);
    return chart;
}

// ------------------------------------------------------------------ flow map

Vec2 flow_coordinates(const CuspChart& chart, double xi, double sigma) {
    const CuspChart::Geometry geo = chart.geometry_at(xi);
    if (sigma == 0.0) return geo.gamma;
    const AnalyticPlaneField& w = chart.field();
    Vec2 ref = geo.frame.r1;
    OdeRhs rhs = [&w, &ref](double, const std::vector<double>& yv, std::vector<double>& dy) {
        const EigenFrame fr = eigenframe(w.jacobian({yv[0], yv[1]}));
        Vec2 r = fr.r1;
        const double al = dot(r, ref);
        if (std::abs(al) < 0.2)
            throw numeric_failure("eigenframe rotated too far along the flow", al);
        if (al < 0.0) r = -r;
        ref = r;
        dy[0] = r.x;
        dy[1] = r.y;
    };
    OdeControls ctl;
    ctl.rel_tol = 1e-12;
    ctl.abs_tol = 1e-14;
    const std::vector<double> out =
        ode_integrate(rhs, 0.0, {geo.gamma.x, geo.gamma.y}, sigma, ctl);
    return {out[0], out[1]};
}

ChartMapDerivs chart_map(const CuspChart& chart, double xi, double sigma) {
    const CuspChart::Geometry geo = chart.geometry_at(xi);
    const FlowJet fj = make_flow_jet(chart.field(), geo, chart.straight_flow(), kMapOrder, 2);
    const FlowEval fe = flow_eval(fj, 0.0, sigma);
    ChartMapDerivs md;
    md.x = fe.x;
    md.x_xi = fe.x_xi;
    md.x_sigma = fe.x_sigma;
    md.x_xixi = {fj.j2x.eval(sigma), fj.j2y.eval(sigma)};
    md.x_xisigma = {fj.j1x.derivative().eval(sigma), fj.j1y.derivative().eval(sigma)};
    md.x_sigmasigma = {fj.x.derivative().derivative().eval(sigma),
                       fj.y.derivative().derivative().eval(sigma)};
    return md;
}

// -------------------------------------------------------------- companion Z

namespace {

struct BaseEval {
    const AnalyticPlaneField* w = nullptr;
    const FlowJet* fj = nullptr;
    double t = 0.0;
    double sigma = 0.0;
    double norm = 0.0;   // 6 / (t omega3)
    double shift = 0.0;  // xi - (jet center); deltas below stay relative to xi
    Vec2 y;
    Vec2 r1, r1p;
};

double phi_solve(const BaseEval& be, double z, double delta_init) {
    double delta = delta_init;
    double f2 = 0.0;
    for (int it = 0; it < 25; ++it) {
        const FlowEval fe = flow_eval(*be.fj, be.shift + delta, z);
        const Vec2 u = fe.x;
        f2 = dot(be.r1p, u + be.t * be.w->value(u) - be.y);
        if (std::abs(f2) <= 1e-13) return delta;
        const Mat2 a = Mat2::identity() + be.t * be.w->jacobian(u);
        const double df2 = dot(be.r1p, a * fe.x_xi);
        if (!std::isfinite(df2) || std::abs(df2) < 1e-10)
            throw numeric_failure("companion chart shift: singular Phi2 derivative", df2);
        delta -= f2 / df2;
        if (std::abs(delta) > 2e-3)
            throw numeric_failure("companion chart shift diverged to " + num_str(delta), delta);
    }
    throw numeric_failure("companion chart shift stalled (Phi2 Newton), residual " +
                              num_str(f2),
                          f2);
}

struct FOut {
    double f = 0.0, df = 0.0, delta = 0.0;
    Vec2 x;
};

FOut eval_f(const BaseEval& be, double z, double delta_warm) {
    FOut o;
    o.delta = phi_solve(be, z, delta_warm);
    const FlowEval fe = flow_eval(*be.fj, be.shift + o.delta, z);
    o.x = fe.x;
    const Mat2 a = Mat2::identity() + be.t * be.w->jacobian(o.x);
    const double phi1 = dot(be.r1, o.x + be.t * be.w->value(o.x) - be.y);
    const double dz = z - be.sigma;
    o.f = phi1 / dz * be.norm;
    const double f2z = dot(be.r1p, a * fe.x_sigma);
    const double f2d = dot(be.r1p, a * fe.x_xi);
    const Vec2 dxdz = fe.x_sigma + fe.x_xi * (-f2z / f2d);
    const double dphi1 = dot(be.r1, a * dxdz);
    o.df = (dphi1 - phi1 / dz) / dz * be.norm;
    return o;
}

struct RootSol {
    double z = 0.0;
    FOut best;
    double seed_df = 0.0;
};

RootSol solve_root(const BaseEval& be, double z0) {
    double z = z0;
    FOut cur = eval_f(be, z, 0.0);
    RootSol sol{z, cur, cur.df};
    const double guard = 0.2 * std::abs(z0 - be.sigma);
    for (int it = 0; it < 40 && std::abs(cur.f) > 5e-14; ++it) {
        const double step = -cur.f / cur.df;
        double lam = 1.0;
        bool improved = false;
        for (int half = 0; half < 10; ++half, lam *= 0.5) {
            const double zn = z + lam * step;
            if (std::abs(zn - be.sigma) < guard) continue;
            const FOut nxt = eval_f(be, zn, cur.delta);
            if (std::abs(nxt.f) < std::abs(cur.f)) {
                z = zn;
                cur = nxt;
                improved = true;
                break;
            }
        }
        if (!improved) break;
        if (std::abs(cur.f) < std::abs(sol.best.f)) {
            sol.z = z;
            sol.best = cur;
        }
    }
    if (std::abs(sol.best.f) >= 1e-12)
        throw numeric_failure("companion root residual " + num_str(std::abs(sol.best.f)) +
                                  " above tolerance",
                              sol.best.f);
    return sol;
}

struct CompanionSeeds {
    double d = 0.0, sigma = 0.0;
    double z0p = 0.0, z0m = 0.0;
};

CompanionSeeds companion_seeds(const ChartPoint& cp, double t, double sigma_tilde) {
    CompanionSeeds s;
    s.d = t - cp.tau;
    if (!(s.d > 0.0) || s.d > 0.12 / cp.omega1)
        throw error("t - tau(xi) = " + num_str(s.d) + " outside the cusp window");
    if (std::abs(sigma_tilde) > 4.0)
        throw error("sigma_tilde = " + num_str(sigma_tilde) + " outside the chart domain");

    s.sigma = sigma_tilde * s.d;
    const double c2 = sigma_tilde + cp.c2_const;
    const double s32 = std::pow(cp.c1 * s.d, 1.5);
    const double rad_p = (s.d * c2) * (s.d * c2) + 4.0 * cp.c1 * s.d - 4.0 * cp.c3 * s32;
    const double rad_m = (s.d * c2) * (s.d * c2) + 4.0 * cp.c1 * s.d + 4.0 * cp.c3 * s32;
    if (rad_p <= 0.0 || rad_m <= 0.0)
        throw numeric_failure("companion seed radicand nonpositive", std::min(rad_p, rad_m));
    s.z0p = -0.5 * s.d * c2 + 0.5 * std::sqrt(rad_p);
    s.z0m = -0.5 * s.d * c2 - 0.5 * std::sqrt(rad_m);
    return s;
}

CompanionRoots2D companion_with_jet(const CuspChart& chart, const ChartPoint& cp,
                                    const FlowJet& fj, double shift, double t, double xi,
                                    double sigma_tilde) {
    const CompanionSeeds sd = companion_seeds(cp, t, sigma_tilde);
    const double d = sd.d;
    const double sigma = sd.sigma;
    const double z0p = sd.z0p;
    const double z0m = sd.z0m;
    if (!chart.straight_flow() &&
        std::max(std::abs(z0p), std::abs(z0m)) + std::abs(sigma) + std::abs(shift) > kFlowTube)
        throw numeric_failure("companion roots outside the flow series tube", z0p);

    BaseEval be;
    be.w = &chart.field();
    be.fj = &fj;
    be.t = t;
    be.sigma = sigma;
    be.norm = 6.0 / (t * cp.omega3);
    be.shift = shift;
    be.r1 = cp.frame.r1;
    be.r1p = be.r1.perp();
    const FlowEval fe0 = flow_eval(fj, shift, sigma);
    be.y = fe0.x + t * be.w->value(fe0.x);

    const RootSol rm = solve_root(be, z0m);
    const RootSol rp = solve_root(be, z0p);

    CompanionRoots2D out;
    out.t = t;
    out.xi = xi;
    out.sigma_tilde = sigma_tilde;
    out.z_minus = rm.z;
    out.z_plus = rp.z;
    out.phi_minus = xi + rm.best.delta;
    out.phi_plus = xi + rp.best.delta;
    out.x_minus = rm.best.x;
    out.x_plus = rp.best.x;
    out.seed_minus = z0m;
    out.seed_plus = z0p;
    out.residual_minus = std::abs(rm.best.f);
    out.residual_plus = std::abs(rp.best.f);
    out.beta0 = (rp.z + rm.z) / (2.0 * d);
    out.beta1 = (rp.z - rm.z) / (2.0 * std::sqrt(d));
    out.min_dfdz = std::min(std::abs(rm.seed_df), std::abs(rp.seed_df));
    out.kantorovich_ok = out.min_dfdz >= std::sqrt(cp.c1 * d);
    return out;
}

GasState2D gas_from_roots(const CuspChart& chart, const ChartPoint& cp,
                          CompanionRoots2D roots, double t) {
    const double d = t - cp.tau;
    GasState2D gs;
    gs.roots = roots;
    const AnalyticPlaneField& w = chart.field();
    gs.v_minus = w.value(gs.roots.x_minus);
    gs.v_plus = w.value(gs.roots.x_plus);
    gs.rho_minus = smooth_density(w, chart.density(), t, gs.roots.x_minus).rho;
    gs.rho_plus = smooth_density(w, chart.density(), t, gs.roots.x_plus).rho;

    const double sq = std::sqrt(d);
    gs.B2 = (gs.v_plus - gs.v_minus) / (2.0 * sq);
    gs.B1_hat = (gs.v_plus + gs.v_minus) * 0.5 - w.value(cp.gamma);
    gs.b1 = d * (gs.rho_plus + gs.rho_minus) * 0.5;
    gs.b2 = sq * (gs.rho_plus - gs.rho_minus) * 0.5;
    return gs;
}

constexpr double kPatchReach = 0.03;

} // namespace

CompanionRoots2D companion_roots_2d(const CuspChart& chart, double t, double xi,
                                    double sigma_tilde) {
    const ChartPoint cp = chart.at(xi);
    companion_seeds(cp, t, sigma_tilde);
    const CuspChart::Geometry geo = chart.geometry_at(xi);
    const FlowJet fj =
        make_flow_jet(chart.field(), geo, chart.straight_flow(), kSolverOrder, 4);
    return companion_with_jet(chart, cp, fj, 0.0, t, xi, sigma_tilde);
}

GasState2D gas_state(const CuspChart& chart, double t, double xi, double sigma) {
    const ChartPoint cp = chart.at(xi);
    const double d = t - cp.tau;
    if (!(d > 0.0)) throw error("t = " + num_str(t) + " not past the fold time of xi");
    return gas_from_roots(chart, cp, companion_roots_2d(chart, t, xi, sigma / d), t);
}

// -------------------------------------------------------------------- patches

struct FlowPatch::Impl {
    CuspChart::Geometry geo;
    FlowJet fj;
};

FlowPatch::FlowPatch(const CuspChart& chart, double xi_center)
    : chart_(&chart), xi0_(xi_center), impl_(std::make_unique<Impl>()) {
    if (!chart.taylor_ready()) throw error("chart Taylor data not built (run taylor_along_flow)");
    impl_->geo = chart.geometry_at(xi_center);
    impl_->fj =
        make_flow_jet(chart.field(), impl_->geo, chart.straight_flow(), kSolverOrder, 4);
}

FlowPatch::FlowPatch(FlowPatch&&) noexcept = default;
FlowPatch& FlowPatch::operator=(FlowPatch&&) noexcept = default;
FlowPatch::~FlowPatch() = default;

double FlowPatch::reach() { return kPatchReach; }

CompanionRoots2D FlowPatch::companion(double t, double xi, double sigma_tilde) const {
    const double shift = xi - xi0_;
    if (std::abs(shift) > kPatchReach)
        throw error("xi = " + num_str(xi) + " beyond the patch reach about " + num_str(xi0_));
    const ChartPoint cp = chart_->at(xi);
    return companion_with_jet(*chart_, cp, impl_->fj, shift, t, xi, sigma_tilde);
}

GasState2D FlowPatch::gas(double t, double xi, double sigma) const {
    const ChartPoint cp = chart_->at(xi);
    const double d = t - cp.tau;
    if (!(d > 0.0)) throw error("t = " + num_str(t) + " not past the fold time of xi");
    return gas_from_roots(*chart_, cp, companion(t, xi, sigma / d), t);
}

ChartMapDerivs FlowPatch::map(double xi, double sigma) const {
    const double delta = xi - xi0_;
    if (std::abs(delta) > kPatchReach)
        throw error("xi = " + num_str(xi) + " beyond the patch reach about " + num_str(xi0_));
    const FlowJet& fj = impl_->fj;
    const FlowEval fe = flow_eval(fj, delta, sigma);
    // Taylor weights of the xi-variations: x(delta, sigma) = disp + sum j_k delta^k / k!
    const double w1 = delta;
    const double w2 = 0.5 * delta * delta;
    const double w3 = w2 * delta / 3.0;
    const double w4 = w3 * delta / 4.0;
    auto dd = [&](const Series1& s) { return s.derivative(); };
    auto ev = [&](const Series1& s) { return s.eval(sigma); };
    ChartMapDerivs md;
    md.x = fe.x;
    md.x_xi = fe.x_xi;
    md.x_sigma = fe.x_sigma;
    md.x_xixi = {ev(fj.j2x) + ev(fj.j3x) * w1 + ev(fj.j4x) * w2,
                 ev(fj.j2y) + ev(fj.j3y) * w1 + ev(fj.j4y) * w2};
    md.x_xisigma = {ev(dd(fj.j1x)) + ev(dd(fj.j2x)) * w1 + ev(dd(fj.j3x)) * w2 +
                        ev(dd(fj.j4x)) * w3,
                    ev(dd(fj.j1y)) + ev(dd(fj.j2y)) * w1 + ev(dd(fj.j3y)) * w2 +
                        ev(dd(fj.j4y)) * w3};
    md.x_sigmasigma = {ev(dd(dd(fj.x))) + ev(dd(dd(fj.j1x))) * w1 + ev(dd(dd(fj.j2x))) * w2 +
                           ev(dd(dd(fj.j3x))) * w3 + ev(dd(dd(fj.j4x))) * w4,
                       ev(dd(dd(fj.y))) + ev(dd(dd(fj.j1y))) * w1 + ev(dd(dd(fj.j2y))) * w2 +
                           ev(dd(dd(fj.j3y))) * w3 + ev(dd(dd(fj.j4y))) * w4};
    return md;
}

} // namespace cuspflow
