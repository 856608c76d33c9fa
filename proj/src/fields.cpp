#include "cuspflow/fields.hpp"

#include <cmath>
#include <sstream>

#include "cuspflow/errors.hpp"

namespace cuspflow {
namespace {

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

std::string point_str(Vec2 x) {
    std::ostringstream os;
    os << "(" << x.x << ", " << x.y << ")";
    return os.str();
}

double sign_for(Vec2 v) {
    const double lead = std::abs(v.x) > 1e-13 ? v.x : v.y;
    return lead < 0.0 ? -1.0 : 1.0;
}

} // namespace

AnalyticScalarField AnalyticScalarField::parse(const std::string& expression,
                                               int jet_order) {
    AnalyticScalarField f;
    f.expr_ = parse_expression(expression);
    f.source_ = expression;
    f.jet_order_ = jet_order;
    return f;
}

double AnalyticScalarField::value(Vec2 x) const {
    return eval<double>(*expr_, x.x, x.y);
}

Vec2 AnalyticScalarField::gradient(Vec2 x) const {
    Series2 j = jet(x, 1);
    return {j.coeff(1, 0), j.coeff(0, 1)};
}

Series2 AnalyticScalarField::jet(Vec2 x, int order) const {
    if (order > jet_order_)
        throw error("jet order " + std::to_string(order) + " exceeds supported order " +
                    std::to_string(jet_order_));
    return eval<Series2>(*expr_, Series2::var_u(order, x.x), Series2::var_v(order, x.y));
}

Ten3 PlaneJet::second() const {
    auto hess = [](const Series2& s) {
        return Mat2{2.0 * s.coeff(2, 0), s.coeff(1, 1), s.coeff(1, 1), 2.0 * s.coeff(0, 2)};
    };
    return Ten3{{hess(w1), hess(w2)}};
}

double PlaneJet::deriv(int comp, int i, int j) const {
    const Series2& s = comp == 0 ? w1 : w2;
    return s.coeff(i, j) * factorial(i) * factorial(j);
}

AnalyticPlaneField::AnalyticPlaneField(AnalyticScalarField c1, AnalyticScalarField c2,
                                       DomainBall ball)
    : c1_(std::move(c1)), c2_(std::move(c2)), ball_(ball) {}

AnalyticPlaneField AnalyticPlaneField::parse(const std::string& e1, const std::string& e2,
                                             DomainBall ball, int jet_order) {
    return AnalyticPlaneField(AnalyticScalarField::parse(e1, jet_order),
                              AnalyticScalarField::parse(e2, jet_order), ball);
}

Vec2 AnalyticPlaneField::value(Vec2 x) const {
    return {c1_.value(x), c2_.value(x)};
}

Mat2 AnalyticPlaneField::jacobian(Vec2 x) const {
    Vec2 g1 = c1_.gradient(x), g2 = c2_.gradient(x);
    return {g1.x, g1.y, g2.x, g2.y};
}

PlaneJet AnalyticPlaneField::jet(Vec2 x, int order) const {
    if (!ball_.contains(x))
        throw error("point " + point_str(x) + " outside the working ball");
    return {c1_.jet(x, order), c2_.jet(x, order)};
}

int AnalyticPlaneField::jet_order() const {
    return std::min(c1_.jet_order(), c2_.jet_order());
}

EigenFrame eigenframe(const Mat2& A) {
    const double disc = (A.a - A.d) * (A.a - A.d) + 4.0 * A.b * A.c;
    if (disc <= 0.0)
        throw hypothesis_violation(
            "velocity Jacobian has complex or repeated eigenvalues (discriminant " +
            std::to_string(disc) + ")");
    const double s = std::sqrt(disc);
    EigenFrame fr;
    fr.lambda1 = 0.5 * (A.trace() - s);
    fr.lambda2 = 0.5 * (A.trace() + s);

    auto right_vec = [&](double lam) {
        Vec2 u1{A.b, lam - A.a};
        Vec2 u2{lam - A.d, A.c};
        Vec2 u = u1.norm() >= u2.norm() ? u1 : u2;
        return u / u.norm();
    };
    fr.r1 = right_vec(fr.lambda1);
    fr.r2 = right_vec(fr.lambda2);
    fr.r1 *= sign_for(fr.r1);
    fr.r2 *= sign_for(fr.r2);

    // dual basis: l1 exactly orthogonal to r2 and vice versa
    fr.l1 = fr.r2.perp() / dot(fr.r2.perp(), fr.r1);
    fr.l2 = fr.r1.perp() / dot(fr.r1.perp(), fr.r2);
    fr.tau = -1.0 / fr.lambda1;
    return fr;
}

EigenFrame eigenframe(const Mat2& A, const EigenFrame& prev) {
    EigenFrame fr = eigenframe(A);
    if (dot(fr.r1, prev.r1) < 0.0) fr.r1 = -fr.r1;
    if (dot(fr.r2, prev.r2) < 0.0) fr.r2 = -fr.r2;
    fr.l1 = fr.r2.perp() / dot(fr.r2.perp(), fr.r1);
    fr.l2 = fr.r1.perp() / dot(fr.r1.perp(), fr.r2);
    return fr;
}

EigenFrame eigenframe(const AnalyticPlaneField& w, Vec2 x) {
    try {
        return eigenframe(w.jacobian(x));
    } catch (const hypothesis_violation& e) {
        throw hypothesis_violation(std::string(e.what()) + " at " + point_str(x));
    }
}

SeriesEigen series_eigen(const Series2& a, const Series2& b, const Series2& c,
                         const Series2& d, Vec2 ref) {
    const Series2 tr = a + d;
    const Series2 disc = (a - d) * (a - d) + 4.0 * (b * c);
    if (disc.coeff(0, 0) <= 0.0)
        throw hypothesis_violation("series eigenframe: nonpositive discriminant " +
                                   std::to_string(disc.coeff(0, 0)));
    const Series2 s = sqrt(disc);
    SeriesEigen out;
    out.lambda1 = (tr - s) * 0.5;
    out.lambda2 = (tr + s) * 0.5;

    Series2 u1x = b, u1y = out.lambda1 - a;
    Series2 u2x = out.lambda1 - d, u2y = c;
    const double n1 = std::hypot(u1x.coeff(0, 0), u1y.coeff(0, 0));
    const double n2 = std::hypot(u2x.coeff(0, 0), u2y.coeff(0, 0));
    Series2 ux = n1 >= n2 ? u1x : u2x;
    Series2 uy = n1 >= n2 ? u1y : u2y;
    if (std::max(n1, n2) < 1e-13)
        throw hypothesis_violation("series eigenframe: eigenvector candidates degenerate");

    const Series2 nrm = sqrt(ux * ux + uy * uy);
    out.r1x = ux / nrm;
    out.r1y = uy / nrm;

    Vec2 head{out.r1x.coeff(0, 0), out.r1y.coeff(0, 0)};
    const double sgn =
        (ref.norm() > 0.0) ? (dot(head, ref) < 0.0 ? -1.0 : 1.0) : sign_for(head);
    if (sgn < 0.0) {
        out.r1x = -out.r1x;
        out.r1y = -out.r1y;
    }
    return out;
}

Series2 lambda1_jet(const AnalyticPlaneField& w, Vec2 x, int order) {
    PlaneJet pj = w.jet(x, order + 1);
    return series_eigen(pj.w1.derivative_u(), pj.w1.derivative_v(), pj.w2.derivative_u(),
                        pj.w2.derivative_v())
        .lambda1;
}

GenericSingularity find_generic_singularity(const AnalyticPlaneField& w, Vec2 seed,
                                            int max_iter) {
    Vec2 x = seed;
    auto grad_of = [&](Vec2 p) {
        Series2 lj = lambda1_jet(w, p, 1);
        return Vec2{lj.coeff(1, 0), lj.coeff(0, 1)};
    };

    double gn = grad_of(x).norm();
    for (int it = 0; it < max_iter && gn >= 1e-12; ++it) {
        Series2 lj = lambda1_jet(w, x, 2);
        Vec2 g{lj.coeff(1, 0), lj.coeff(0, 1)};
        Mat2 H{2.0 * lj.coeff(2, 0), lj.coeff(1, 1), lj.coeff(1, 1), 2.0 * lj.coeff(0, 2)};
        if (std::abs(H.det()) < 1e-300)
            throw hypothesis_violation("lambda1 has a degenerate Hessian near " +
                                       point_str(x));
        Vec2 step = H.solve(-1.0 * g);
        double scale = 1.0;
        for (int back = 0; back < 40; ++back) {
            Vec2 trial = x + step * scale;
            if (!w.ball().contains(trial) || grad_of(trial).norm() > gn) {
                scale *= 0.5;
                continue;
            }
            x = trial;
            break;
        }
        gn = grad_of(x).norm();
    }
    if (gn >= 1e-10)
        throw numeric_failure("no convergence locating the lambda1 minimum", gn);

    Series2 lj = lambda1_jet(w, x, 2);
    GenericSingularity gs;
    gs.x0 = x;
    gs.lambda1 = lj.coeff(0, 0);
    Vec2 g{lj.coeff(1, 0), lj.coeff(0, 1)};
    gs.hessian_lambda1 =
        Mat2{2.0 * lj.coeff(2, 0), lj.coeff(1, 1), lj.coeff(1, 1), 2.0 * lj.coeff(0, 2)};
    if (gs.hessian_lambda1.det() <= 0.0 || gs.hessian_lambda1.trace() <= 0.0)
        throw hypothesis_violation("critical point of lambda1 at " + point_str(x) +
                                   " is not a strict minimum");
    if (gs.lambda1 >= 0.0)
        throw hypothesis_violation("lambda1 = " + std::to_string(gs.lambda1) + " at " +
                                   point_str(x) + " is not negative");
    gs.t0 = -1.0 / gs.lambda1;
    const double l1 = gs.lambda1;
    gs.hessian_tau = gs.hessian_lambda1 * (1.0 / (l1 * l1)) -
                     outer(g, g) * (2.0 / (l1 * l1 * l1));
    return gs;
}

HypothesisReport check_hypotheses(const AnalyticPlaneField& w,
                                  const AnalyticScalarField& rho_bar, int n) {
    HypothesisReport rep;
    const DomainBall& ball = w.ball();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Vec2 x = ball.center + Vec2{(2.0 * i / (n - 1) - 1.0) * ball.radius,
                                        (2.0 * j / (n - 1) - 1.0) * ball.radius};
            if ((x - ball.center).norm() > ball.radius) continue;
            ++rep.points_checked;
            Mat2 J = w.jacobian(x);
            const double disc = (J.a - J.d) * (J.a - J.d) + 4.0 * J.b * J.c;
            if (disc <= 0.0) {
                rep.ok = false;
                if (rep.violations.size() < 10)
                    rep.violations.push_back("eigenvalues not real distinct at " +
                                             point_str(x));
            }
            if (rho_bar.value(x) <= 0.0) {
                rep.ok = false;
                if (rep.violations.size() < 10)
                    rep.violations.push_back("density not positive at " + point_str(x));
            }
        }
    }
    return rep;
}

} // namespace cuspflow
