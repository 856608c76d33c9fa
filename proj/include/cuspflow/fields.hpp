#pragma once

#include <string>
#include <vector>

#include "cuspflow/expr.hpp"
#include "cuspflow/series.hpp"
#include "cuspflow/vec2.hpp"

namespace cuspflow {

struct DomainBall {
    Vec2 center{0.0, 0.0};
    double radius = 1.0;

    bool contains(Vec2 x) const { return (x - center).norm() <= radius * (1.0 + 1e-12); }
};

// Scalar analytic field over the plane with exact truncated-Taylor jets
// (exact on polynomial expressions up to the truncation order).
class AnalyticScalarField {
public:
    AnalyticScalarField() = default;
    static AnalyticScalarField parse(const std::string& expression, int jet_order = 20);

    double value(Vec2 x) const;
    Vec2 gradient(Vec2 x) const;
    // Taylor coefficients about x: coeff(i,j) = d^{i+j}f/dx1^i dx2^j / (i! j!)
    Series2 jet(Vec2 x, int order) const;

    int jet_order() const { return jet_order_; }
    const std::string& source() const { return source_; }

private:
    ExprPtr expr_;
    std::string source_;
    int jet_order_ = 0;
};

// One field evaluation with all derivative data up to the requested order.
// Coefficients are Taylor (divided by factorials); deriv() undoes the scaling.
struct PlaneJet {
    Series2 w1, w2;

    Vec2 value() const { return {w1.coeff(0, 0), w2.coeff(0, 0)}; }
    Mat2 jacobian() const {
        return {w1.coeff(1, 0), w1.coeff(0, 1), w2.coeff(1, 0), w2.coeff(0, 1)};
    }
    Ten3 second() const;
    double deriv(int comp, int i, int j) const;
};

class AnalyticPlaneField {
public:
    AnalyticPlaneField() = default;
    AnalyticPlaneField(AnalyticScalarField c1, AnalyticScalarField c2, DomainBall ball);
    static AnalyticPlaneField parse(const std::string& e1, const std::string& e2,
                                    DomainBall ball, int jet_order = 20);

    Vec2 value(Vec2 x) const;
    Mat2 jacobian(Vec2 x) const;
    PlaneJet jet(Vec2 x, int order) const;

    const DomainBall& ball() const { return ball_; }
    const AnalyticScalarField& component(int i) const { return i == 0 ? c1_ : c2_; }
    int jet_order() const;

private:
    AnalyticScalarField c1_, c2_;
    DomainBall ball_;
};

// Pointwise spectral data of the velocity Jacobian. l1, l2 form the dual
// basis of (r1, r2); tau = -1/lambda1 is the blow-up time (meaningful for
// lambda1 < 0).
struct EigenFrame {
    double lambda1 = 0.0, lambda2 = 0.0;
    Vec2 r1, r2;
    Vec2 l1, l2;
    double tau = 0.0;
};

// Deterministic sign convention: first component of r_i with magnitude above
// 1e-13 made positive. The three-argument form flips signs for continuity
// against a previous frame instead.
EigenFrame eigenframe(const Mat2& A);
EigenFrame eigenframe(const Mat2& A, const EigenFrame& prev);
EigenFrame eigenframe(const AnalyticPlaneField& w, Vec2 x);

// Eigen data of the series matrix [[a,b],[c,d]] in truncated-Taylor
// arithmetic; r1 is unit-normalized, its sign fixed at the constant term by
// the deterministic convention (or by alignment with ref when ref != 0).
struct SeriesEigen {
    Series2 lambda1, lambda2;
    Series2 r1x, r1y;
};
SeriesEigen series_eigen(const Series2& a, const Series2& b, const Series2& c,
                         const Series2& d, Vec2 ref = {0.0, 0.0});

// lambda1 as a jet about x (constant term = lambda1(x)); order derivatives.
Series2 lambda1_jet(const AnalyticPlaneField& w, Vec2 x, int order);

struct GenericSingularity {
    Vec2 x0;
    double t0 = 0.0;
    double lambda1 = 0.0;
    Mat2 hessian_lambda1;
    Mat2 hessian_tau;
};

// Damped Newton on grad(lambda1) = 0 from the seed; rejects non-minima.
GenericSingularity find_generic_singularity(const AnalyticPlaneField& w, Vec2 seed,
                                            int max_iter = 100);

struct HypothesisReport {
    bool ok = true;
    int points_checked = 0;
    std::vector<std::string> violations; // first few described
};

// Samples the working ball on an n x n grid and checks real distinct
// eigenvalues of Dw and strict positivity of rho_bar.
HypothesisReport check_hypotheses(const AnalyticPlaneField& w,
                                  const AnalyticScalarField& rho_bar, int n = 64);

} // namespace cuspflow
