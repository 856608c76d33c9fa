#include "cuspflow/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cuspflow/errors.hpp"

namespace cuspflow {
namespace {

// tau(x) = -1/lambda1(x), +inf when lambda1 >= 0 (no finite blow-up time)
double tau_at(const AnalyticPlaneField& w, Vec2 x) {
    Mat2 J = w.jacobian(x);
    const double disc = (J.a - J.d) * (J.a - J.d) + 4.0 * J.b * J.c;
    if (disc < 0.0)
        throw hypothesis_violation("complex eigenvalues while classifying a pullback");
    const double l1 = 0.5 * (J.trace() - std::sqrt(disc));
    if (l1 >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / l1;
}

} // namespace

const char* to_string(Sheet s) {
    switch (s) {
    case Sheet::lower: return "lower";
    case Sheet::middle: return "middle";
    case Sheet::upper: return "upper";
    case Sheet::single: return "single";
    }
    return "?";
}

CharacteristicPoint push_forward(const AnalyticPlaneField& w, double t, Vec2 x) {
    CharacteristicPoint cp;
    cp.x = x;
    cp.t = t;
    cp.y = x + t * w.value(x);
    cp.det_factor = (Mat2::identity() + w.jacobian(x) * t).det();
    cp.sheet = (tau_at(w, x) < t) ? Sheet::middle : Sheet::single;
    return cp;
}

DensitySample smooth_density(const AnalyticPlaneField& w,
                             const AnalyticScalarField& rho_bar, double t, Vec2 x) {
    CharacteristicPoint cp = push_forward(w, t, x);
    if (std::abs(cp.det_factor) < 1e-13)
        throw numeric_failure("density evaluated on the caustic", cp.det_factor);
    return {rho_bar.value(x) / cp.det_factor, cp.sheet};
}

PreimageResult preimages(const AnalyticPlaneField& w, double t, Vec2 y,
                         const PreimageWindow& window) {
    const Vec2 span = window.hi - window.lo;
    const double margin = 0.1 * std::max(span.x, span.y);

    std::vector<Vec2> seeds;
    const int ns = 6;
    for (int i = 0; i < ns; ++i)
        for (int j = 0; j < ns; ++j)
            seeds.push_back(window.lo + Vec2{span.x * (i + 0.5) / ns,
                                             span.y * (j + 0.5) / ns});
    seeds.push_back(y);

    std::vector<Vec2> roots;
    for (Vec2 x : seeds) {
        double res = (x + t * w.value(x) - y).norm();
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            if (res < 1e-13) {
                ok = true;
                break;
            }
            Vec2 g = x + t * w.value(x) - y;
            Mat2 J = Mat2::identity() + w.jacobian(x) * t;
            if (std::abs(J.det()) < 1e-14) break;
            Vec2 step = J.solve(-1.0 * g);
            double scale = 1.0;
            bool moved = false;
            for (int back = 0; back < 30; ++back) {
                Vec2 trial = x + step * scale;
                double rtrial = (trial + t * w.value(trial) - y).norm();
                if (rtrial < res) {
                    x = trial;
                    res = rtrial;
                    moved = true;
                    break;
                }
                scale *= 0.5;
            }
            if (!moved) break;
        }
        if (!ok && res < 1e-12) ok = true;
        if (!ok) continue;
        if (x.x < window.lo.x - margin || x.x > window.hi.x + margin ||
            x.y < window.lo.y - margin || x.y > window.hi.y + margin)
            continue;
        bool dup = false;
        for (Vec2 r : roots)
            if ((r - x).norm() < 1e-9) {
                dup = true;
                break;
            }
        if (!dup) roots.push_back(x);
    }

    std::sort(roots.begin(), roots.end(), [](Vec2 a, Vec2 b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });

    PreimageResult out;
    for (size_t i = 0; i < roots.size(); ++i)
        for (size_t j = i + 1; j < roots.size(); ++j)
            if ((roots[i] - roots[j]).norm() < 1e-6) out.fold_boundary = true;

    for (Vec2 r : roots) out.roots.push_back(push_forward(w, t, r));

    if (out.roots.size() == 3) {
        int mid = -1, n_mid = 0;
        for (int i = 0; i < 3; ++i)
            if (out.roots[i].sheet == Sheet::middle) {
                mid = i;
                ++n_mid;
            }
        if (n_mid == 1 && mid == 1) {
            out.roots[0].sheet = Sheet::lower;
            out.roots[2].sheet = Sheet::upper;
        } else {
            // degenerate ordering near the fold: tag positionally
            out.fold_boundary = true;
            out.roots[0].sheet = Sheet::lower;
            out.roots[1].sheet = Sheet::middle;
            out.roots[2].sheet = Sheet::upper;
        }
    }
    return out;
}

} // namespace cuspflow
