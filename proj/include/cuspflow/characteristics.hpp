#pragma once

#include <vector>

#include "cuspflow/fields.hpp"

namespace cuspflow {

// Sheet tag of a characteristic pullback: middle <=> tau(x) < t; the extreme
// preimages keep tau(x) > t. "single" marks the unique root outside the cusp.
enum class Sheet { lower, middle, upper, single };
const char* to_string(Sheet s);

struct CharacteristicPoint {
    Vec2 x;
    double t = 0.0;
    Vec2 y;
    double det_factor = 1.0; // det(I + t Dw(x)) = (1 + t lambda1)(1 + t lambda2)
    Sheet sheet = Sheet::single;
};

struct DensitySample {
    double rho = 0.0;
    Sheet sheet = Sheet::single;
};

struct PreimageWindow {
    Vec2 lo, hi;
};

struct PreimageResult {
    std::vector<CharacteristicPoint> roots; // sorted lexicographically by (x1, x2)
    bool fold_boundary = false; // some pair of roots closer than 1e-6
};

CharacteristicPoint push_forward(const AnalyticPlaneField& w, double t, Vec2 x);

DensitySample smooth_density(const AnalyticPlaneField& w,
                             const AnalyticScalarField& rho_bar, double t, Vec2 x);

// Multi-start damped Newton on x + t w(x) = y over the window; roots satisfy
// |x + t w(x) - y| < 1e-12 and are deduplicated at 1e-9.
PreimageResult preimages(const AnalyticPlaneField& w, double t, Vec2 y,
                         const PreimageWindow& window);

} // namespace cuspflow
