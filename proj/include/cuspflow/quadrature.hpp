#pragma once

#include <functional>

namespace cuspflow {

// Adaptive Gauss-Kronrod (7,15) quadrature with interval bisection, driven by
// an absolute tolerance. Throws numeric_failure when the recursion depth is
// exhausted before the tolerance is met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, int max_depth = 48);

} // namespace cuspflow
