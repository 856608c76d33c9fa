#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "cuspflow/errors.hpp"

namespace cuspflow {

using OdeRhs =
    std::function<void(double t, const std::vector<double>& y, std::vector<double>& dy)>;
using OdeObserver = std::function<void(double t, const std::vector<double>& y)>;

struct OdeControls {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double h_init = 0.0; // 0 => |t1-t0|/100
    double h_min = 1e-14;
    long max_steps = 4000000;
};

// Dormand-Prince 5(4) embedded pair with FSAL and standard PI-free step
// control. Integrates y' = f(t,y) from t0 to t1 (either direction); the
// observer fires at t0 and after every accepted step.
std::vector<double> ode_integrate(const OdeRhs& f, double t0, std::vector<double> y0,
                                  double t1, const OdeControls& ctl = {},
                                  const OdeObserver& observer = nullptr);

} // namespace cuspflow
