#include "cuspflow/ode.hpp"

namespace cuspflow {
namespace {

constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
constexpr double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
                 E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
                 E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;

} // namespace

std::vector<double> ode_integrate(const OdeRhs& f, double t0, std::vector<double> y0,
                                  double t1, const OdeControls& ctl,
                                  const OdeObserver& observer) {
    const size_t n = y0.size();
    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    if (t1 == t0) {
        if (observer) observer(t0, y0);
        return y0;
    }

    std::vector<double> y = std::move(y0), ynew(n), ytmp(n), err(n);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

    double t = t0;
    double h = ctl.h_init > 0.0 ? ctl.h_init : std::abs(t1 - t0) / 100.0;
    h = std::min(h, std::abs(t1 - t0));

    if (observer) observer(t, y);
    f(t, y, k1);

    long steps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > ctl.max_steps)
            throw numeric_failure("ODE step limit exceeded", std::abs(t1 - t));
        h = std::min(h, std::abs(t1 - t));
        const bool final_step = (h == std::abs(t1 - t));
        const double hs = dir * h;

        for (size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * A21 * k1[i];
        f(t + C2 * hs, ytmp, k2);
        for (size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        f(t + C3 * hs, ytmp, k3);
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        f(t + C4 * hs, ytmp, k4);
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        f(t + C5 * hs, ytmp, k5);
        for (size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] +
                                   A65 * k5[i]);
        f(t + hs, ytmp, k6);
        for (size_t i = 0; i < n; ++i)
            ynew[i] = y[i] +
                      hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        f(t + hs, ynew, k7);

        double err_norm = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] +
                                   E6 * k6[i] + E7 * k7[i]);
            const double sc =
                ctl.abs_tol + ctl.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double q = e / sc;
            err_norm += q * q;
        }
        err_norm = std::sqrt(err_norm / static_cast<double>(n));

        if (err_norm <= 1.0) {
            // land exactly on t1 when the step was clamped to the remaining
            // interval; t += hs can fall an ulp short and strand the driver
            t = final_step ? t1 : t + hs;
            y.swap(ynew);
            k1.swap(k7);
            if (observer) observer(t, y);
        }
        const double fac =
            (err_norm == 0.0) ? 5.0
                              : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        h *= fac;
        if (h < ctl.h_min)
            throw numeric_failure("ODE step size underflow", err_norm);
    }
    return y;
}

} // namespace cuspflow
