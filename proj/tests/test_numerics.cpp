#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cuspflow/ode.hpp"
#include "cuspflow/quadrature.hpp"
#include "cuspflow/richardson.hpp"

using namespace cuspflow;

TEST_CASE("quadrature integrates smooth functions to tight tolerance") {
    CHECK(integrate([](double x) { return x * x * x - 2 * x + 1; }, -1.0, 2.0) ==
          doctest::Approx(3.75).epsilon(1e-14));
    CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
    // sharp but integrable feature
    CHECK(integrate([](double x) { return 1.0 / std::sqrt(std::abs(x) + 1e-6); }, 0.0,
                    1.0, 1e-10) ==
          doctest::Approx(2.0 * (std::sqrt(1.0 + 1e-6) - std::sqrt(1e-6)))
              .epsilon(1e-9));
    CHECK(integrate([](double) { return 1.0; }, 2.0, 2.0) == 0.0);
}

TEST_CASE("richardson extrapolation removes power-law error terms") {
    auto model = [](double h) { return 3.5 + 2.0 * h + 0.7 * h * h + 0.1 * h * h * h; };
    std::vector<double> samples;
    for (int k = 0; k < 6; ++k) samples.push_back(model(0.4 * std::pow(0.5, k)));
    auto r = richardson(samples, 0.5, 1.0);
    CHECK(r.value == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(r.converged);

    // sqrt-mesh usage: error series in h^(1/2) sampled on h_k = h0 4^-k
    auto model_sqrt = [](double h) {
        return -1.25 + 0.8 * std::sqrt(h) + 0.3 * h + 0.2 * std::pow(h, 1.5);
    };
    samples.clear();
    for (int k = 0; k < 6; ++k) samples.push_back(model_sqrt(0.1 * std::pow(0.25, k)));
    r = richardson(samples, 0.25, 0.5);
    CHECK(r.value == doctest::Approx(-1.25).epsilon(1e-11));
}

TEST_CASE("aitken accelerates a linearly convergent sequence") {
    std::vector<double> seq;
    for (int k = 0; k < 10; ++k) seq.push_back(2.0 + 3.0 * std::pow(0.6, k));
    auto r = aitken(seq);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("ode integrator hits reference solutions") {
    OdeControls ctl;
    ctl.rel_tol = 1e-11;
    ctl.abs_tol = 1e-13;

    auto decay = [](double, const std::vector<double>& y, std::vector<double>& dy) {
        dy[0] = -y[0];
    };
    auto y = ode_integrate(decay, 0.0, {1.0}, 3.0, ctl);
    CHECK(y[0] == doctest::Approx(std::exp(-3.0)).epsilon(1e-9));

    // circular orbit: x' = -y, y' = x over a full period
    auto rot = [](double, const std::vector<double>& y, std::vector<double>& dy) {
        dy[0] = -y[1];
        dy[1] = y[0];
    };
    y = ode_integrate(rot, 0.0, {1.0, 0.0}, 2.0 * M_PI, ctl);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(y[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));

    // backward in time
    y = ode_integrate(decay, 0.0, {1.0}, -1.0, ctl);
    CHECK(y[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
}

TEST_CASE("ode observer sees monotone accepted times") {
    auto rhs = [](double t, const std::vector<double>&, std::vector<double>& dy) {
        dy[0] = std::cos(t);
    };
    double prev = -1.0;
    int count = 0;
    ode_integrate(rhs, 0.0, {0.0}, 1.5, {},
                  [&](double t, const std::vector<double>&) {
                      CHECK(t > prev);
                      prev = t;
                      ++count;
                  });
    CHECK(prev == 1.5);
    CHECK(count > 2);
}
