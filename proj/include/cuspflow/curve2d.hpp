#pragma once

#include <array>
#include <vector>

#include "cuspflow/cusp2d.hpp"

namespace cuspflow {

// Evolution of the singular curve born at the cusp point, written in the
// rescaled variables
//   eta_hat = eta / sqrt(T),  sigma_hat = sigma / T,  xi_hat = (xi - zeta) / T,
//   S = sigma_t,              Z = xi_t,               T = t - tau(zeta).
// The curve is tracked per label zeta on a symmetric grid; each label runs on
// its own clock T, so all labels start together at T = T_start. The evolution
// equations are assembled from exact two-sheet gas states, never from their
// small-T expansions.

// Startup drift S0(zeta) and the affine diagnostic of the equation it solves:
// F1 extrapolated to T = 0 is affine in the trial drift with slope -15/4.
struct DriftResult {
    double s0 = 0.0;
    double slope = 0.0;
    bool converged = false;
};

// Linearization of the rescaled system about the startup state at T = 0,
// rows ordered (eta_hat, sigma_hat, xi_hat, S, Z). Structural entries are
// exact; the remaining ones are centered differences extrapolated to T = 0.
struct BriotBouquetData {
    std::array<std::array<double, 5>, 5> matrix{};
    std::array<double, 5> eigenvalues{};  // ascending real parts
    double dF1_dS = 0.0;                  // expected -3
    double dF1_dsigma_hat = 0.0;          // cross coupling, expected -3/4 (diagnostic)
    double fuchs_deviation = 0.0;         // max |d Phi / d u_zeta| at T -> 0
    double spectrum_deviation = 0.0;      // distance to {-3, -1, -1, -1/2, 0}
};

// Startup data on the zeta grid.
struct CurveInitData {
    std::vector<double> zeta;
    std::vector<double> rho0;         // eta_hat at T = 0, positive
    std::vector<double> s0;           // startup drift
    std::vector<double> z0;           // identically zero
    std::vector<double> drift_slope;  // affine slope diagnostic, about -15/4
    std::vector<double> g2_residual;  // |G2| at the startup state, T -> 0
    std::vector<BriotBouquetData> structure;
};

struct CurveGridControls {
    int n_zeta = 25;        // odd, at least 9
    double zeta_max = 0.0;  // <= 0: sized so tau(zeta_max) - t0 >= 4 T_end
    double T_start = 1e-4;
    int n_store = 49;       // stored levels, uniform in log T
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
};

// One stored time level: per-node arrays of the rescaled variables.
struct CurveState {
    double T = 0.0;
    std::vector<double> eta_hat, sigma_hat, xi_hat, S, Z;
};

struct CurveSolution {
    std::vector<double> zeta;
    CurveInitData init;
    std::vector<CurveState> states;  // increasing T, first level at T_start
    CurveGridControls controls;
    double T_end = 0.0;
};

// One point of the reconstructed physical curve at a fixed time t.
struct PhysicalCurveSample {
    double t = 0.0;
    double zeta = 0.0;
    double T = 0.0;  // t - tau(zeta)
    Vec2 x;          // flow-coordinate point of the curve label
    Vec2 y;          // curve point x + t w(x)
    Vec2 v;          // curve velocity y_t
    double eta = 0.0;
    double y_consistency = 0.0;  // |y| gap between the ODE and series routes
    bool admissible = true;      // normal velocity between the sheet values
};

// Mass/momentum balance residuals at one stored level and node.
struct BalanceResidual {
    double T = 0.0;
    double zeta = 0.0;
    double mass = 0.0;       // eta_t equation residual
    double momentum = 0.0;   // y_tt equation residual, euclidean norm
    double vt_r1_dev = 0.0;  // |sin| of the angle between v_t and r1
};

// eta_hat at T = 0: -4 b1 sqrt(c1) cross(r1, (lambda1 I - Dw) r2*), positive.
// A nonpositive value triggers one deterministic r2* re-orientation, then a
// hard error.
double initial_density(const CuspChart& chart, double zeta);

// Startup drift from the F1 -> 0 condition: two trial drifts, a dyadic ladder
// of T values extrapolated to zero, then the affine solve.
DriftResult initial_drift(const CuspChart& chart, double zeta);

// Structure matrix and spectrum at one label; throws when the spectrum
// deviates from {-3, -1, -1, -1/2, 0} by more than 1e-3 or comes within 1e-3
// of a positive integer.
BriotBouquetData briot_bouquet_matrix(const CuspChart& chart, double zeta);

// Symmetric zeta grid; zeta_max <= 0 selects the window from the fold-time
// margin rule tau(zeta_max) - t0 >= 4 T_end.
std::vector<double> curve_grid(const CuspChart& chart, const CurveGridControls& ctl,
                               double T_end);

CurveInitData build_curve_init(const CuspChart& chart, const std::vector<double>& zeta_grid);

// Method-of-lines evolution in s = log T from T_start to T_end with the
// startup state (rho0, S0, 0, S0, 0) per node. Fourth-order zeta stencils,
// one-sided at the window edges; adaptive embedded stepping between stored
// levels. Aborts when eta_hat stops being positive.
CurveSolution integrate_curve(const CuspChart& chart, const CurveInitData& init, double T_end,
                              const CurveGridControls& ctl);

// curve_grid + build_curve_init + integrate_curve in one call.
CurveSolution run_curve(const CuspChart& chart, double T_end, const CurveGridControls& ctl);

// Curve snapshot at a fixed physical time: monotone cubic interpolation of
// the stored levels in log T, then unrescaling and the flow map.
std::vector<PhysicalCurveSample> physical_curve(const CurveSolution& sol, const CuspChart& chart,
                                                double t);

// Residuals of the mass and momentum balance laws over the interior stored
// levels, with time derivatives from centered differences of the stored
// states and the two-sheet data from exact gas states.
std::vector<BalanceResidual> balance_residuals(const CurveSolution& sol, const CuspChart& chart);

} // namespace cuspflow
