#include "cuspflow/curve2d.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cuspflow/errors.hpp"
#include "cuspflow/fields.hpp"
#include "cuspflow/ode.hpp"
#include "cuspflow/richardson.hpp"

namespace cuspflow {
namespace {

constexpr double kLadderT1 = 6e-3;      // top of the dyadic T ladder for T -> 0 limits
constexpr int kLadderDepth = 9;
constexpr double kLadderTol = 1e-5;     // extrapolation error gate
constexpr double kProbeStep = 0.25;     // centered-difference step in the state slots
constexpr double kFuchsStep = 0.5;      // step in the zeta-derivative slots
constexpr double kSpectrumGate = 1e-3;
constexpr double kStartupResidualGate = 1e-8;
constexpr std::array<double, 5> kSpectrumRef = {-3.0, -1.0, -1.0, -0.5, 0.0};

std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// State slots per label: (eta_hat, sigma_hat, xi_hat, S, Z).
using State5 = std::array<double, 5>;
enum Slot { kEtaHat = 0, kSigmaHat = 1, kXiHat = 2, kSlotS = 3, kSlotZ = 4 };

struct NodeCtx {
    double zeta = 0.0;
    double tau = 0.0;
    double dtau = 0.0;
    FlowPatch patch;
};

NodeCtx make_node(const CuspChart& chart, double zeta) {
    const ChartPoint cp = chart.at(zeta);
    return NodeCtx{zeta, cp.tau, cp.dtau_dxi, FlowPatch(chart, zeta)};
}

struct PhiOut {
    State5 phi{};   // (H2, S - sigma_hat, Z - xi_hat, F1, G2)
    double F2 = 0.0;
};

// Balance-law data of the rescaled system at one label. The last two
// arguments are fixed-T grid derivatives of sigma_hat and xi_hat; they enter
// the fixed-t derivatives with a factor T, so the startup limit ignores them.
PhiOut eval_phi(const CuspChart& chart, const NodeCtx& nc, double T, const State5& u,
                double sigma_hat_zeta, double xi_hat_zeta) {
    const double eta_hat = u[kEtaHat];
    const double S = u[kSlotS], Z = u[kSlotZ];
    const double t = nc.tau + T;
    const double xi = nc.zeta + T * u[kXiHat];
    const double sigma = T * u[kSigmaHat];

    const double d_xi = t - chart.geometry_at(xi).tau;
    if (!(d_xi > 0.0))
        throw numeric_failure("curve label left the validity window: t - tau(xi) = " +
                              num(d_xi) + " at zeta = " + num(nc.zeta));

    const GasState2D gs = nc.patch.gas(t, xi, sigma);
    const ChartMapDerivs md = nc.patch.map(xi, sigma);

    const AnalyticPlaneField& w = chart.field();
    const Mat2 Dw = w.jacobian(md.x);
    const Mat2 M = Mat2::identity() + t * Dw;
    const Ten3 D2w = w.jet(md.x, 2).second();

    const double xi_z = 1.0 - nc.dtau * Z + T * xi_hat_zeta;
    const double sg_z = -nc.dtau * S + T * sigma_hat_zeta;

    const Vec2 A0 = md.x_xi * Z + md.x_sigma * S;
    const Vec2 y_t = w.value(md.x) + M * A0;
    const Vec2 y_z = M * (md.x_xi * xi_z + md.x_sigma * sg_z);

    const Vec2 curv =
        md.x_xixi * (Z * Z) + md.x_xisigma * (2.0 * Z * S) + md.x_sigmasigma * (S * S);
    const Vec2 F = -2.0 * (Dw * A0) - t * D2w.apply(A0, A0) - M * curv;

    const Vec2 dp = gs.v_plus - y_t;
    const Vec2 dm = gs.v_minus - y_t;
    const double wp = gs.rho_plus * cross(dp, y_z);
    const double wm = gs.rho_minus * cross(dm, y_z);
    const double Hval = wm - wp;
    const double H2 = std::sqrt(T) * Hval - 0.5 * eta_hat;

    const Vec2 G = wm * dm - wp * dp;
    const Vec2 G0 = std::sqrt(d_xi) * G;

    const double cxs = cross(md.x_xi, md.x_sigma);
    const Vec2 l1s = md.x_xi.perp() / cxs;
    const Vec2 l2s = md.x_sigma.perp() / (-cxs);

    const Vec2 MiF = M.solve(F);
    const Vec2 MiG0 = M.solve(G0);
    const double ramp = std::sqrt(T / d_xi) / eta_hat;
    const double F1 = T * dot(l1s, MiF) + ramp * dot(l1s, MiG0);

    const EigenFrame fr = eigenframe(w, md.x);
    const double k2 = dot(l2s, fr.r2) / (1.0 + t * fr.lambda2);
    const double F2 = k2 * dot(fr.l2, F);
    const double G2 = ramp * k2 * dot(fr.l2, G0);

    PhiOut out;
    out.phi = {H2, S - u[kSigmaHat], Z - u[kXiHat], F1, G2};
    out.F2 = F2;
    return out;
}

// Fourth-order first derivative on a uniform grid, one-sided at the edges.
void grid_derivative(const std::vector<double>& f, double h, std::vector<double>& df) {
    const int n = static_cast<int>(f.size());
    df.resize(f.size());
    const double c = 1.0 / (12.0 * h);
    for (int i = 2; i + 2 < n; ++i)
        df[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * c;
    df[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * c;
    df[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * c;
    df[n - 2] =
        (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * c;
    df[n - 1] =
        (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) *
        c;
}

double density_core(const CuspChart& chart, const ChartPoint& cp) {
    const Mat2 Dw = chart.field().jacobian(cp.gamma);
    const EigenFrame& fr = cp.frame;
    const double b1 = chart.density().value(cp.gamma) / (2.0 * (fr.lambda2 - fr.lambda1));
    const Vec2 img = (Mat2::identity() * fr.lambda1 - Dw) * cp.r2_star;
    const double val = -4.0 * b1 * std::sqrt(cp.c1) * cross(fr.r1, img);
    if (val > 0.0) return val;
    if (-val > 0.0) return -val;  // deterministic re-orientation of r2*
    throw hypothesis_violation("initial curve density vanished at zeta = " + num(cp.xi));
}

template <typename F>
double t_zero_limit(F&& sample, double* err_out = nullptr) {
    std::vector<double> samp(kLadderDepth);
    double T = kLadderT1;
    for (int k = 0; k < kLadderDepth; ++k, T *= 0.5) samp[k] = sample(T);
    const ExtrapolationResult r = richardson(samp, 0.5, 0.5);
    if (err_out) *err_out = r.err_est;
    return r.value;
}

DriftResult drift_core(const CuspChart& chart, const NodeCtx& nc, double rho0) {
    auto f1_limit = [&](double s_trial, double* err) {
        return t_zero_limit(
            [&](double T) {
                const State5 u{rho0, s_trial, 0.0, s_trial, 0.0};
                return eval_phi(chart, nc, T, u, 0.0, 0.0).phi[3];
            },
            err);
    };
    double ea = 0.0, eb = 0.0;
    const double f0 = f1_limit(0.0, &ea);
    const double f1 = f1_limit(1.0, &eb);
    DriftResult dr;
    dr.slope = f1 - f0;
    dr.converged = ea <= kLadderTol && eb <= kLadderTol && std::abs(dr.slope) > 1e-6;
    if (!dr.converged)
        throw numeric_failure("startup drift extrapolation failed at zeta = " + num(nc.zeta),
                              std::max(ea, eb));
    dr.s0 = -f0 / dr.slope;
    return dr;
}

BriotBouquetData bb_core(const CuspChart& chart, const NodeCtx& nc, double rho0, double s0,
                         double* g2_residual) {
    const State5 base{rho0, s0, 0.0, s0, 0.0};

    auto fd_entry = [&](int out, int slot, double h) {
        double err = 0.0;
        const double v = t_zero_limit(
            [&](double T) {
                State5 up = base, um = base;
                up[slot] += h;
                um[slot] -= h;
                return (eval_phi(chart, nc, T, up, 0.0, 0.0).phi[out] -
                        eval_phi(chart, nc, T, um, 0.0, 0.0).phi[out]) /
                       (2.0 * h);
            },
            &err);
        if (err > kLadderTol)
            throw numeric_failure(
                "structure-matrix entry extrapolation failed at zeta = " + num(nc.zeta), err);
        return v;
    };

    BriotBouquetData bb;
    bb.dF1_dS = fd_entry(3, kSlotS, kProbeStep);
    bb.dF1_dsigma_hat = fd_entry(3, kSigmaHat, kProbeStep);
    const double dH2_dxi = fd_entry(0, kXiHat, kProbeStep);
    const double dH2_dZ = fd_entry(0, kSlotZ, kProbeStep);
    const double dF1_dxi = fd_entry(3, kXiHat, kProbeStep);
    const double dF1_dZ = fd_entry(3, kSlotZ, kProbeStep);

    bb.matrix = {{{-0.5, 0.0, dH2_dxi, 0.0, dH2_dZ},
                  {0.0, -1.0, 0.0, 1.0, 0.0},
                  {0.0, 0.0, -1.0, 0.0, 1.0},
                  {0.0, 0.0, dF1_dxi, bb.dF1_dS, dF1_dZ},
                  {0.0, 0.0, 0.0, 0.0, 0.0}}};

    // Startup residual and insensitivity to the grid-derivative slots: both
    // must vanish in the T -> 0 limit for the startup state to be admissible.
    double g2_err = 0.0;
    const double g2 =
        t_zero_limit([&](double T) { return eval_phi(chart, nc, T, base, 0.0, 0.0).phi[4]; },
                     &g2_err);
    if (g2_residual) *g2_residual = std::abs(g2) + g2_err;

    double fuchs = 0.0;
    for (int slot = 0; slot < 2; ++slot) {
        std::array<std::vector<double>, 5> samp;
        for (auto& s : samp) s.resize(kLadderDepth);
        double T = kLadderT1;
        for (int k = 0; k < kLadderDepth; ++k, T *= 0.5) {
            const double sp = slot == 0 ? kFuchsStep : 0.0;
            const double xp = slot == 1 ? kFuchsStep : 0.0;
            const PhiOut p = eval_phi(chart, nc, T, base, sp, xp);
            const PhiOut m = eval_phi(chart, nc, T, base, -sp, -xp);
            for (int c = 0; c < 5; ++c)
                samp[c][k] = (p.phi[c] - m.phi[c]) / (2.0 * kFuchsStep);
        }
        for (int c = 0; c < 5; ++c)
            fuchs = std::max(fuchs, std::abs(richardson(samp[c], 0.5, 0.5).value));
    }
    bb.fuchs_deviation = fuchs;

    Eigen::Matrix<double, 5, 5> A;
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) A(r, c) = bb.matrix[r][c];
    const Eigen::EigenSolver<Eigen::Matrix<double, 5, 5>> es(A);
    if (es.info() != Eigen::Success)
        throw numeric_failure("structure-matrix eigensolve failed at zeta = " + num(nc.zeta));
    std::array<double, 5> re{}, im{};
    for (int i = 0; i < 5; ++i) {
        re[i] = es.eigenvalues()[i].real();
        im[i] = es.eigenvalues()[i].imag();
    }
    std::array<int, 5> order = {0, 1, 2, 3, 4};
    std::sort(order.begin(), order.end(), [&](int i, int j) { return re[i] < re[j]; });
    double dev = 0.0;
    for (int i = 0; i < 5; ++i) {
        bb.eigenvalues[i] = re[order[i]];
        dev = std::max(dev, std::abs(re[order[i]] - kSpectrumRef[i]));
        dev = std::max(dev, std::abs(im[order[i]]));
    }
    bb.spectrum_deviation = dev;
    if (dev > kSpectrumGate)
        throw hypothesis_violation("startup spectrum deviates from {-3, -1, -1, -1/2, 0} by " +
                                   num(dev) + " at zeta = " + num(nc.zeta));
    for (double lam : bb.eigenvalues)
        for (int k = 1; k <= 6; ++k)
            if (std::abs(lam - k) <= kSpectrumGate)
                throw hypothesis_violation("startup eigenvalue " + num(lam) +
                                           " sits within 1e-3 of the positive integer " +
                                           num(k) + " at zeta = " + num(nc.zeta));
    return bb;
}

void check_structure_gate(const BriotBouquetData& bb, double zeta) {
    if (bb.spectrum_deviation > kSpectrumGate)
        throw hypothesis_violation("startup spectrum deviation " + num(bb.spectrum_deviation) +
                                   " at zeta = " + num(zeta) + " blocks integration");
    for (double lam : bb.eigenvalues)
        for (int k = 1; k <= 6; ++k)
            if (std::abs(lam - k) <= kSpectrumGate)
                throw hypothesis_violation("startup eigenvalue " + num(lam) +
                                           " within 1e-3 of a positive integer at zeta = " +
                                           num(zeta) + " blocks integration");
}

// Monotone cubic (Fritsch-Carlson) slopes on a uniform grid.
std::vector<double> pchip_slopes(const std::vector<double>& f, double h) {
    const int n = static_cast<int>(f.size());
    std::vector<double> d(f.size(), 0.0), del(f.size() - 1);
    for (int i = 0; i + 1 < n; ++i) del[i] = (f[i + 1] - f[i]) / h;
    for (int i = 1; i + 1 < n; ++i) {
        const double p = del[i - 1] * del[i];
        d[i] = p <= 0.0 ? 0.0 : 2.0 * p / (del[i - 1] + del[i]);
    }
    auto end_slope = [](double d0, double d1) {
        double s = 1.5 * d0 - 0.5 * d1;
        if (s * d0 <= 0.0) return 0.0;
        if (d0 * d1 < 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return s;
    };
    if (n >= 3) {
        d[0] = end_slope(del[0], del[1]);
        d[n - 1] = end_slope(del[n - 2], del[n - 3]);
    } else {
        d[0] = d[n - 1] = del[0];
    }
    return d;
}

double pchip_eval(const std::vector<double>& f, const std::vector<double>& d, double s0, double h,
                  double at) {
    const int n = static_cast<int>(f.size());
    int k = static_cast<int>(std::floor((at - s0) / h));
    k = std::clamp(k, 0, n - 2);
    const double u = (at - (s0 + k * h)) / h;
    const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    const double h10 = u * (1.0 - u) * (1.0 - u);
    const double h01 = u * u * (3.0 - 2.0 * u);
    const double h11 = u * u * (u - 1.0);
    return h00 * f[k] + h * h10 * d[k] + h01 * f[k + 1] + h * h11 * d[k + 1];
}

CurveState unpack_state(double T, const std::vector<double>& y, int n) {
    CurveState st;
    st.T = T;
    st.eta_hat.resize(n);
    st.sigma_hat.resize(n);
    st.xi_hat.resize(n);
    st.S.resize(n);
    st.Z.resize(n);
    for (int i = 0; i < n; ++i) {
        st.eta_hat[i] = y[5 * i + 0];
        st.sigma_hat[i] = y[5 * i + 1];
        st.xi_hat[i] = y[5 * i + 2];
        st.S[i] = y[5 * i + 3];
        st.Z[i] = y[5 * i + 4];
    }
    return st;
}

// Curve velocity y_t at one label from the chart map and the state.
Vec2 label_velocity(const AnalyticPlaneField& w, const ChartMapDerivs& md, double t, double S,
                    double Z) {
    const Mat2 M = Mat2::identity() + t * w.jacobian(md.x);
    return w.value(md.x) + M * (md.x_xi * Z + md.x_sigma * S);
}

} // namespace

double initial_density(const CuspChart& chart, double zeta) {
    return density_core(chart, chart.at(zeta));
}

DriftResult initial_drift(const CuspChart& chart, double zeta) {
    const NodeCtx nc = make_node(chart, zeta);
    return drift_core(chart, nc, density_core(chart, chart.at(zeta)));
}

BriotBouquetData briot_bouquet_matrix(const CuspChart& chart, double zeta) {
    const NodeCtx nc = make_node(chart, zeta);
    const double rho0 = density_core(chart, chart.at(zeta));
    const DriftResult dr = drift_core(chart, nc, rho0);
    return bb_core(chart, nc, rho0, dr.s0, nullptr);
}

std::vector<double> curve_grid(const CuspChart& chart, const CurveGridControls& ctl,
                               double T_end) {
    if (ctl.n_zeta < 9 || ctl.n_zeta % 2 == 0)
        throw config_error("n_zeta must be odd and at least 9");
    if (!(ctl.T_start > 0.0) || !(T_end > ctl.T_start))
        throw config_error("curve time window requires 0 < T_start < T_end");
    const double range = chart.xi_range();
    double zm = ctl.zeta_max;
    if (zm > 0.0) {
        if (zm > 0.99 * range)
            throw config_error("zeta_max = " + num(zm) + " too close to the chart edge " +
                               num(range));
    } else {
        // smallest window whose edge fold time clears t0 by four T_end
        const double t_need = chart.at(0.0).tau + 4.0 * T_end;
        const double z_hi = 0.98 * range;
        const int scan = 256;
        double lo = 0.0, hi = -1.0;
        double prev = 0.0;
        for (int k = 1; k <= scan; ++k) {
            const double z = z_hi * k / scan;
            if (chart.at(z).tau >= t_need) {
                hi = z;
                lo = prev;
                break;
            }
            prev = z;
        }
        if (hi < 0.0)
            throw config_error("curve window rule tau(zeta_max) - t0 >= 4 T_end does not fit "
                               "the chart: reduce T_end below " +
                               num(0.25 * (chart.at(z_hi).tau - chart.at(0.0).tau)));
        for (int k = 0; k < 60; ++k) {
            const double mid = 0.5 * (lo + hi);
            (chart.at(mid).tau >= t_need ? hi : lo) = mid;
        }
        zm = hi;
    }
    std::vector<double> grid(ctl.n_zeta);
    const double h = 2.0 * zm / (ctl.n_zeta - 1);
    for (int i = 0; i < ctl.n_zeta; ++i) grid[i] = -zm + h * i;
    grid[(ctl.n_zeta - 1) / 2] = 0.0;
    return grid;
}

CurveInitData build_curve_init(const CuspChart& chart, const std::vector<double>& zeta_grid) {
    if (zeta_grid.size() < 5)
        throw config_error("curve init needs at least 5 labels");
    CurveInitData init;
    init.zeta = zeta_grid;
    const size_t n = zeta_grid.size();
    init.rho0.resize(n);
    init.s0.resize(n);
    init.z0.assign(n, 0.0);
    init.drift_slope.resize(n);
    init.g2_residual.resize(n);
    init.structure.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const NodeCtx nc = make_node(chart, zeta_grid[i]);
        init.rho0[i] = density_core(chart, chart.at(zeta_grid[i]));
        const DriftResult dr = drift_core(chart, nc, init.rho0[i]);
        init.s0[i] = dr.s0;
        init.drift_slope[i] = dr.slope;
        init.structure[i] = bb_core(chart, nc, init.rho0[i], dr.s0, &init.g2_residual[i]);
        if (init.g2_residual[i] >= kStartupResidualGate)
            throw hypothesis_violation("startup residual of the Z equation is " +
                                       num(init.g2_residual[i]) + " at zeta = " +
                                       num(zeta_grid[i]) + ", not below 1e-8");
    }
    return init;
}

CurveSolution integrate_curve(const CuspChart& chart, const CurveInitData& init, double T_end,
                              const CurveGridControls& ctl) {
    const int n = static_cast<int>(init.zeta.size());
    if (n < 9) throw config_error("curve integration needs at least 9 labels");
    if (init.rho0.size() != init.zeta.size() || init.s0.size() != init.zeta.size() ||
        init.structure.size() != init.zeta.size())
        throw config_error("curve init arrays disagree in length");
    if (!(ctl.T_start > 0.0) || !(T_end > ctl.T_start))
        throw config_error("curve time window requires 0 < T_start < T_end");
    if (ctl.n_store < 5) throw config_error("n_store must be at least 5");

    for (int i = 0; i < n; ++i) {
        if (!(init.rho0[i] > 0.0))
            throw hypothesis_violation("startup density not positive at zeta = " +
                                       num(init.zeta[i]));
        check_structure_gate(init.structure[i], init.zeta[i]);
    }

    std::vector<NodeCtx> nodes;
    nodes.reserve(n);
    for (int i = 0; i < n; ++i) nodes.push_back(make_node(chart, init.zeta[i]));
    const double h = init.zeta[1] - init.zeta[0];

    std::vector<double> sh(n), xh(n), dsh(n), dxh(n);
    auto rhs = [&](double s, const std::vector<double>& y, std::vector<double>& dy) {
        const double T = std::exp(s);
        for (int i = 0; i < n; ++i) {
            sh[i] = y[5 * i + 1];
            xh[i] = y[5 * i + 2];
        }
        grid_derivative(sh, h, dsh);
        grid_derivative(xh, h, dxh);
        for (int i = 0; i < n; ++i) {
            const State5 u{y[5 * i + 0], y[5 * i + 1], y[5 * i + 2], y[5 * i + 3], y[5 * i + 4]};
            if (!(u[kEtaHat] > 0.0))
                throw numeric_failure(
                    "curve mass became nonpositive: eta_hat = " + num(u[kEtaHat]) +
                        " at zeta = " + num(init.zeta[i]) + ", T = " + num(T) +
                        " (state: sigma_hat = " + num(u[1]) + ", xi_hat = " + num(u[2]) +
                        ", S = " + num(u[3]) + ", Z = " + num(u[4]) + ")",
                    u[kEtaHat]);
            const PhiOut p = eval_phi(chart, nodes[i], T, u, dsh[i], dxh[i]);
            dy[5 * i + 0] = p.phi[0];
            dy[5 * i + 1] = p.phi[1];
            dy[5 * i + 2] = p.phi[2];
            dy[5 * i + 3] = p.phi[3];
            dy[5 * i + 4] = T * p.F2 + p.phi[4];
        }
    };

    std::vector<double> y(5 * n);
    for (int i = 0; i < n; ++i) {
        y[5 * i + 0] = init.rho0[i];
        y[5 * i + 1] = init.s0[i];
        y[5 * i + 2] = 0.0;
        y[5 * i + 3] = init.s0[i];
        y[5 * i + 4] = init.z0.empty() ? 0.0 : init.z0[i];
    }

    CurveSolution sol;
    sol.zeta = init.zeta;
    sol.init = init;
    sol.controls = ctl;
    sol.T_end = T_end;
    sol.states.reserve(ctl.n_store);

    const double s_lo = std::log(ctl.T_start), s_hi = std::log(T_end);
    const double ds = (s_hi - s_lo) / (ctl.n_store - 1);
    OdeControls octl;
    octl.rel_tol = ctl.rel_tol;
    octl.abs_tol = ctl.abs_tol;
    sol.states.push_back(unpack_state(ctl.T_start, y, n));
    for (int j = 1; j < ctl.n_store; ++j) {
        const double s_a = s_lo + ds * (j - 1);
        const double s_b = j + 1 == ctl.n_store ? s_hi : s_lo + ds * j;
        try {
            y = ode_integrate(rhs, s_a, std::move(y), s_b, octl);
        } catch (const numeric_failure& e) {
            throw numeric_failure("curve evolution stalled between T = " + num(std::exp(s_a)) +
                                      " and T = " + num(std::exp(s_b)) + ": " + e.what(),
                                  e.last_residual);
        }
        sol.states.push_back(unpack_state(std::exp(s_b), y, n));
    }
    return sol;
}

CurveSolution run_curve(const CuspChart& chart, double T_end, const CurveGridControls& ctl) {
    const std::vector<double> grid = curve_grid(chart, ctl, T_end);
    const CurveInitData init = build_curve_init(chart, grid);
    return integrate_curve(chart, init, T_end, ctl);
}

std::vector<PhysicalCurveSample> physical_curve(const CurveSolution& sol, const CuspChart& chart,
                                                double t) {
    const int n = static_cast<int>(sol.zeta.size());
    const int m = static_cast<int>(sol.states.size());
    if (n == 0 || m < 2) throw config_error("curve solution holds no stored levels");
    const double T_start = sol.states.front().T, T_end = sol.states.back().T;
    const double s_lo = std::log(T_start);
    const double hs = (std::log(T_end) - s_lo) / (m - 1);

    std::vector<int> pick;
    std::vector<double> Tq(n);
    for (int i = 0; i < n; ++i) {
        Tq[i] = t - chart.at(sol.zeta[i]).tau;
        if (Tq[i] >= T_start * (1.0 - 1e-12) && Tq[i] <= T_end * (1.0 + 1e-12)) pick.push_back(i);
    }
    if (pick.empty())
        throw config_error("t = " + num(t) + " lies outside the integrated curve window");

    // per-label interpolation of the five state components in log T
    std::array<std::vector<double>, 5> comp, slope;
    for (auto& v : comp) v.resize(m);
    const AnalyticPlaneField& w = chart.field();
    std::vector<PhysicalCurveSample> out;
    std::vector<std::pair<double, double>> chart_pos;  // (xi, sigma) per sample
    out.reserve(pick.size());
    chart_pos.reserve(pick.size());
    for (int i : pick) {
        for (int j = 0; j < m; ++j) {
            comp[0][j] = sol.states[j].eta_hat[i];
            comp[1][j] = sol.states[j].sigma_hat[i];
            comp[2][j] = sol.states[j].xi_hat[i];
            comp[3][j] = sol.states[j].S[i];
            comp[4][j] = sol.states[j].Z[i];
        }
        const double T = std::clamp(Tq[i], T_start, T_end);
        const double s_at = std::log(T);
        State5 u;
        for (int c = 0; c < 5; ++c) {
            slope[c] = pchip_slopes(comp[c], hs);
            u[c] = pchip_eval(comp[c], slope[c], s_lo, hs, s_at);
        }

        PhysicalCurveSample ps;
        ps.t = t;
        ps.zeta = sol.zeta[i];
        ps.T = T;
        const double xi = ps.zeta + T * u[kXiHat];
        const double sigma = T * u[kSigmaHat];
        const ChartMapDerivs md = chart_map(chart, xi, sigma);
        const Vec2 x_ode = flow_coordinates(chart, xi, sigma);
        ps.x = md.x;
        ps.y = md.x + t * w.value(md.x);
        const Vec2 y_ode = x_ode + t * w.value(x_ode);
        ps.y_consistency = std::hypot(ps.y.x - y_ode.x, ps.y.y - y_ode.y);
        ps.v = label_velocity(w, md, t, u[kSlotS], u[kSlotZ]);
        ps.eta = std::sqrt(T) * u[kEtaHat];
        out.push_back(ps);
        chart_pos.emplace_back(xi, sigma);
    }

    // admissibility along contiguous runs: the normal velocity must lie
    // between the two sheet values
    const double hz = n > 1 ? sol.zeta[1] - sol.zeta[0] : 1.0;
    size_t run_begin = 0;
    while (run_begin < pick.size()) {
        size_t run_end = run_begin + 1;
        while (run_end < pick.size() && pick[run_end] == pick[run_end - 1] + 1) ++run_end;
        const size_t len = run_end - run_begin;
        std::vector<double> yx(len), yy(len), dyx(len), dyy(len);
        for (size_t k = 0; k < len; ++k) {
            yx[k] = out[run_begin + k].y.x;
            yy[k] = out[run_begin + k].y.y;
        }
        if (len >= 5) {
            grid_derivative(yx, hz, dyx);
            grid_derivative(yy, hz, dyy);
        } else if (len >= 3) {
            for (size_t k = 1; k + 1 < len; ++k) {
                dyx[k] = (yx[k + 1] - yx[k - 1]) / (2.0 * hz);
                dyy[k] = (yy[k + 1] - yy[k - 1]) / (2.0 * hz);
            }
            dyx[0] = (-3.0 * yx[0] + 4.0 * yx[1] - yx[2]) / (2.0 * hz);
            dyy[0] = (-3.0 * yy[0] + 4.0 * yy[1] - yy[2]) / (2.0 * hz);
            dyx[len - 1] = (3.0 * yx[len - 1] - 4.0 * yx[len - 2] + yx[len - 3]) / (2.0 * hz);
            dyy[len - 1] = (3.0 * yy[len - 1] - 4.0 * yy[len - 2] + yy[len - 3]) / (2.0 * hz);
        } else if (len == 2) {
            dyx[0] = dyx[1] = (yx[1] - yx[0]) / hz;
            dyy[0] = dyy[1] = (yy[1] - yy[0]) / hz;
        } else {
            out[run_begin].admissible = true;
            run_begin = run_end;
            continue;
        }
        for (size_t k = 0; k < len; ++k) {
            PhysicalCurveSample& ps = out[run_begin + k];
            const Vec2 tangent{dyx[k], dyy[k]};
            const double tn = std::hypot(tangent.x, tangent.y);
            if (tn < 1e-300) continue;
            const Vec2 nrm = tangent.perp() / tn;
            const auto [xi, sigma] = chart_pos[run_begin + k];
            const GasState2D gs = gas_state(chart, t, xi, sigma);
            const double a = dot(nrm, ps.v) - dot(nrm, gs.v_plus);
            const double b = dot(nrm, gs.v_minus) - dot(nrm, ps.v);
            ps.admissible = a * b >= -1e-12;
        }
        run_begin = run_end;
    }
    return out;
}

std::vector<BalanceResidual> balance_residuals(const CurveSolution& sol, const CuspChart& chart) {
    const int n = static_cast<int>(sol.zeta.size());
    const int m = static_cast<int>(sol.states.size());
    if (m < 3) throw config_error("balance residuals need at least 3 stored levels");
    const double ds =
        (std::log(sol.states.back().T) - std::log(sol.states.front().T)) / (m - 1);
    const double hz = sol.zeta[1] - sol.zeta[0];

    std::vector<NodeCtx> nodes;
    nodes.reserve(n);
    for (int i = 0; i < n; ++i) nodes.push_back(make_node(chart, sol.zeta[i]));
    const AnalyticPlaneField& w = chart.field();

    std::vector<BalanceResidual> out;
    out.reserve(static_cast<size_t>(m - 2) * n);
    std::vector<double> sh(n), xh(n), dsh(n), dxh(n);
    for (int j = 1; j + 1 < m; ++j) {
        const CurveState& st = sol.states[j];
        const double T = st.T;
        for (int i = 0; i < n; ++i) {
            sh[i] = st.sigma_hat[i];
            xh[i] = st.xi_hat[i];
        }
        grid_derivative(sh, hz, dsh);
        grid_derivative(xh, hz, dxh);
        for (int i = 0; i < n; ++i) {
            const NodeCtx& nc = nodes[i];
            double eta_lv[3];
            Vec2 v_lv[3];
            for (int q = -1; q <= 1; ++q) {
                const CurveState& sq = sol.states[j + q];
                const double Tq = sq.T;
                const double tq = nc.tau + Tq;
                const ChartMapDerivs md =
                    nc.patch.map(nc.zeta + Tq * sq.xi_hat[i], Tq * sq.sigma_hat[i]);
                v_lv[q + 1] = label_velocity(w, md, tq, sq.S[i], sq.Z[i]);
                eta_lv[q + 1] = std::sqrt(Tq) * sq.eta_hat[i];
            }
            const double eta_t = (eta_lv[2] - eta_lv[0]) / (2.0 * ds * T);
            const Vec2 v_t = (v_lv[2] - v_lv[0]) / (2.0 * ds * T);

            const double t = nc.tau + T;
            const double xi = nc.zeta + T * st.xi_hat[i];
            const double sigma = T * st.sigma_hat[i];
            const GasState2D gs = nc.patch.gas(t, xi, sigma);
            const ChartMapDerivs md = nc.patch.map(xi, sigma);
            const Mat2 M = Mat2::identity() + t * w.jacobian(md.x);
            const Vec2 y_t = w.value(md.x) + M * (md.x_xi * st.Z[i] + md.x_sigma * st.S[i]);
            const double xi_z = 1.0 - nc.dtau * st.Z[i] + T * dxh[i];
            const double sg_z = -nc.dtau * st.S[i] + T * dsh[i];
            const Vec2 y_z = M * (md.x_xi * xi_z + md.x_sigma * sg_z);

            const Vec2 dp = gs.v_plus - y_t;
            const Vec2 dm = gs.v_minus - y_t;
            const double wp = gs.rho_plus * cross(dp, y_z);
            const double wm = gs.rho_minus * cross(dm, y_z);
            const double eta = std::sqrt(T) * st.eta_hat[i];
            const Vec2 mom_rhs = (wm * dm - wp * dp) / eta;

            BalanceResidual br;
            br.T = T;
            br.zeta = nc.zeta;
            br.mass = std::abs(eta_t - (wm - wp));
            br.momentum = std::hypot(v_t.x - mom_rhs.x, v_t.y - mom_rhs.y);
            const double vn = std::hypot(v_t.x, v_t.y);
            if (vn > 1e-12) {
                const EigenFrame fr = eigenframe(w, md.x);
                const double rn = std::hypot(fr.r1.x, fr.r1.y);
                br.vt_r1_dev = std::abs(cross(v_t, fr.r1)) / (vn * rn);
            }
            out.push_back(br);
        }
    }
    return out;
}

} // namespace cuspflow
