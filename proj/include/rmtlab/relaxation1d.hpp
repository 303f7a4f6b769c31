#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rmtlab/common.hpp"

namespace rmtlab {

// ---------------------------------------------------------------------------
// One-dimensional grid engine for the entry-distribution Ornstein-Uhlenbeck
// flow, the reverse heat flow, and the N=2 gap Fokker-Planck experiment.
//
// GridDensity holds a density u relative to the Gaussian reference
// gamma(x) = sqrt(beta/2pi) exp(-beta x^2/2) on a uniform grid over [-L, L];
// the OU generator is B = (1/2) d^2/dx^2 - (beta x/2) d/dx, i.e. the
// divergence form (1/2 gamma) d(gamma du).
// ---------------------------------------------------------------------------

struct GridDensity {
    double length = 8.0;  // domain [-L, L]
    int npoints = 4096;
    double beta_ref = 1.0;
    std::vector<double> values;

    double h() const { return 2.0 * length / (npoints - 1); }
    double x(int i) const { return -length + i * h(); }
    double weight(int i) const { return (i == 0 || i == npoints - 1) ? h() / 2.0 : h(); }
    double gamma(double xx) const {
        return std::sqrt(beta_ref / (2.0 * M_PI)) * std::exp(-beta_ref * xx * xx / 2.0);
    }

    static GridDensity flat(double beta, double L = 8.0, int n = 4096) {
        GridDensity g;
        g.length = L;
        g.npoints = n;
        g.beta_ref = beta;
        g.values.assign(static_cast<std::size_t>(n), 1.0);
        return g;
    }

    // trapezoid integral of f(x) * u(x) * gamma(x)
    double integral(const std::function<double(double)>& f) const {
        double s = 0.0;
        for (int i = 0; i < npoints; ++i) {
            double xx = x(i);
            s += weight(i) * gamma(xx) * values[static_cast<std::size_t>(i)] * f(xx);
        }
        return s;
    }
    double mass() const {
        return integral([](double) { return 1.0; });
    }
    void normalize() {
        double m = mass();
        if (!(m > 0.0)) throw NumericError("grid density: nonpositive mass", 0);
        for (double& v : values) v /= m;
    }
};

namespace detail {

// Thomas solve for a tridiagonal system (sub, diag, sup destroyed).
inline void tridiag_solve(std::vector<double>& sub, std::vector<double>& diag,
                          std::vector<double>& sup, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

// Weighted conservative operator rows: (Au)_i =
// [ k_{i+1/2} (u_{i+1}-u_i) - k_{i-1/2} (u_i-u_{i-1}) ] / (h^2 * c_i * m_i)
// with zero flux outside; mass sum_i m_i c_i u_i is conserved exactly.
struct DivergenceOperator {
    std::vector<double> sub, diag, sup;

    static DivergenceOperator build(const std::vector<double>& k_iface,
                                    const std::vector<double>& cell, double h,
                                    const std::vector<double>& cellw) {
        const std::size_t n = cell.size();
        DivergenceOperator op;
        op.sub.assign(n, 0.0);
        op.diag.assign(n, 0.0);
        op.sup.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double kl = (i == 0) ? 0.0 : k_iface[i - 1];
            double kr = (i + 1 == n) ? 0.0 : k_iface[i];
            double scale = 1.0 / (h * h * cell[i] * cellw[i]);
            op.sub[i] = kl * scale;
            op.sup[i] = kr * scale;
            op.diag[i] = -(kl + kr) * scale;
        }
        return op;
    }

    std::vector<double> apply(const std::vector<double>& u) const {
        const std::size_t n = u.size();
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * u[i];
            if (i > 0) s += sub[i] * u[i - 1];
            if (i + 1 < n) s += sup[i] * u[i + 1];
            out[i] = s;
        }
        return out;
    }

    // Crank-Nicolson step u <- (I - dt/2 A)^{-1} (I + dt/2 A) u
    void cn_step(std::vector<double>& u, double dt) const {
        const std::size_t n = u.size();
        std::vector<double> rhs(n), a(n), b(n), c(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = (1.0 + 0.5 * dt * diag[i]) * u[i];
            if (i > 0) s += 0.5 * dt * sub[i] * u[i - 1];
            if (i + 1 < n) s += 0.5 * dt * sup[i] * u[i + 1];
            rhs[i] = s;
            a[i] = -0.5 * dt * sub[i];
            b[i] = 1.0 - 0.5 * dt * diag[i];
            c[i] = -0.5 * dt * sup[i];
        }
        tridiag_solve(a, b, c, rhs);
        u.swap(rhs);
    }
};

}  // namespace detail

namespace detail {

// Banded matrix with fixed half-bandwidth, LU-factored without pivoting
// (rows are strongly diagonally dominant for our Crank-Nicolson steps).
struct BandedLu {
    int n = 0, hw = 0;
    std::vector<double> a;  // (2*hw+1) diagonals, row-major band storage

    double& at(int i, int j) { return a[static_cast<std::size_t>(i) * (2 * hw + 1) + (j - i + hw)]; }
    double get(int i, int j) const {
        if (j < i - hw || j > i + hw || j < 0 || j >= n) return 0.0;
        return a[static_cast<std::size_t>(i) * (2 * hw + 1) + (j - i + hw)];
    }

    static BandedLu zero(int n, int hw) {
        BandedLu m;
        m.n = n;
        m.hw = hw;
        m.a.assign(static_cast<std::size_t>(n) * (2 * hw + 1), 0.0);
        return m;
    }

    void factor() {
        for (int k = 0; k < n - 1; ++k) {
            double piv = at(k, k);
            for (int i = k + 1; i <= std::min(n - 1, k + hw); ++i) {
                double m = at(i, k) / piv;
                at(i, k) = m;
                for (int j = k + 1; j <= std::min(n - 1, k + hw); ++j) at(i, j) -= m * get(k, j);
            }
        }
    }

    void solve(std::vector<double>& b) const {
        for (int i = 1; i < n; ++i)
            for (int j = std::max(0, i - hw); j < i; ++j) b[i] -= get(i, j) * b[j];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j <= std::min(n - 1, i + hw); ++j) b[i] -= get(i, j) * b[j];
            b[i] /= get(i, i);
        }
    }
};

}  // namespace detail

// Crank-Nicolson integration of du/dt = Bu.  Interior rows use a
// fourth-order conservative flux form of (1/2 gamma) d(gamma du) (so the
// trapezoid mass sum only leaks through the gamma(+/-L) ~ 1e-15 boundary
// weights), while the two boundary rows apply the raw generator with
// one-sided stencils, which keeps whole-line eigenfunctions free of an
// artificial reflection layer.  The flow acts on u-1, so u == 1 is preserved
// to the last bit.
inline GridDensity ou_evolve(const GridDensity& u, double t, double dt_max = 2.5e-4) {
    if (!(t >= 0.0)) throw ConfigError("ou_evolve: t >= 0");
    GridDensity out = u;
    if (t == 0.0) return out;
    const int n = u.npoints;
    const double h = u.h();

    auto B = detail::BandedLu::zero(n, 3);
    {
        // generator rows 0.5 u'' - (beta x/2) u': fourth-order central in the
        // interior, second-order central next to the ends, one-sided at the
        // ends.  All rows vanish on constants and are exact on linear u, so
        // u == 1 is an exact fixed point and the first Hermite mode evolves
        // without an artificial boundary layer.
        const double c1_4[5] = {1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0};
        const double c2_4[5] = {-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0};
        const double c1_2[3] = {-0.5, 0.0, 0.5};
        const double c2_2[3] = {1.0, -2.0, 1.0};
        for (int i = 1; i + 1 < n; ++i) {
            double drift = -0.5 * u.beta_ref * u.x(i);
            if (i >= 2 && i + 2 < n) {
                for (int k = -2; k <= 2; ++k)
                    B.at(i, i + k) += 0.5 * c2_4[k + 2] / (h * h) + drift * c1_4[k + 2] / h;
            } else {
                for (int k = -1; k <= 1; ++k)
                    B.at(i, i + k) += 0.5 * c2_2[k + 1] / (h * h) + drift * c1_2[k + 1] / h;
            }
        }
        const double d2[4] = {2.0, -5.0, 4.0, -1.0};
        const double d1[3] = {-1.5, 2.0, -0.5};
        double drift = -0.5 * u.beta_ref * u.x(0);
        for (int k = 0; k < 4; ++k) B.at(0, k) += 0.5 * d2[k] / (h * h);
        for (int k = 0; k < 3; ++k) B.at(0, k) += drift * d1[k] / h;
        drift = -0.5 * u.beta_ref * u.x(n - 1);
        for (int k = 0; k < 4; ++k) B.at(n - 1, n - 1 - k) += 0.5 * d2[k] / (h * h);
        for (int k = 0; k < 3; ++k) B.at(n - 1, n - 1 - k) += -drift * d1[k] / h;
    }

    int steps = std::max(1, static_cast<int>(std::ceil(t / dt_max)));
    double dt = t / steps;

    auto lhs = detail::BandedLu::zero(n, 3);
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - 3); j <= std::min(n - 1, i + 3); ++j)
            lhs.at(i, j) = (i == j ? 1.0 : 0.0) - 0.5 * dt * B.get(i, j);
    lhs.factor();

    std::vector<double> v(static_cast<std::size_t>(n));  // evolve u - 1
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = out.values[static_cast<std::size_t>(i)] - 1.0;
    std::vector<double> rhs(static_cast<std::size_t>(n));
    for (int s = 0; s < steps; ++s) {
        for (int i = 0; i < n; ++i) {
            double acc = v[static_cast<std::size_t>(i)];
            for (int j = std::max(0, i - 3); j <= std::min(n - 1, i + 3); ++j)
                acc += 0.5 * dt * B.get(i, j) * v[static_cast<std::size_t>(j)];
            rhs[static_cast<std::size_t>(i)] = acc;
        }
        lhs.solve(rhs);
        v = rhs;
    }
    for (int i = 0; i < n; ++i) out.values[static_cast<std::size_t>(i)] = 1.0 + v[static_cast<std::size_t>(i)];
    return out;
}

// ---------------------------------------------------------------------------
// High-order grid derivatives for B^k u (central stencils of width 2k+3).
// ---------------------------------------------------------------------------

namespace detail {

// coefficients for d/dx (antisymmetric) and d2/dx2 (symmetric), half-width m
inline const double* d1_coeffs(int m) {
    static const double c1[] = {0.5};
    static const double c2[] = {2.0 / 3.0, -1.0 / 12.0};
    static const double c3[] = {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
    static const double c4[] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
    switch (m) {
        case 1: return c1;
        case 2: return c2;
        case 3: return c3;
        default: return c4;
    }
}
inline const double* d2_coeffs(int m) {  // [center, 1, 2, ...]
    static const double c1[] = {-2.0, 1.0};
    static const double c2[] = {-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0};
    static const double c3[] = {-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0};
    static const double c4[] = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
    switch (m) {
        case 1: return c1;
        case 2: return c2;
        case 3: return c3;
        default: return c4;
    }
}

}  // namespace detail

// One application of B with central stencils of half-width m (shrunk near the
// domain ends, where the test densities are constant anyway).
inline std::vector<double> apply_ou_generator(const GridDensity& g, const std::vector<double>& u,
                                              int m) {
    m = std::min(std::max(m, 1), 4);
    const int n = g.npoints;
    const double h = g.h();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        int mi = std::min({m, i, n - 1 - i});
        double d1 = 0.0, d2 = 0.0;
        if (mi >= 1) {
            const double* c1 = detail::d1_coeffs(mi);
            const double* c2 = detail::d2_coeffs(mi);
            d2 = c2[0] * u[static_cast<std::size_t>(i)];
            for (int k = 1; k <= mi; ++k) {
                double up = u[static_cast<std::size_t>(i + k)], um = u[static_cast<std::size_t>(i - k)];
                d1 += c1[k - 1] * (up - um);
                d2 += c2[k] * (up + um);
            }
            d1 /= h;
            d2 /= (h * h);
        }
        out[static_cast<std::size_t>(i)] = 0.5 * d2 - 0.5 * g.beta_ref * g.x(i) * d1;
    }
    return out;
}

namespace detail {

// C-infinity bump: 1 on |y|<=1, 0 on |y|>=2.
inline double cutoff_bump(double y) {
    double a = std::abs(y);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    auto f = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
    double up = f(2.0 - a), down = f(a - 1.0);
    return up / (up + down);
}

// Catmull-Rom interpolation on the uniform grid, clamped at the ends.
inline double interp_cubic(const GridDensity& g, const std::vector<double>& v, double xx) {
    double p = (xx + g.length) / g.h();
    if (p <= 1.0) return v.front();
    if (p >= g.npoints - 2.0) return v.back();
    int i = static_cast<int>(p);
    double f = p - i;
    double vm = v[static_cast<std::size_t>(i - 1)], v0 = v[static_cast<std::size_t>(i)];
    double v1 = v[static_cast<std::size_t>(i + 1)], v2 = v[static_cast<std::size_t>(i + 2)];
    return v0 + 0.5 * f * (v1 - vm + f * (2.0 * vm - 5.0 * v0 + 4.0 * v1 - v2 +
                                          f * (3.0 * (v0 - v1) + v2 - vm)));
}

}  // namespace detail

// Reverse heat flow g_t with e^{tB} g_t = u + O(t^K):
//   xi_t   = sum_{k=1}^{K-1} (-t)^k B^k u / k!       (grid differentiation)
//   h      = u + theta * xi_t,  theta(x) = bump(t^alpha x), alpha = 0.05
// then h is normalized and translated/dilated so the result has mean zero and
// the reference variance 1/beta.
inline GridDensity reverse_heat_flow(const GridDensity& u, double t, int K) {
    if (!(t >= 0.0) || t > 0.1) throw ConfigError("reverse_heat_flow: need 0 <= t <= 0.1");
    if (K < 1 || K > 3) throw ConfigError("reverse_heat_flow: K in {1,2,3}");
    for (double v : u.values)
        if (!(v > 0.0)) throw ConfigError("reverse_heat_flow: u must be positive");

    GridDensity out = u;
    out.normalize();
    if (t == 0.0) return out;

    const std::size_t n = out.values.size();
    std::vector<double> xi(n, 0.0);
    std::vector<double> bku = out.values;  // B^k u
    double coeff = 1.0;
    for (int k = 1; k <= K - 1; ++k) {
        bku = apply_ou_generator(out, bku, k + 1);
        coeff *= -t / k;
        for (std::size_t i = 0; i < n; ++i) xi[i] += coeff * bku[i];
    }

    const double talpha = std::pow(t, 0.05);
    GridDensity hd = out;
    for (std::size_t i = 0; i < n; ++i) {
        double theta = detail::cutoff_bump(talpha * hd.x(static_cast<int>(i)));
        hd.values[i] = out.values[i] + theta * xi[i];
        if (!(hd.values[i] > 0.0))
            throw std::domain_error("reverse_heat_flow: positivity violated, reduce t for this K");
    }

    hd.normalize();
    double alpha = hd.integral([](double xx) { return xx; });
    double sigma2 = hd.integral([&](double xx) { return (xx - alpha) * (xx - alpha); });
    double s = std::sqrt(sigma2 * hd.beta_ref);  // sigma / sigma_ref

    GridDensity g = out;
    for (std::size_t i = 0; i < n; ++i) {
        double xx = g.x(static_cast<int>(i));
        double y = s * xx + alpha;
        double ratio = std::exp(-0.5 * hd.beta_ref * (y * y - xx * xx));
        g.values[i] = s * detail::interp_cubic(hd, hd.values, y) * ratio;
    }
    g.normalize();
    return g;
}

// ---------------------------------------------------------------------------
// N=2 relaxation flow in the gap coordinate u = x_2 - x_1 > 0.
//
// The two-particle pseudo-equilibrium Hamiltonian separates in center/gap
// coordinates; the gap factor of omega is  u^beta exp(-beta u^2/4
// - (u-g)^2/(2R^2)), and the flow is dq/dt = (1/2 omega) d(omega dq) with the
// singular repulsion carried entirely by the vanishing of omega at u=0.
// Entropy S_omega(q) and the Dirichlet form D_omega(sqrt q) (with the 1/(2N)
// normalization at N=2, which gives (1/2) int (dq/du)^2-type weights) are
// recorded along the way.
// ---------------------------------------------------------------------------

struct GapChainConfig {
    double beta = 1.0;      // >= 1
    double r = 0.5;         // localization scale R
    double gamma_gap = 2.0; // classical gap g = gamma_2 - gamma_1
    double umax = 8.0;
    int npoints = 2048;
    double dt = 2.5e-4;

    double h() const { return umax / npoints; }
    double u(int i) const { return (i + 0.5) * h(); }  // cell centers
    double log_omega(double uu) const {
        double dg = uu - gamma_gap;
        return beta * std::log(uu) - beta * uu * uu / 4.0 - dg * dg / (2.0 * r * r);
    }

    void validate() const {
        if (!(beta >= 1.0)) throw ConfigError("gap chain: beta >= 1");
        if (!(r > 0.0) || !(gamma_gap > 0.0)) throw ConfigError("gap chain: r, gamma_gap > 0");
        if (npoints < 64) throw ConfigError("gap chain: npoints too small");
        if (h() > std::min(r, 1.0 / std::sqrt(beta)) / 8.0)
            throw ConfigError("gap chain: grid too coarse near the u=0 boundary, refine");
    }
};

struct EntropyCurves {
    std::vector<double> times;
    std::vector<double> entropy;    // S_omega(q_t)
    std::vector<double> dirichlet;  // D_omega(sqrt q_t)
    std::vector<double> mass;       // int q_t d omega (conservation check)
    std::vector<double> final_state;
};

namespace detail {

struct GapChainGrid {
    std::vector<double> cellw;   // normalized omega_i * h
    std::vector<double> ifacew;  // normalized omega at interfaces (k=1..n-1)
    DivergenceOperator op;
    double h;
};

inline GapChainGrid build_gap_chain(const GapChainConfig& cfg) {
    cfg.validate();
    const int n = cfg.npoints;
    const double h = cfg.h();
    std::vector<double> logw(static_cast<std::size_t>(n));
    double lmax = -1e300;
    for (int i = 0; i < n; ++i) {
        logw[static_cast<std::size_t>(i)] = cfg.log_omega(cfg.u(i));
        lmax = std::max(lmax, logw[static_cast<std::size_t>(i)]);
    }
    std::vector<double> cell(static_cast<std::size_t>(n));
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        cell[static_cast<std::size_t>(i)] = std::exp(logw[static_cast<std::size_t>(i)] - lmax);
        z += cell[static_cast<std::size_t>(i)] * h;
    }
    GapChainGrid g;
    g.h = h;
    g.cellw.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g.cellw[static_cast<std::size_t>(i)] = cell[static_cast<std::size_t>(i)] * h / z;
    g.ifacew.resize(static_cast<std::size_t>(n - 1));
    std::vector<double> iface(static_cast<std::size_t>(n - 1));
    for (int k = 1; k < n; ++k) {
        double w = std::exp(cfg.log_omega(k * h) - lmax);
        g.ifacew[static_cast<std::size_t>(k - 1)] = w / z;  // normalized, for functionals
        iface[static_cast<std::size_t>(k - 1)] = 0.5 * w;   // conductivity (1/2) omega, operator scale
    }
    std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
    g.op = DivergenceOperator::build(iface, cell, h, ones);
    return g;
}

inline double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

}  // namespace detail

// Entropy of a relative density on the gap chain.
inline double gap_chain_entropy(const detail::GapChainGrid& g, const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += g.cellw[i] * detail::xlogx(q[i]);
    return s;
}

// Dirichlet form D_omega(sqrt q) = (1/2) int ((sqrt q)')^2 d omega,
// the 1/(2N) normalization specialized to the N=2 gap coordinate.
inline double gap_chain_dirichlet(const detail::GapChainGrid& g, const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < q.size(); ++k) {
        double df = std::sqrt(std::max(q[k + 1], 0.0)) - std::sqrt(std::max(q[k], 0.0));
        s += 0.5 * g.ifacew[k] * (df / g.h) * (df / g.h) * g.h;
    }
    return s;
}

inline double gap_chain_mass(const detail::GapChainGrid& g, const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += g.cellw[i] * q[i];
    return s;
}

// Solve dq/dt = L~ q on the half line from the bounded initial relative
// density q0 (values on cell centers, mass-normalized internally), recording
// entropy and Dirichlet curves at the requested times.
inline EntropyCurves fokker_planck_gap(const GapChainConfig& cfg, std::vector<double> q0,
                                       const std::vector<double>& t_grid) {
    auto grid = detail::build_gap_chain(cfg);
    if (q0.size() != grid.cellw.size()) throw ConfigError("fokker_planck_gap: q0 size mismatch");
    for (double v : q0)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("fokker_planck_gap: q0 must be bounded, >= 0");
    double m0 = gap_chain_mass(grid, q0);
    if (!(m0 > 0.0)) throw ConfigError("fokker_planck_gap: q0 has no mass");
    for (double& v : q0) v /= m0;

    EntropyCurves out;
    double t = 0.0;
    for (double target : t_grid) {
        if (target < t - 1e-15) throw ConfigError("fokker_planck_gap: t_grid must increase");
        while (target - t > 1e-15) {
            double dt = std::min(cfg.dt, target - t);
            grid.op.cn_step(q0, dt);
            t += dt;
        }
        out.times.push_back(target);
        out.entropy.push_back(gap_chain_entropy(grid, q0));
        out.dirichlet.push_back(gap_chain_dirichlet(grid, q0));
        out.mass.push_back(gap_chain_mass(grid, q0));
    }
    out.final_state = q0;
    return out;
}

// Convenience: the gap-chain grid for test and experiment code that needs the
// weights directly (entropy of constructed densities, LSI sweeps).
inline detail::GapChainGrid gap_chain_grid(const GapChainConfig& cfg) {
    return detail::build_gap_chain(cfg);
}

// ---------------------------------------------------------------------------
// Smooth entry-density test families.  Both satisfy the entry-distribution
// normalization exactly: gamma-mass 1, mean 0, variance 1/beta, so the
// reverse-flow translation/dilation is a near-identity as the construction
// assumes.
// ---------------------------------------------------------------------------

// u = 1 + a He_4(sqrt(beta) x): a pure fourth Hermite perturbation (single
// OU eigenmode, relaxation rate 2 beta).  Requires a < 1/6 for positivity.
inline GridDensity hermite4_entry_density(double beta, double a, double L = 8.0, int n = 4096) {
    if (!(a > 0.0 && a < 1.0 / 6.0)) throw ConfigError("hermite4 family: need 0 < a < 1/6");
    auto g = GridDensity::flat(beta, L, n);
    for (int i = 0; i < n; ++i) {
        double y = std::sqrt(beta) * g.x(i);
        double y2 = y * y;
        g.values[static_cast<std::size_t>(i)] += a * (y2 * y2 - 6.0 * y2 + 3.0);
    }
    return g;
}

namespace detail {

inline double cos_power_bump(double x, double radius, double m) {
    double s = x / radius;
    return std::abs(s) < 1.0 ? std::pow(std::cos(M_PI * s / 2.0), m) : 0.0;
}

}  // namespace detail

// Compactly supported perturbation inside |x| <= radius, built from cosine
// powers with the second spectral line cancelled and the gamma-mass and
// second moment zeroed out.  Support must stay inside the reverse-flow
// cutoff plateau (radius <= t^-alpha for the times of interest).
inline GridDensity compact_entry_density(double beta, double a, double radius = 1.1,
                                         double L = 8.0, int n = 4096) {
    auto g = GridDensity::flat(beta, L, n);
    auto moments = [&](double m) {
        double m0 = 0, m2 = 0;
        for (int i = 0; i < n; ++i) {
            double x = g.x(i), w = g.weight(i) * g.gamma(x);
            double v = detail::cos_power_bump(x, radius, m);
            m0 += w * v;
            m2 += w * x * x * v;
        }
        return std::pair<double, double>(m0, m2);
    };
    // cos^4 - (4/7) cos^8 cancels the second frequency line; cos^6 and cos^12
    // then restore the gamma-mass and the second moment.
    const double c8 = 4.0 / 7.0;
    auto [a0, a2] = moments(4.0);
    auto [b0, b2] = moments(8.0);
    auto [c0m, c2m] = moments(6.0);
    auto [d0, d2] = moments(12.0);
    double r0 = a0 - c8 * b0, r2 = a2 - c8 * b2;
    double det = c0m * d2 - d0 * c2m;
    double c6 = (-r0 * d2 + r2 * d0) / det;
    double c12 = (-c0m * r2 + c2m * r0) / det;
    for (int i = 0; i < n; ++i) {
        double x = g.x(i);
        g.values[static_cast<std::size_t>(i)] +=
            a * (detail::cos_power_bump(x, radius, 4.0) - c8 * detail::cos_power_bump(x, radius, 8.0) +
                 c6 * detail::cos_power_bump(x, radius, 6.0) +
                 c12 * detail::cos_power_bump(x, radius, 12.0));
    }
    for (double v : g.values)
        if (!(v > 0.0)) throw ConfigError("compact family: amplitude too large");
    return g;
}

}  // namespace rmtlab
