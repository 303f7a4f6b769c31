#pragma once

#include <cmath>
#include <vector>

#include "rmtlab/common.hpp"

namespace rmtlab {

// ---------------------------------------------------------------------------
// Gibbs Hamiltonians of the equilibrium measures mu ~ exp(-N*H).
//
// Wigner:      H = beta [ sum x_i^2/4 - (1/N) sum_{i<j} log|x_i - x_j| ]
// Covariance:  H = beta [ sum x_i^2/(2d)
//                         - (1/N) sum_{i<j} (log|x_i-x_j| + log|x_i+x_j|)
//                         - (1/d - 1 + (1 - 1/beta)/N) sum log x_i ]
//
// energy/grad work with N*H (the exponent of the measure); the Hessian
// quadratic form is per-H, which is the normalization of the convexity bound
//   <v, H''(x) v> >= (beta/N) sum_{i<j} (v_i-v_j)^2/(x_i-x_j)^2 .
// ---------------------------------------------------------------------------

enum class HamiltonianKind { Wigner, Covariance };

struct HamiltonianSpec {
    HamiltonianKind kind = HamiltonianKind::Wigner;
    double beta = 2.0;  // >= 1
    int n = 1;
    double d = 0.0;  // covariance only, in (0,1)

    // per-H coefficient of sum log x_i
    double log_coeff() const { return 1.0 / d - 1.0 + (1.0 - 1.0 / beta) / n; }
    // c_N of the abstract Hamiltonian, as fixed by the concrete covariance form
    double c_n() const { return n * (1.0 / d - 1.0) + 1.0 - 1.0 / beta; }

    void validate() const {
        if (!(beta >= 1.0)) throw ConfigError("hamiltonian: beta >= 1 required");
        if (n < 1) throw ConfigError("hamiltonian: n >= 1");
        if (kind == HamiltonianKind::Covariance && !(d > 0.0 && d < 1.0))
            throw ConfigError("hamiltonian: covariance needs d in (0,1)");
    }
};

namespace detail {

inline void check_configuration(const HamiltonianSpec& spec, const std::vector<double>& x) {
    spec.validate();
    if (static_cast<int>(x.size()) != spec.n) throw ConfigError("x has wrong length");
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] >= x[i - 1])) throw ConfigError("x must be ordered");
        if (x[i] - x[i - 1] < 1e-12) throw SingularConfigError("coincident points");
    }
    if (spec.kind == HamiltonianKind::Covariance)
        for (double v : x)
            if (!(v > 0.0)) throw ConfigError("covariance configurations need x > 0");
}

}  // namespace detail

// N*H(x)
inline double energy(const HamiltonianSpec& spec, const std::vector<double>& x) {
    detail::check_configuration(spec, x);
    const int n = spec.n;
    double conf = 0.0, logs = 0.0;
    if (spec.kind == HamiltonianKind::Wigner) {
        for (double v : x) conf += v * v / 4.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) logs += std::log(x[j] - x[i]);
        return spec.beta * (n * conf - logs);
    }
    for (double v : x) conf += v * v / (2.0 * spec.d);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) logs += std::log(x[j] - x[i]) + std::log(x[j] + x[i]);
    double diag = 0.0;
    for (double v : x) diag += std::log(v);
    return spec.beta * (n * conf - logs - spec.c_n() * diag);
}

// gradient of N*H
inline std::vector<double> grad(const HamiltonianSpec& spec, const std::vector<double>& x) {
    detail::check_configuration(spec, x);
    const int n = spec.n;
    std::vector<double> g(x.size(), 0.0);
    if (spec.kind == HamiltonianKind::Wigner) {
        for (int i = 0; i < n; ++i) g[i] = n * x[i] / 2.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double inv = 1.0 / (x[i] - x[j]);
                g[i] -= inv;
                g[j] += inv;
            }
    } else {
        const double cn = spec.c_n();
        for (int i = 0; i < n; ++i) g[i] = n * x[i] / spec.d - cn / x[i];
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double invm = 1.0 / (x[i] - x[j]), invp = 1.0 / (x[i] + x[j]);
                g[i] -= invm + invp;
                g[j] += invm - invp;
            }
    }
    for (double& v : g) v *= spec.beta;
    return g;
}

// <v, H''(x) v> in the per-H normalization
inline double hessian_quadratic_form(const HamiltonianSpec& spec, const std::vector<double>& x,
                                     const std::vector<double>& v) {
    detail::check_configuration(spec, x);
    if (v.size() != x.size()) throw ConfigError("v has wrong length");
    const int n = spec.n;
    double form = 0.0;
    if (spec.kind == HamiltonianKind::Wigner) {
        for (int i = 0; i < n; ++i) form += v[i] * v[i] / 2.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double dv = v[i] - v[j], dx = x[i] - x[j];
                form += dv * dv / (dx * dx) / n;
            }
    } else {
        const double lc = spec.log_coeff();
        for (int i = 0; i < n; ++i) form += v[i] * v[i] * (1.0 / spec.d + lc / (x[i] * x[i]));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double dv = v[i] - v[j], sv = v[i] + v[j];
                double dx = x[i] - x[j], sx = x[i] + x[j];
                form += (dv * dv / (dx * dx) + sv * sv / (sx * sx)) / n;
            }
    }
    return spec.beta * form;
}

// r.h.s. of the convexity bound
inline double convexity_rhs(const HamiltonianSpec& spec, const std::vector<double>& x,
                            const std::vector<double>& v) {
    double s = 0.0;
    const int n = spec.n;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double dv = v[i] - v[j], dx = x[i] - x[j];
            s += dv * dv / (dx * dx);
        }
    return spec.beta * s / n;
}

// ---------------------------------------------------------------------------
// Pseudo equilibrium measure omega ~ exp(-N(H+W)),
// W(x) = sum_j (x_j - gamma_j)^2 / (2 R^2)
// ---------------------------------------------------------------------------

struct PseudoPotential {
    std::vector<double> gamma;  // strictly increasing classical locations
    double r = 0.0;             // localization scale R > 0

    void validate() const {
        if (!(r > 0.0)) throw ConfigError("pseudo potential: r > 0");
        if (!is_strictly_increasing(gamma)) throw ConfigError("pseudo potential: gamma must increase");
    }
};

// N*W(x); zero iff x == gamma
inline double pseudo_energy(const PseudoPotential& pp, const std::vector<double>& x) {
    pp.validate();
    if (x.size() != pp.gamma.size()) throw ConfigError("pseudo_energy: length mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        double dx = x[j] - pp.gamma[j];
        s += dx * dx;
    }
    return static_cast<double>(x.size()) * s / (2.0 * pp.r * pp.r);
}

// Uniform convexity of H+W:
//   <v, (H+W)''(x) v> >= ||v||^2/R^2 + (1/N) sum_{i<j} (v_i-v_j)^2/(x_i-x_j)^2
inline bool relaxation_hessian_bound_check(const HamiltonianSpec& spec, const PseudoPotential& pp,
                                           const std::vector<double>& x,
                                           const std::vector<double>& v) {
    pp.validate();
    if (pp.gamma.size() != x.size()) throw ConfigError("gamma/x length mismatch");
    double v2 = 0.0;
    for (double w : v) v2 += w * w;
    double lhs = hessian_quadratic_form(spec, x, v) + v2 / (pp.r * pp.r);
    double rhs = v2 / (pp.r * pp.r) + convexity_rhs(spec, x, v) / spec.beta;
    return lhs - rhs >= -1e-12 * std::max(1.0, std::abs(lhs));
}

}  // namespace rmtlab
