#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "rmtlab/common.hpp"
#include "rmtlab/ensembles.hpp"

namespace rmtlab {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Limiting spectral laws
//
//   semicircle        rho(x) = sqrt((4-x^2)+)/(2 pi)            on [-2,2]
//   marchenko-pastur  rho(x) = sqrt(((l+ - x)(x - l-))+)/(2 pi d x)
//   mp-singular       rho(x) = 2x * rho_mp(x^2)                  (singular values)
//
// with l(+/-) = (1 +/- sqrt(d))^2 and 0 < d < 1.
// ---------------------------------------------------------------------------

enum class Law { Semicircle, MarchenkoPastur, MpSingular };

struct DensityModel {
    Law law = Law::Semicircle;
    double d = 0.0;  // MP laws only
    double lower = -2.0, upper = 2.0;

    static DensityModel semicircle() { return DensityModel{Law::Semicircle, 0.0, -2.0, 2.0}; }

    static DensityModel marchenko_pastur(double d) {
        if (!(d > 0.0 && d < 1.0)) throw ConfigError("marchenko_pastur: d must be in (0,1)");
        double s = std::sqrt(d);
        return DensityModel{Law::MarchenkoPastur, d, (1 - s) * (1 - s), (1 + s) * (1 + s)};
    }

    static DensityModel mp_singular(double d) {
        DensityModel mp = marchenko_pastur(d);
        return DensityModel{Law::MpSingular, d, std::sqrt(mp.lower), std::sqrt(mp.upper)};
    }

    // the law an ensemble's spectrum() converges to
    static DensityModel limit_of(const EnsembleSpec& spec) {
        if (is_covariance(spec.kind)) return mp_singular(spec.aspect());
        return semicircle();
    }

    double lambda_minus() const {
        double s = std::sqrt(d);
        return (1 - s) * (1 - s);
    }
    double lambda_plus() const {
        double s = std::sqrt(d);
        return (1 + s) * (1 + s);
    }
};

inline double rho(const DensityModel& m, double e) {
    switch (m.law) {
        case Law::Semicircle: {
            double q = 4.0 - e * e;
            return q > 0.0 ? std::sqrt(q) / (2.0 * M_PI) : 0.0;
        }
        case Law::MarchenkoPastur: {
            double q = (m.upper - e) * (e - m.lower);
            return q > 0.0 ? std::sqrt(q) / (2.0 * M_PI * m.d * e) : 0.0;
        }
        case Law::MpSingular: {
            double x2 = e * e;
            double lm = m.lower * m.lower, lp = m.upper * m.upper;
            double q = (lp - x2) * (x2 - lm);
            return q > 0.0 ? std::sqrt(q) / (M_PI * m.d * e) : 0.0;
        }
    }
    return 0.0;
}

namespace detail {

// Adaptive Simpson with absolute tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

// CDF by adaptive quadrature (absolute error <= 1e-10).  The substitution
// x = l + (u-l) sin^2(theta) removes the square-root edge singularities, so
// the transformed integrand is smooth.
inline double cdf(const DensityModel& m, double e) {
    if (e <= m.lower) return 0.0;
    if (e >= m.upper) return 1.0;
    const double l = m.lower, u = m.upper, w = u - l;
    double s2 = std::min(1.0, std::max(0.0, (e - l) / w));
    double theta_e = std::asin(std::sqrt(s2));
    auto f = [&](double th) {
        double sn = std::sin(th), cs = std::cos(th);
        double x = l + w * sn * sn;
        return rho(m, x) * w * 2.0 * sn * cs;
    };
    double v = detail::integrate(f, 0.0, theta_e, 1e-12);
    return std::min(1.0, std::max(0.0, v));
}

// Inverse CDF by bisection (200-iteration cap; robust at the sqrt edges).
inline double quantile(const DensityModel& m, double s) {
    if (s < 0.0 || s > 1.0) throw std::domain_error("quantile: s outside [0,1]");
    if (s == 0.0) return m.lower;
    if (s == 1.0) return m.upper;
    double lo = m.lower, hi = m.upper;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        double mid = 0.5 * (lo + hi);
        if (cdf(m, mid) < s)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Classical locations: gamma_j solves N*cdf(gamma_j) = j, j = 1..n.
inline std::vector<double> classical_locations(const DensityModel& m, int n) {
    if (n < 1) throw ConfigError("classical_locations: n >= 1");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int j = 1; j < n; ++j) g[static_cast<std::size_t>(j - 1)] = quantile(m, double(j) / n);
    g[static_cast<std::size_t>(n - 1)] = m.upper;  // cdf = 1 there
    return g;
}

// ---------------------------------------------------------------------------
// Stieltjes transforms
// ---------------------------------------------------------------------------

namespace detail {

// Roots of a*S^2 + b*S + c = 0, numerically stable pairing.
inline std::pair<Complex, Complex> quadratic_roots(Complex a, Complex b, Complex c) {
    Complex disc = std::sqrt(b * b - 4.0 * a * c);
    if (std::real(std::conj(b) * disc) < 0.0) disc = -disc;
    Complex q = -0.5 * (b + disc);
    return {q / a, c / q};
}

// Coefficients of the self-consistent equation S + 1/(z-(1-d)+z d S) = Delta
// brought to quadratic form.
inline void sce_coeffs(double d, Complex z, Complex delta, Complex& a, Complex& b, Complex& c) {
    a = z * d;
    b = z - (1.0 - d) - delta * z * d;
    c = 1.0 - delta * (z - (1.0 - d));
}

// Track the root pair from the reference point P10 = 10+5i to z along the
// straight segment, keeping labels by continuity.  At P10 the "+" root is the
// one with positive imaginary part.
inline std::pair<Complex, Complex> tracked_roots(double d, Complex z, Complex delta) {
    const Complex p10(10.0, 5.0);
    Complex a, b, c;
    sce_coeffs(d, p10, delta, a, b, c);
    auto [r1, r2] = quadratic_roots(a, b, c);
    Complex splus = (r1.imag() > r2.imag()) ? r1 : r2;
    Complex sminus = (r1.imag() > r2.imag()) ? r2 : r1;

    const int steps = 256;
    for (int k = 1; k <= steps; ++k) {
        Complex zk = p10 + (z - p10) * (double(k) / steps);
        sce_coeffs(d, zk, delta, a, b, c);
        auto [u1, u2] = quadratic_roots(a, b, c);
        // match by distance to the previous labels
        double direct = std::abs(u1 - splus) + std::abs(u2 - sminus);
        double swapped = std::abs(u2 - splus) + std::abs(u1 - sminus);
        if (direct <= swapped) {
            splus = u1;
            sminus = u2;
        } else {
            splus = u2;
            sminus = u1;
        }
    }
    return {splus, sminus};
}

}  // namespace detail

// m_W(z) (Marchenko-Pastur) or m_sc(z) (semicircle; not in the source
// material, provided for API symmetry).  The square root uses the branch cut
// on the negative real axis; if the closed form lands on the wrong sheet
// (possible far from the bulk region) the root is re-selected by continuity
// from the reference point 10+5i.
inline Complex stieltjes_mw(const DensityModel& m, Complex z) {
    if (!(z.imag() > 0.0)) {
        throw std::domain_error(
            (z.imag() == 0.0 && z.real() > m.lower && z.real() < m.upper)
                ? "stieltjes_mw: z on the real axis inside the support"
                : "stieltjes_mw: need Im z > 0");
    }
    if (m.law == Law::Semicircle) {
        Complex v = (-z + std::sqrt(z - 2.0) * std::sqrt(z + 2.0)) / 2.0;
        return v;
    }
    if (m.law != Law::MarchenkoPastur)
        throw ConfigError("stieltjes_mw: semicircle or marchenko-pastur only");
    const double lm = m.lower, lp = m.upper;
    Complex v = (1.0 - m.d - z + Complex(0, 1) * std::sqrt((z - lm) * (lp - z))) / (2.0 * m.d * z);
    if (!(v.imag() > 0.0)) v = detail::tracked_roots(m.d, z, 0.0).first;
    return v;
}

inline Complex stieltjes_mw(const DensityModel& m, double e, double eta) {
    return stieltjes_mw(m, Complex(e, eta));
}

// Both solutions of S + 1/(z-(1-d)+z d S) = Delta, labelled so that at
// Delta=0 the first component is m_W.  |Delta| <= 0.1 (the stability lemma
// needs a small perturbation).
inline std::pair<Complex, Complex> perturbed_roots(const DensityModel& m, Complex z,
                                                   Complex delta) {
    if (m.law != Law::MarchenkoPastur) throw ConfigError("perturbed_roots: marchenko-pastur only");
    if (!(z.imag() > 0.0)) throw std::domain_error("perturbed_roots: need Im z > 0");
    if (std::abs(delta) > 0.1) throw std::domain_error("perturbed_roots: |Delta| <= 0.1 required");
    return detail::tracked_roots(m.d, z, delta);
}

// Perturbed support edges lambda(+/-)^Delta of the perturbed equation.
inline std::pair<Complex, Complex> perturbed_edges(double d, Complex delta) {
    Complex root = std::sqrt(1.0 + delta * (d - d * d));
    Complex sd = std::sqrt(d);
    Complex den = 1.0 + delta * d;
    Complex lp = (root + sd) / den, lm = (root - sd) / den;
    return {lm * lm, lp * lp};
}

// Empirical Stieltjes transform m_N(z) = (1/N) sum 1/(p_j - z).
inline Complex empirical_stieltjes(const std::vector<double>& points, Complex z) {
    if (!(z.imag() > 0.0)) throw std::domain_error("empirical_stieltjes: need Im z > 0");
    Complex s = 0.0;
    for (double p : points) s += 1.0 / (p - z);
    return s / static_cast<double>(points.size());
}

// SpectralPoints overload: covariance spectra enter through the eigenvalues
// of A*A (lambda_j = x_j^2), matching the m_N of the local law.
inline Complex empirical_stieltjes(const SpectralPoints& pts, Complex z) {
    return empirical_stieltjes(eigenvalue_view(pts), z);
}

// ---------------------------------------------------------------------------
// Quantile conditioning guard: |t - n^{-1}(s)| <= C |n(t) - s|^{2/3}
// ---------------------------------------------------------------------------

// Edge-slope coefficient c = lim rho(x)/sqrt(dist to edge), taken at the
// flatter edge.  Estimated from rho itself so it is valid for all three laws.
inline double min_edge_slope(const DensityModel& m) {
    double w = m.upper - m.lower;
    double delta = 1e-9 * w;
    double cl = rho(m, m.lower + delta) / std::sqrt(delta);
    double cu = rho(m, m.upper - delta) / std::sqrt(delta);
    return std::min(cl, cu);
}

// C = 2 * (3/(2 c_min))^{2/3}: near an edge with rho ~ c sqrt(dist) the CDF
// behaves like (2c/3) dist^{3/2}, and |x - y| <= |x^{3/2} - y^{3/2}|^{2/3}
// turns that into the 2/3-Hoelder bound; the factor 2 is safety.
inline double inverse_modulus_constant(const DensityModel& m) {
    return 2.0 * std::pow(1.5 / min_edge_slope(m), 2.0 / 3.0);
}

inline bool inverse_modulus_bound_check(const DensityModel& m, double t, double s) {
    if (s < 0.0 || s > 1.0) throw std::domain_error("inverse_modulus_bound_check: s in [0,1]");
    if (!(t > m.lower && t < m.upper))
        throw std::domain_error("inverse_modulus_bound_check: t must be in the open support");
    double C = inverse_modulus_constant(m);
    double lhs = std::abs(t - quantile(m, s));
    double rhs = C * std::pow(std::abs(cdf(m, t) - s), 2.0 / 3.0);
    return lhs <= rhs + 2e-12;  // slack for the bisection tolerance
}

// CSV tabulation on a caller-supplied grid: x,rho,cdf
inline void write_density_csv(std::ostream& os, const DensityModel& m,
                              const std::vector<double>& grid) {
    os << "x,rho,cdf\n";
    char buf[160];
    for (double x : grid) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x, rho(m, x), cdf(m, x));
        os << buf;
    }
}

}  // namespace rmtlab
