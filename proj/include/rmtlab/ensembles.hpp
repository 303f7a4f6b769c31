#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <variant>
#include <vector>

#include "rmtlab/common.hpp"
#include "rmtlab/eigensolve.hpp"

namespace rmtlab {

// ---------------------------------------------------------------------------
// Ensemble specification
// ---------------------------------------------------------------------------

enum class EnsembleKind {
    WignerSymmetric,   // real symmetric, offdiag var 1, diag var 2, scale N^-1/2
    WignerHermitian,   // complex hermitian, 1/2 per component, diag var 1
    WignerQuaternion,  // quaternion self-dual, 1/4 per component, diag var 1/2
    CovarianceReal,    // M x N factor A, entries var 1, scale M^-1/2
    CovarianceComplex  // M x N factor A, 1/2 per component
};

enum class EntryDist { Gaussian, Rademacher, Uniform };

inline bool is_covariance(EnsembleKind k) {
    return k == EnsembleKind::CovarianceReal || k == EnsembleKind::CovarianceComplex;
}

inline const char* to_string(EnsembleKind k) {
    switch (k) {
        case EnsembleKind::WignerSymmetric: return "wigner-symmetric";
        case EnsembleKind::WignerHermitian: return "wigner-hermitian";
        case EnsembleKind::WignerQuaternion: return "wigner-quaternion";
        case EnsembleKind::CovarianceReal: return "covariance-real";
        case EnsembleKind::CovarianceComplex: return "covariance-complex";
    }
    return "?";
}

inline const char* to_string(EntryDist d) {
    switch (d) {
        case EntryDist::Gaussian: return "gaussian";
        case EntryDist::Rademacher: return "rademacher";
        case EntryDist::Uniform: return "uniform";
    }
    return "?";
}

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::WignerSymmetric;
    int n = 0;                                  // matrix size N
    int m = 0;                                  // rows M, covariance kinds only
    EntryDist entry_dist = EntryDist::Gaussian;
    std::uint64_t seed = 0;

    double aspect() const { return static_cast<double>(n) / static_cast<double>(m); }

    void validate() const {
        if (n < 1) throw ConfigError("ensemble: n must be >= 1");
        if (is_covariance(kind)) {
            if (m < 1) throw ConfigError("ensemble: covariance kinds need m >= 1");
            double d = aspect();
            if (!(d > 0.0 && d < 1.0))
                throw ConfigError("ensemble: covariance kinds require 0 < d = n/m < 1, got d=" +
                                  std::to_string(d));
        }
    }
};

// Dense realization.  Covariance kinds hold the rectangular factor A itself,
// never A*A.  Quaternion kind is stored as its 2N x 2N complex representation.
struct MatrixSample {
    EnsembleSpec spec;
    std::variant<Eigen::MatrixXd, Eigen::MatrixXcd> data;
    std::uint64_t seed_used = 0;

    const Eigen::MatrixXd& real() const { return std::get<Eigen::MatrixXd>(data); }
    const Eigen::MatrixXcd& complex() const { return std::get<Eigen::MatrixXcd>(data); }
    bool is_complex() const { return std::holds_alternative<Eigen::MatrixXcd>(data); }
};

struct SpectralPoints {
    enum class Kind { Eigenvalues, SingularValues };
    std::vector<double> values;  // nondecreasing
    Kind kind = Kind::Eigenvalues;
    EnsembleSpec spec;
};

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

// One centered draw with standard deviation sd.  Rademacher and uniform are
// rescaled so the variance is met exactly.
inline double draw(Rng& rng, EntryDist dist, double sd) {
    switch (dist) {
        case EntryDist::Gaussian: return sd * rng.normal();
        case EntryDist::Rademacher: return rng.coin() ? sd : -sd;
        case EntryDist::Uniform: {
            double half = sd * std::sqrt(3.0);
            return rng.uniform(-half, half);
        }
    }
    return 0.0;
}

}  // namespace detail

// Draw a matrix per the ensemble normalization; deterministic in spec.seed.
// The traversal order (columns outer, rows inner, upper triangle for the
// square kinds) is part of the determinism contract.
inline MatrixSample sample(const EnsembleSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int n = spec.n;
    const double rn = 1.0 / std::sqrt(static_cast<double>(n));

    MatrixSample out;
    out.spec = spec;
    out.seed_used = spec.seed;

    switch (spec.kind) {
        case EnsembleKind::WignerSymmetric: {
            Eigen::MatrixXd h(n, n);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i <= j; ++i) {
                    double v = rn * detail::draw(rng, spec.entry_dist, i == j ? std::sqrt(2.0) : 1.0);
                    h(i, j) = v;
                    h(j, i) = v;
                }
            out.data = std::move(h);
            break;
        }
        case EnsembleKind::WignerHermitian: {
            Eigen::MatrixXcd h(n, n);
            const double sd = std::sqrt(0.5);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i <= j; ++i) {
                    if (i == j) {
                        h(i, i) = rn * detail::draw(rng, spec.entry_dist, 1.0);
                    } else {
                        std::complex<double> v(detail::draw(rng, spec.entry_dist, sd),
                                               detail::draw(rng, spec.entry_dist, sd));
                        h(i, j) = rn * v;
                        h(j, i) = rn * std::conj(v);
                    }
                }
            out.data = std::move(h);
            break;
        }
        case EnsembleKind::WignerQuaternion: {
            // 2x2 complex blocks [z w; -conj(w) conj(z)]; diagonal entries are
            // real quaternions x*I2.
            Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
            const double sd = 0.5;  // variance 1/4 per component
            for (int j = 0; j < n; ++j)
                for (int i = 0; i <= j; ++i) {
                    if (i == j) {
                        double x = rn * detail::draw(rng, spec.entry_dist, std::sqrt(0.5));
                        h(2 * i, 2 * i) = x;
                        h(2 * i + 1, 2 * i + 1) = x;
                    } else {
                        std::complex<double> z(detail::draw(rng, spec.entry_dist, sd),
                                               detail::draw(rng, spec.entry_dist, sd));
                        std::complex<double> w(detail::draw(rng, spec.entry_dist, sd),
                                               detail::draw(rng, spec.entry_dist, sd));
                        z *= rn;
                        w *= rn;
                        h(2 * i, 2 * j) = z;
                        h(2 * i, 2 * j + 1) = w;
                        h(2 * i + 1, 2 * j) = -std::conj(w);
                        h(2 * i + 1, 2 * j + 1) = std::conj(z);
                        h(2 * j, 2 * i) = std::conj(z);
                        h(2 * j, 2 * i + 1) = -w;
                        h(2 * j + 1, 2 * i) = std::conj(w);
                        h(2 * j + 1, 2 * i + 1) = z;
                    }
                }
            out.data = std::move(h);
            break;
        }
        case EnsembleKind::CovarianceReal: {
            const double rm = 1.0 / std::sqrt(static_cast<double>(spec.m));
            Eigen::MatrixXd a(spec.m, n);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < spec.m; ++i) a(i, j) = rm * detail::draw(rng, spec.entry_dist, 1.0);
            out.data = std::move(a);
            break;
        }
        case EnsembleKind::CovarianceComplex: {
            const double rm = 1.0 / std::sqrt(static_cast<double>(spec.m));
            const double sd = std::sqrt(0.5);
            Eigen::MatrixXcd a(spec.m, n);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < spec.m; ++i)
                    a(i, j) = rm * std::complex<double>(detail::draw(rng, spec.entry_dist, sd),
                                                        detail::draw(rng, spec.entry_dist, sd));
            out.data = std::move(a);
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

namespace detail {

// Gram matrices A*A via BLAS rank-k updates where available (the eigensolve
// itself is cheap next to a naive gemm at covariance sizes).
inline Eigen::MatrixXd gram_of(const Eigen::MatrixXd& a) {
    const int m = static_cast<int>(a.rows()), n = static_cast<int>(a.cols());
    Eigen::MatrixXd g(n, n);
#ifndef RMTLAB_NO_LAPACKE
    cblas_dsyrk(CblasColMajor, CblasLower, CblasTrans, n, m, 1.0, a.data(), m, 0.0, g.data(), n);
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
#else
    g.noalias() = a.transpose() * a;
#endif
    return g;
}

inline Eigen::MatrixXcd gram_of(const Eigen::MatrixXcd& a) {
    const int m = static_cast<int>(a.rows()), n = static_cast<int>(a.cols());
    Eigen::MatrixXcd g(n, n);
#ifndef RMTLAB_NO_LAPACKE
    cblas_zherk(CblasColMajor, CblasLower, CblasConjTrans, n, m, 1.0, a.data(), m, 0.0, g.data(),
                n);
    g.triangularView<Eigen::StrictlyUpper>() = g.adjoint();
#else
    g.noalias() = a.adjoint() * a;
#endif
    return g;
}

inline std::vector<double> singular_values_of(const Eigen::MatrixXd& a) {
    std::vector<double> ev = symmetric_eigenvalues(gram_of(a));
    for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline std::vector<double> singular_values_of(const Eigen::MatrixXcd& a) {
    std::vector<double> ev = hermitian_eigenvalues(gram_of(a));
    for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace detail

// Ordered spectrum.  Covariance kinds give the singular values of A; the
// quaternion kind drops the exact double degeneracy of its 2N x 2N form by
// keeping every second sorted eigenvalue.
inline SpectralPoints spectrum(const MatrixSample& s) {
    SpectralPoints out;
    out.spec = s.spec;
    switch (s.spec.kind) {
        case EnsembleKind::WignerSymmetric:
            out.kind = SpectralPoints::Kind::Eigenvalues;
            out.values = symmetric_eigenvalues(s.real());
            break;
        case EnsembleKind::WignerHermitian:
            out.kind = SpectralPoints::Kind::Eigenvalues;
            out.values = hermitian_eigenvalues(s.complex());
            break;
        case EnsembleKind::WignerQuaternion: {
            out.kind = SpectralPoints::Kind::Eigenvalues;
            std::vector<double> all = hermitian_eigenvalues(s.complex());
            out.values.reserve(all.size() / 2);
            for (std::size_t k = 0; k < all.size(); k += 2) out.values.push_back(all[k]);
            break;
        }
        case EnsembleKind::CovarianceReal:
            out.kind = SpectralPoints::Kind::SingularValues;
            out.values = detail::singular_values_of(s.real());
            break;
        case EnsembleKind::CovarianceComplex:
            out.kind = SpectralPoints::Kind::SingularValues;
            out.values = detail::singular_values_of(s.complex());
            break;
    }
    std::sort(out.values.begin(), out.values.end());
    return out;
}

// Eigenvalues of A*A from a covariance spectrum (lambda_j = x_j^2), or the
// values themselves for the Wigner kinds.
inline std::vector<double> eigenvalue_view(const SpectralPoints& p) {
    if (p.kind == SpectralPoints::Kind::Eigenvalues) return p.values;
    std::vector<double> lam(p.values.size());
    for (std::size_t i = 0; i < lam.size(); ++i) lam[i] = p.values[i] * p.values[i];
    return lam;
}

// Singular values of the M x (N-1) matrix with column drop_col removed
// (0-based).  Covariance kinds only; these interlace the parent spectrum.
inline SpectralPoints minor_spectrum(const MatrixSample& s, int drop_col) {
    if (!is_covariance(s.spec.kind))
        throw ConfigError("minor_spectrum: covariance kinds only");
    const int n = s.spec.n;
    if (drop_col < 0 || drop_col >= n) throw std::out_of_range("minor_spectrum: column index");

    SpectralPoints out;
    out.spec = s.spec;
    out.kind = SpectralPoints::Kind::SingularValues;
    if (s.spec.kind == EnsembleKind::CovarianceReal) {
        const Eigen::MatrixXd& a = s.real();
        Eigen::MatrixXd b(a.rows(), n - 1);
        b.leftCols(drop_col) = a.leftCols(drop_col);
        b.rightCols(n - 1 - drop_col) = a.rightCols(n - 1 - drop_col);
        out.values = detail::singular_values_of(b);
    } else {
        const Eigen::MatrixXcd& a = s.complex();
        Eigen::MatrixXcd b(a.rows(), n - 1);
        b.leftCols(drop_col) = a.leftCols(drop_col);
        b.rightCols(n - 1 - drop_col) = a.rightCols(n - 1 - drop_col);
        out.values = detail::singular_values_of(b);
    }
    return out;
}

// Matrix Ornstein-Uhlenbeck interpolation: exp(-t/2)*H0 + sqrt(1-exp(-t))*G
// with G a fresh Gaussian sample of the same kind.  Symmetry structure is
// preserved exactly; entry variances are invariant in t.
inline MatrixSample ou_interpolate(const MatrixSample& initial, double t, std::uint64_t seed) {
    if (!(t >= 0.0)) throw ConfigError("ou_interpolate: t must be >= 0");
    if (t == 0.0) {
        MatrixSample copy = initial;
        copy.seed_used = seed;
        return copy;
    }
    EnsembleSpec gspec = initial.spec;
    gspec.entry_dist = EntryDist::Gaussian;
    gspec.seed = seed;
    MatrixSample g = sample(gspec);

    const double a = std::exp(-t / 2.0);
    const double b = std::sqrt(1.0 - std::exp(-t));
    MatrixSample out = initial;
    out.seed_used = seed;
    if (initial.is_complex())
        out.data = Eigen::MatrixXcd(a * initial.complex() + b * g.complex());
    else
        out.data = Eigen::MatrixXd(a * initial.real() + b * g.real());
    return out;
}

// CSV export: one row per retained value, columns seed,k,value.
inline void write_spectra_csv(std::ostream& os, const std::vector<SpectralPoints>& spectra) {
    os << "seed,k,value\n";
    char buf[64];
    for (const auto& sp : spectra)
        for (std::size_t k = 0; k < sp.values.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", sp.values[k]);
            os << sp.spec.seed << ',' << k << ',' << buf << '\n';
        }
}

}  // namespace rmtlab
