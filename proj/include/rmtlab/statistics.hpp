#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "rmtlab/common.hpp"
#include "rmtlab/density.hpp"

namespace rmtlab {

// ---------------------------------------------------------------------------
// Local spectral statistics.  Everything here is a pure reduction over
// ordered point sets; energies must be in the bulk (rho(E) >= 5% of max rho).
// ---------------------------------------------------------------------------

inline double max_rho(const DensityModel& m) {
    double best = 0.0;
    const int grid = 4096;
    for (int i = 1; i < grid; ++i) {
        double x = m.lower + (m.upper - m.lower) * i / grid;
        best = std::max(best, rho(m, x));
    }
    return best;
}

inline void require_bulk(const DensityModel& m, double e) {
    if (rho(m, e) < 0.05 * max_rho(m))
        throw std::domain_error("energy is outside the bulk (rho(E) < 0.05 max rho)");
}

// Rescaled nearest-neighbour gaps N rho(E) (x_{j+1} - x_j) for |x_j - E| <= ell.
inline std::vector<double> bulk_rescaled_gaps(const std::vector<double>& x, const DensityModel& m,
                                              double e, double ell) {
    require_bulk(m, e);
    const double scale = static_cast<double>(x.size()) * rho(m, e);
    std::vector<double> gaps;
    for (std::size_t j = 0; j + 1 < x.size(); ++j)
        if (std::abs(x[j] - e) <= ell) gaps.push_back(scale * (x[j + 1] - x[j]));
    return gaps;
}

// ---------------------------------------------------------------------------
// Gap density Lambda(E; s)
// = #{ j : x_{j+1}-x_j <= s/(N rho(E)), |x_j - E| <= ell } / (2 N ell rho(E))
// ---------------------------------------------------------------------------

struct GapStatistics {
    double e = 0.0, ell = 0.0;
    std::vector<double> rescaled_gaps;  // unsorted, window order
    std::vector<double> s_grid;
    std::vector<double> lambda;  // Lambda(E; s) on s_grid
};

inline GapStatistics gap_statistics(const std::vector<double>& x, const DensityModel& m, double e,
                                    double ell, const std::vector<double>& s_grid) {
    require_bulk(m, e);
    GapStatistics out;
    out.e = e;
    out.ell = ell;
    out.s_grid = s_grid;
    out.rescaled_gaps = bulk_rescaled_gaps(x, m, e, ell);
    const double norm = 2.0 * static_cast<double>(x.size()) * ell * rho(m, e);
    std::vector<double> sorted = out.rescaled_gaps;
    std::sort(sorted.begin(), sorted.end());
    out.lambda.reserve(s_grid.size());
    for (double s : s_grid) {
        auto it = std::upper_bound(sorted.begin(), sorted.end(), s);
        out.lambda.push_back(static_cast<double>(it - sorted.begin()) / norm);
    }
    return out;
}

inline GapStatistics gap_statistics(const SpectralPoints& pts, const DensityModel& m, double e,
                                    double ell, const std::vector<double>& s_grid) {
    return gap_statistics(pts.values, m, e, ell, s_grid);
}

// ---------------------------------------------------------------------------
// Energy-averaged rescaled correlation estimator (orders 1..3).
//
// Realizes the histogram version of the correlation-function average: for
// each sample and each E' on a sub-grid of [E-b, E+b], ordered tuples of
// distinct points are binned at
//   alpha_1 = N rho(E) (x_{i1} - E'),  alpha_k = N rho(E) (x_{i1} - x_{ik}),
// and counts are normalized by samples * E'-points * cell volume, so an
// indicator-box test function integrates the rescaled p^(n).
// ---------------------------------------------------------------------------

struct CorrelationEstimate {
    int order = 1;
    double e = 0.0, b = 0.0;
    std::vector<std::vector<double>> edges;  // per-dimension bin edges
    std::vector<std::int64_t> counts;        // row-major over bins
    std::vector<double> values;              // normalized estimate
    bool low_statistics = false;             // some expected bin count < 20
    std::size_t samples_used = 0;
    std::size_t eprime_points = 0;
};

namespace detail {

inline int find_bin(const std::vector<double>& edges, double v) {
    if (v < edges.front() || v >= edges.back()) return -1;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    return static_cast<int>(it - edges.begin()) - 1;
}

}  // namespace detail

inline CorrelationEstimate correlation_estimate(const std::vector<std::vector<double>>& samples,
                                                const DensityModel& m, int order, double e,
                                                double b,
                                                const std::vector<std::vector<double>>& edges,
                                                int eprime_points = 16) {
    if (order < 1 || order > 3) throw ConfigError("correlation_estimate: order in {1,2,3}");
    if (static_cast<int>(edges.size()) != order)
        throw ConfigError("correlation_estimate: need one edge vector per dimension");
    for (const auto& ev : edges)
        if (ev.size() < 2 || !is_strictly_increasing(ev))
            throw ConfigError("correlation_estimate: edges must increase");
    if (!(b > 0.0)) throw ConfigError("correlation_estimate: b > 0");
    require_bulk(m, e);

    CorrelationEstimate out;
    out.order = order;
    out.e = e;
    out.b = b;
    out.edges = edges;
    out.eprime_points = static_cast<std::size_t>(eprime_points);
    out.samples_used = samples.size();

    std::vector<std::size_t> dims, stride;
    std::size_t total = 1;
    for (const auto& ev : edges) dims.push_back(ev.size() - 1);
    stride.assign(dims.size(), 1);
    for (int k = order - 2; k >= 0; --k) stride[k] = stride[k + 1] * dims[k + 1];
    for (std::size_t d : dims) total *= d;
    out.counts.assign(total, 0);

    for (const auto& x : samples) {
        const double scale = static_cast<double>(x.size()) * rho(m, e);
        auto window = [&](double center, double alpha_lo, double alpha_hi) {
            // indices with alpha = scale*(x - center) in [alpha_lo, alpha_hi)
            double lo = center + alpha_lo / scale, hi = center + alpha_hi / scale;
            auto i0 = std::lower_bound(x.begin(), x.end(), lo);
            auto i1 = std::lower_bound(x.begin(), x.end(), hi);
            return std::pair<std::size_t, std::size_t>(i0 - x.begin(), i1 - x.begin());
        };
        for (int k = 0; k < eprime_points; ++k) {
            double ep = e - b + (k + 0.5) * (2.0 * b / eprime_points);
            auto [i_lo, i_hi] = window(ep, edges[0].front(), edges[0].back());
            for (std::size_t i = i_lo; i < i_hi; ++i) {
                int b1 = detail::find_bin(edges[0], scale * (x[i] - ep));
                if (b1 < 0) continue;
                if (order == 1) {
                    ++out.counts[static_cast<std::size_t>(b1)];
                    continue;
                }
                // second index: alpha2 = scale*(x_i - x_j) within range
                auto [j_lo, j_hi] = window(x[i], -edges[1].back(), -edges[1].front());
                for (std::size_t j = j_lo; j < j_hi; ++j) {
                    if (j == i) continue;
                    int b2 = detail::find_bin(edges[1], scale * (x[i] - x[j]));
                    if (b2 < 0) continue;
                    if (order == 2) {
                        ++out.counts[static_cast<std::size_t>(b1) * stride[0] +
                                     static_cast<std::size_t>(b2)];
                        continue;
                    }
                    auto [l_lo, l_hi] = window(x[i], -edges[2].back(), -edges[2].front());
                    for (std::size_t l = l_lo; l < l_hi; ++l) {
                        if (l == i || l == j) continue;
                        int b3 = detail::find_bin(edges[2], scale * (x[i] - x[l]));
                        if (b3 < 0) continue;
                        ++out.counts[static_cast<std::size_t>(b1) * stride[0] +
                                     static_cast<std::size_t>(b2) * stride[1] +
                                     static_cast<std::size_t>(b3)];
                    }
                }
            }
        }
    }

    const double denom = static_cast<double>(samples.size()) * eprime_points;
    out.values.assign(total, 0.0);
    std::int64_t min_count = total ? out.counts[0] : 0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        // cell volume from the multi-index
        std::size_t rem = idx;
        double vol = 1.0;
        for (int k = 0; k < order; ++k) {
            std::size_t ik = rem / stride[k];
            rem %= stride[k];
            vol *= edges[k][ik + 1] - edges[k][ik];
        }
        out.values[idx] = static_cast<double>(out.counts[idx]) / (denom * vol);
        min_count = std::min(min_count, out.counts[idx]);
    }
    out.low_statistics = (min_count < 20);
    return out;
}

// ---------------------------------------------------------------------------
// Chained-gap observable (1/N) sum_{i in J} G(N(x_i - x_{i+m_1}),
//                                             N(x_{i+m_1} - x_{i+m_2}), ...)
// Terms with i + m_n beyond the last point contribute zero.
// Indices in J and the points are 0-based.
// ---------------------------------------------------------------------------

inline double observable_g(const std::vector<double>& x, const std::vector<int>& J,
                           const std::vector<int>& m,
                           const std::function<double(const std::vector<double>&)>& g) {
    if (m.empty()) throw ConfigError("observable_g: need at least one offset");
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (m[k] < 1 || (k > 0 && m[k] <= m[k - 1]))
            throw ConfigError("observable_g: offsets must be increasing positive");
    }
    const int n = static_cast<int>(x.size());
    const double scale = static_cast<double>(n);
    std::vector<double> args(m.size());
    double s = 0.0;
    for (int i : J) {
        if (i < 0) throw ConfigError("observable_g: negative index");
        if (i + m.back() >= n) continue;  // vanishing convention
        int prev = i;
        for (std::size_t k = 0; k < m.size(); ++k) {
            int cur = i + m[k];
            args[k] = scale * (x[prev] - x[cur]);
            prev = cur;
        }
        s += g(args);
    }
    return s / scale;
}

// ---------------------------------------------------------------------------
// Counting-function tail: empirical P( N_I >= K * N * |I| ) on a K-grid.
// ---------------------------------------------------------------------------

inline std::vector<double> counting_tail(const std::vector<std::vector<double>>& samples,
                                         double lo, double hi,
                                         const std::vector<double>& k_grid) {
    if (!(hi > lo)) throw ConfigError("counting_tail: empty interval");
    if (samples.empty()) throw ConfigError("counting_tail: no samples");
    std::vector<double> tail(k_grid.size(), 0.0);
    for (const auto& x : samples) {
        auto a = std::lower_bound(x.begin(), x.end(), lo);
        auto b2 = std::upper_bound(x.begin(), x.end(), hi);
        double count = static_cast<double>(b2 - a);
        double expect = static_cast<double>(x.size()) * (hi - lo);
        for (std::size_t k = 0; k < k_grid.size(); ++k)
            if (count >= k_grid[k] * expect) tail[k] += 1.0;
    }
    for (double& v : tail) v /= static_cast<double>(samples.size());
    return tail;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov distances
// ---------------------------------------------------------------------------

// two-sample
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ConfigError("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double best = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

// one-sample against a reference CDF
inline double ks_distance(std::vector<double> a, const std::function<double(double)>& cdf_ref) {
    if (a.empty()) throw ConfigError("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    double n = static_cast<double>(a.size());
    double best = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double f = cdf_ref(a[i]);
        best = std::max(best, std::abs(f - static_cast<double>(i) / n));
        best = std::max(best, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return best;
}

inline double ks_distance(const std::vector<double>& a, const DensityModel& m) {
    return ks_distance(a, [&](double x) { return cdf(m, x); });
}

}  // namespace rmtlab
