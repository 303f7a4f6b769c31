#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmtlab {

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

// Invalid parameters (bad dimensions, d outside (0,1), unknown names, ...).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numeric failure at runtime; carries the seed that produced it so the run
// can be reproduced in isolation.
struct NumericError : std::runtime_error {
    std::uint64_t seed;
    NumericError(const std::string& msg, std::uint64_t s)
        : std::runtime_error(msg + " (seed " + std::to_string(s) + ")"), seed(s) {}
};

// Configuration with coincident points where the log interaction is singular.
struct SingularConfigError : std::domain_error {
    using std::domain_error::domain_error;
};

// SDE step-halving exhausted.
struct StiffnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// RNG
//
// mt19937_64 seeded through splitmix64 so that nearby user seeds give
// unrelated streams.  Gaussians come from the polar method rather than
// std::normal_distribution, which keeps the byte-level output independent of
// the standard library implementation.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Stream seed for worker `idx` derived from a base seed.
inline std::uint64_t derive_stream(std::uint64_t base, std::uint64_t idx) {
    std::uint64_t s = base;
    std::uint64_t a = splitmix64(s);
    s = base ^ (0xD1B54A32D192ED03ull * (idx + 1));
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t s = seed;
        std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
        gen_.seed(seq);
    }

    std::uint64_t seed() const { return seed_; }

    // uniform on (0,1)
    double uniform01() {
        for (;;) {
            double u = (gen_() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // standard normal, Marsaglia polar
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    bool coin() { return (gen_() >> 63) != 0; }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    std::uint64_t seed_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ConfigError("quantile of empty sample");
    if (q <= 0) return sorted.front();
    if (q >= 1) return sorted.back();
    double pos = q * (static_cast<double>(sorted.size()) - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1 - frac) + sorted[lo + 1] * frac;
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_slope: need >= 2 points");
    double xm = mean(x), ym = mean(y), num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - xm) * (y[i] - ym);
        den += (x[i] - xm) * (x[i] - xm);
    }
    return num / den;
}

inline bool is_strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

}  // namespace rmtlab
