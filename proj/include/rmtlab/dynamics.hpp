#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rmtlab/common.hpp"
#include "rmtlab/ensembles.hpp"

namespace rmtlab {

// ---------------------------------------------------------------------------
// Eigenvalue / singular-value flows.
//
//   dbm:              dx_i = dB_i/sqrt(N) + beta[ -x_i/4 + (1/2N) sum 1/(x_i-x_j) ] dt
//   covariance-flow:  dx_i = dB_i/sqrt(N) + [ -beta x_i/(2d)
//                        + (beta/2N) sum ( 1/(x_i-x_j) + 1/(x_i+x_j) )
//                        + (1/2)(beta(1/d-1) + (beta-1)/N) / x_i ] dt
//   local-relaxation: base drift - (x_i - gamma_i)/(2 R^2)
//
// Each drift equals -(1/2N) * grad(N*H) of the matching Hamiltonian; the
// relaxation term uses the reversibility-consistent -(1/2)W_j'.
// Euler-Maruyama with collision-adaptive halving keeps the ordering that the
// continuum process preserves for beta >= 1.
// ---------------------------------------------------------------------------

enum class DriftKind { Dbm, CovarianceFlow, LocalRelaxation };

struct FlowConfig {
    DriftKind drift = DriftKind::Dbm;
    DriftKind base = DriftKind::Dbm;  // interaction under local-relaxation
    double beta = 2.0;
    double d = 0.0;  // covariance-flow only
    double dt = 1e-3;
    double horizon = 1.0;
    double r = 0.0;             // R, local-relaxation only
    std::vector<double> gamma;  // classical locations, local-relaxation only
    double collision_floor = 1e-8;
    std::uint64_t seed = 0;

    bool positivity_required() const {
        return drift == DriftKind::CovarianceFlow ||
               (drift == DriftKind::LocalRelaxation && base == DriftKind::CovarianceFlow);
    }

    void validate(int n) const {
        if (!(beta >= 1.0)) throw ConfigError("flow: beta >= 1");
        if (!(dt > 0.0)) throw ConfigError("flow: dt > 0");
        if (!(horizon >= 0.0)) throw ConfigError("flow: horizon >= 0");
        if (dt > horizon && horizon > 0.0) throw ConfigError("flow: dt <= horizon required");
        if (!(collision_floor > 0.0)) throw ConfigError("flow: collision_floor > 0");
        if (drift == DriftKind::CovarianceFlow ||
            (drift == DriftKind::LocalRelaxation && base == DriftKind::CovarianceFlow)) {
            if (!(d > 0.0 && d < 1.0)) throw ConfigError("flow: covariance-flow needs d in (0,1)");
        }
        if (drift == DriftKind::LocalRelaxation) {
            if (!(r > 0.0)) throw ConfigError("flow: local-relaxation needs r > 0");
            if (static_cast<int>(gamma.size()) != n)
                throw ConfigError("flow: gamma length must match N");
            if (base == DriftKind::LocalRelaxation) throw ConfigError("flow: invalid base drift");
        }
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    FlowConfig config;
};

namespace detail {

inline void check_flow_state(const FlowConfig& cfg, const std::vector<double>& x) {
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1])) throw ConfigError("flow state must be strictly increasing");
        if (x[i] - x[i - 1] < 1e-12) throw SingularConfigError("coincident flow state");
    }
    if (cfg.positivity_required() && !(x.front() > 0.0))
        throw ConfigError("covariance-flow state must be positive");
}

inline void add_interaction_dbm(double beta, const std::vector<double>& x,
                                std::vector<double>& f) {
    const int n = static_cast<int>(x.size());
    const double c = beta / (2.0 * n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double inv = c / (x[i] - x[j]);
            f[i] += inv;
            f[j] -= inv;
        }
}

}  // namespace detail

inline std::vector<double> drift_vector(const FlowConfig& cfg, const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    cfg.validate(n);
    detail::check_flow_state(cfg, x);
    std::vector<double> f(x.size(), 0.0);
    const DriftKind kind = cfg.drift == DriftKind::LocalRelaxation ? cfg.base : cfg.drift;

    if (kind == DriftKind::Dbm) {
        for (int i = 0; i < n; ++i) f[i] = -cfg.beta * x[i] / 4.0;
        detail::add_interaction_dbm(cfg.beta, x, f);
    } else {
        const double cdiag = 0.5 * (cfg.beta * (1.0 / cfg.d - 1.0) + (cfg.beta - 1.0) / n);
        for (int i = 0; i < n; ++i) f[i] = -cfg.beta * x[i] / (2.0 * cfg.d) + cdiag / x[i];
        const double c = cfg.beta / (2.0 * n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double invm = c / (x[i] - x[j]), invp = c / (x[i] + x[j]);
                f[i] += invm + invp;
                f[j] += -invm + invp;
            }
    }
    if (cfg.drift == DriftKind::LocalRelaxation) {
        const double rr = 2.0 * cfg.r * cfg.r;
        for (int i = 0; i < n; ++i) f[i] -= (x[i] - cfg.gamma[i]) / rr;
    }
    return f;
}

// One raw Euler-Maruyama move: x + drift*dt + noise*sqrt(dt/N).
inline std::vector<double> em_move(const FlowConfig& cfg, const std::vector<double>& x, double dt,
                                   const std::vector<double>& noise) {
    if (noise.size() != x.size()) throw ConfigError("em_move: noise length mismatch");
    std::vector<double> f = drift_vector(cfg, x);
    const double amp = std::sqrt(dt / static_cast<double>(x.size()));
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + f[i] * dt + amp * noise[i];
    return y;
}

namespace detail {

inline bool admissible(const FlowConfig& cfg, const std::vector<double>& y) {
    if (cfg.positivity_required() && !(y.front() >= cfg.collision_floor)) return false;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (!(y[i] - y[i - 1] >= cfg.collision_floor)) return false;
    return true;
}

inline double min_gap(const FlowConfig& cfg, const std::vector<double>& x) {
    double g = cfg.positivity_required() ? x.front() : std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < x.size(); ++i) g = std::min(g, x[i] - x[i - 1]);
    return g;
}

}  // namespace detail

// Advance exactly dt.  Sub-steps are capped by the collision-safe bound
// dt <= (min gap)^2 N / 10, re-evaluated on the current state; a proposal
// that violates ordering, positivity, or the collision floor is retried with
// half the sub-step (fresh noise), up to 40 consecutive halvings.
inline std::vector<double> step(const FlowConfig& cfg, const std::vector<double>& x, double dt,
                                Rng& rng) {
    cfg.validate(static_cast<int>(x.size()));
    detail::check_flow_state(cfg, x);
    const double n = static_cast<double>(x.size());

    std::vector<double> cur = x;
    std::vector<double> noise(x.size());
    double remaining = dt;
    long substeps = 0;
    while (remaining > 1e-15 * dt) {
        if (++substeps > 20000000)
            throw StiffnessError("flow step: sub-step budget exhausted (persistently tiny gaps)");
        const double gap = detail::min_gap(cfg, cur);
        const double bound = gap * gap * n / 10.0;
        double sub = std::min(remaining, bound);
        if (!(sub > 0.0)) throw StiffnessError("flow step: collision-safe bound underflow");

        int halvings = 0;
        for (;;) {
            for (double& z : noise) z = rng.normal();
            std::vector<double> y = em_move(cfg, cur, sub, noise);
            if (detail::admissible(cfg, y)) {
                cur = std::move(y);
                remaining -= sub;
                break;
            }
            if (++halvings > 40)
                throw StiffnessError("flow step: 40 halvings exhausted at gap " +
                                     std::to_string(gap));
            sub /= 2;
        }
    }
    return cur;
}

// Integrate from the initial spectrum, recording the state at sample_times.
// Deterministic for a fixed config.seed.
inline Trajectory run_flow(const SpectralPoints& initial, const FlowConfig& cfg,
                           const std::vector<double>& sample_times) {
    const int n = static_cast<int>(initial.values.size());
    cfg.validate(n);
    for (std::size_t k = 0; k < sample_times.size(); ++k) {
        if (sample_times[k] < 0.0 || sample_times[k] > cfg.horizon + 1e-15)
            throw ConfigError("run_flow: sample times must lie in [0, horizon]");
        if (k > 0 && !(sample_times[k] > sample_times[k - 1]))
            throw ConfigError("run_flow: sample times must increase");
    }
    Rng rng(cfg.seed);
    Trajectory traj;
    traj.config = cfg;

    std::vector<double> x = initial.values;
    detail::check_flow_state(cfg, x);
    double t = 0.0;
    for (double target : sample_times) {
        while (target - t > 1e-15) {
            double dt = std::min(cfg.dt, target - t);
            try {
                x = step(cfg, x, dt, rng);
            } catch (const StiffnessError& e) {
                throw NumericError(e.what(), cfg.seed);
            }
            t += dt;
        }
        traj.times.push_back(target);
        traj.states.push_back(x);
    }
    return traj;
}

// sum_j (x_j - gamma_j)^2 at each sampled time (the Monte Carlo kernel of the
// rigidity quantity Q; callers average over trajectories).
inline std::vector<double> rigidity_q(const Trajectory& traj, const std::vector<double>& gamma) {
    std::vector<double> out;
    out.reserve(traj.states.size());
    for (const auto& x : traj.states) {
        if (x.size() != gamma.size()) throw ConfigError("rigidity_q: gamma length mismatch");
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            double dx = x[j] - gamma[j];
            s += dx * dx;
        }
        out.push_back(s);
    }
    return out;
}

// CSV export: time,k,value
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "time,k,value\n";
    char buf[64];
    for (std::size_t ti = 0; ti < traj.times.size(); ++ti)
        for (std::size_t k = 0; k < traj.states[ti].size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", traj.states[ti][k]);
            os << traj.times[ti] << ',' << k << ',' << buf << '\n';
        }
}

// Binary checkpoint, little-endian: magic "RMTRAJ01", uint32 N, uint32 T,
// T doubles (times), then T*N doubles (states, row-major by time).
inline void write_trajectory_checkpoint(std::ostream& os, const Trajectory& traj) {
    const char magic[8] = {'R', 'M', 'T', 'R', 'A', 'J', '0', '1'};
    os.write(magic, 8);
    std::uint32_t n = traj.states.empty() ? 0 : static_cast<std::uint32_t>(traj.states[0].size());
    std::uint32_t t = static_cast<std::uint32_t>(traj.times.size());
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&t), 4);
    os.write(reinterpret_cast<const char*>(traj.times.data()), sizeof(double) * t);
    for (const auto& row : traj.states)
        os.write(reinterpret_cast<const char*>(row.data()), sizeof(double) * n);
}

inline Trajectory read_trajectory_checkpoint(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (std::string(magic, 8) != "RMTRAJ01") throw ConfigError("checkpoint: bad magic");
    std::uint32_t n = 0, t = 0;
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&t), 4);
    Trajectory traj;
    traj.times.resize(t);
    is.read(reinterpret_cast<char*>(traj.times.data()), sizeof(double) * t);
    traj.states.assign(t, std::vector<double>(n));
    for (auto& row : traj.states) is.read(reinterpret_cast<char*>(row.data()), sizeof(double) * n);
    if (!is) throw ConfigError("checkpoint: truncated");
    return traj;
}

}  // namespace rmtlab
