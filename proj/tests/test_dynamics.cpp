#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rmtlab/density.hpp"
#include "rmtlab/dynamics.hpp"
#include "rmtlab/ensembles.hpp"
#include "rmtlab/gibbs.hpp"
#include "rmtlab/statistics.hpp"

using namespace rmtlab;

namespace {

FlowConfig dbm(double beta, double dt = 1e-3, double horizon = 1.0, std::uint64_t seed = 0) {
    FlowConfig c;
    c.drift = DriftKind::Dbm;
    c.beta = beta;
    c.dt = dt;
    c.horizon = horizon;
    c.seed = seed;
    return c;
}

SpectralPoints points_of(std::vector<double> v) {
    SpectralPoints p;
    p.values = std::move(v);
    return p;
}

}  // namespace

TEST(Drift, HandValueAtTwoParticles) {
    auto f = drift_vector(dbm(2.0), {-1.0, 1.0});
    EXPECT_NEAR(f[0], 0.25, 1e-15);
    EXPECT_NEAR(f[1], -0.25, 1e-15);
}

TEST(Drift, LocalRelaxationVanishingWTerm) {
    FlowConfig c = dbm(2.0);
    c.drift = DriftKind::LocalRelaxation;
    c.base = DriftKind::Dbm;
    c.r = 0.3;
    c.gamma = {-1.0, 0.0, 1.0};
    std::vector<double> x = c.gamma;  // at the classical locations W' = 0
    auto f = drift_vector(c, x);
    auto fd = drift_vector(dbm(2.0), x);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(f[i], fd[i]);

    // off gamma the confinement pulls with -(x - gamma)/(2 R^2)
    std::vector<double> y = {-1.0, 0.2, 1.0};
    auto fy = drift_vector(c, y);
    auto fdy = drift_vector(dbm(2.0), y);
    EXPECT_NEAR(fy[1] - fdy[1], -0.2 / (2.0 * 0.3 * 0.3), 1e-12);
}

// Cross-module generator identity: drift = -(1/2N) grad(N*H).
TEST(Drift, MatchesGibbsGradient) {
    Rng rng(17);
    const int n = 10;
    std::vector<double> xw(n), xc(n);
    for (int i = 0; i < n; ++i) xw[i] = -2.0 + 0.41 * i + 0.05 * rng.uniform01();
    for (int i = 0; i < n; ++i) xc[i] = 0.3 + 0.28 * i + 0.05 * rng.uniform01();

    for (double beta : {1.0, 2.0, 4.0}) {
        auto f = drift_vector(dbm(beta), xw);
        HamiltonianSpec hs;
        hs.kind = HamiltonianKind::Wigner;
        hs.beta = beta;
        hs.n = n;
        auto g = grad(hs, xw);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(f[i], -g[i] / (2.0 * n), 1e-12);
    }
    for (double beta : {1.0, 2.0}) {
        FlowConfig c = dbm(beta);
        c.drift = DriftKind::CovarianceFlow;
        c.d = 0.5;
        auto f = drift_vector(c, xc);
        HamiltonianSpec hs;
        hs.kind = HamiltonianKind::Covariance;
        hs.beta = beta;
        hs.n = n;
        hs.d = 0.5;
        auto g = grad(hs, xc);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(f[i], -g[i] / (2.0 * n), 1e-12);
    }
}

// Local relaxation = base generator minus (1/2) W_j' at the drift level.
TEST(Drift, RelaxationDecompositionExact) {
    Rng rng(18);
    const int n = 8;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = -2.0 + 0.5 * i + 0.1 * rng.uniform01();
    FlowConfig c = dbm(1.0);
    c.drift = DriftKind::LocalRelaxation;
    c.r = 0.25;
    c.gamma.assign(n, 0.0);
    for (int i = 0; i < n; ++i) c.gamma[i] = -2.0 + 0.5 * i;
    auto f = drift_vector(c, x);
    auto fb = drift_vector(dbm(1.0), x);
    for (int i = 0; i < n; ++i)
        EXPECT_NEAR(f[i] - fb[i], -(x[i] - c.gamma[i]) / (2.0 * c.r * c.r), 1e-13);
}

TEST(Step, ZeroNoiseAtCriticalPoint) {
    // drift vanishes at x = (-a, a) with a = sqrt(1/2) for N=2 dbm
    double a = std::sqrt(0.5);
    std::vector<double> x{-a, a}, noise{0.0, 0.0};
    auto y = em_move(dbm(2.0), x, 1e-3, noise);
    EXPECT_NEAR(y[0], x[0], 1e-15);
    EXPECT_NEAR(y[1], x[1], 1e-15);
}

TEST(Step, SingleParticleOuClosedForm) {
    // N=1, beta=2: dx = -x/2 dt; one Euler step matches exp(-dt/2) to O(dt^2)
    double x0 = 1.7, dt = 1e-2;
    auto y = em_move(dbm(2.0, dt, 1.0), {x0}, dt, {0.0});
    EXPECT_NEAR(y[0], x0 * std::exp(-dt / 2.0), dt * dt * std::abs(x0));
}

TEST(Step, OrderingPreservedLongRun) {
    // 1e5 Euler-Maruyama steps at N=50 without an ordering violation
    auto pts = spectrum(sample([] {
        EnsembleSpec s;
        s.kind = EnsembleKind::WignerSymmetric;
        s.n = 50;
        s.seed = 4;
        return s;
    }()));
    FlowConfig c = dbm(1.0, 1e-5, 1.0, 11);
    Rng rng(11);
    std::vector<double> x = pts.values;
    for (int k = 0; k < 100000; ++k) {
        x = step(c, x, 1e-5, rng);
        // strict ordering enforced on every emitted state
        if (k % 10000 == 0) ASSERT_TRUE(is_strictly_increasing(x));
    }
    EXPECT_TRUE(is_strictly_increasing(x));
}

TEST(Step, PositivityPreservedCovarianceFlow) {
    FlowConfig c;
    c.drift = DriftKind::CovarianceFlow;
    c.beta = 2.0;
    c.d = 0.5;
    c.dt = 1e-4;
    c.horizon = 0.5;
    c.seed = 5;
    EnsembleSpec spec;
    spec.kind = EnsembleKind::CovarianceComplex;
    spec.n = 30;
    spec.m = 60;
    spec.seed = 5;
    auto x = spectrum(sample(spec)).values;
    Rng rng(5);
    for (int k = 0; k < 5000; ++k) {
        x = step(c, x, 1e-4, rng);
        ASSERT_GT(x.front(), 0.0);
    }
    EXPECT_TRUE(is_strictly_increasing(x));
}

TEST(Step, StiffnessErrorAfterFortyHalvings) {
    FlowConfig c = dbm(2.0, 1e-3, 1.0, 9);
    c.collision_floor = 1e-8;
    Rng rng(9);
    EXPECT_THROW(step(c, {0.0, 1e-9}, 1e-3, rng), StiffnessError);
}

TEST(RunFlow, HorizonZeroReturnsInitialOnly) {
    auto initial = points_of({-1.0, 0.0, 1.0});
    FlowConfig c = dbm(2.0, 1e-3, 0.0, 3);
    auto traj = run_flow(initial, c, {0.0});
    ASSERT_EQ(traj.times.size(), 1u);
    EXPECT_EQ(traj.states[0], initial.values);
}

TEST(RunFlow, ValidatesSampleTimes) {
    auto initial = points_of({-1.0, 1.0});
    FlowConfig c = dbm(2.0, 1e-3, 1.0, 3);
    EXPECT_THROW(run_flow(initial, c, {0.5, 0.4}), ConfigError);
    EXPECT_THROW(run_flow(initial, c, {2.0}), ConfigError);
    EXPECT_THROW(run_flow(initial, c, {-0.1}), ConfigError);
}

TEST(RunFlow, DeterministicPerSeed) {
    auto initial = points_of({-1.3, -0.4, 0.2, 1.1});
    FlowConfig c = dbm(1.0, 1e-4, 0.05, 77);
    auto a = run_flow(initial, c, {0.05});
    auto b = run_flow(initial, c, {0.05});
    EXPECT_EQ(a.states[0], b.states[0]);
}

TEST(RigidityQ, FrozenTrajectoryIsZero) {
    Trajectory traj;
    traj.times = {0.0, 1.0};
    traj.states = {{-1.0, 1.0}, {-1.0, 1.0}};
    auto q = rigidity_q(traj, {-1.0, 1.0});
    EXPECT_EQ(q[0], 0.0);
    EXPECT_EQ(q[1], 0.0);
    EXPECT_THROW(rigidity_q(traj, {0.0}), ConfigError);
}

// Single-particle OU variance evolution against the closed form
// v(t) = 1 - exp(-t) for beta=2 started from x=0.
TEST(RigidityQ, SingleParticleOuVariance) {
    const int paths = 30000;
    std::vector<double> times{0.25, 0.5, 1.0};
    std::vector<double> acc(times.size(), 0.0);
    for (int p = 0; p < paths; ++p) {
        FlowConfig c = dbm(2.0, 5e-3, 1.0, 100000 + p);
        auto traj = run_flow(points_of({0.0}), c, times);
        auto q = rigidity_q(traj, {0.0});
        for (std::size_t k = 0; k < times.size(); ++k) acc[k] += q[k];
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        double expected = 1.0 - std::exp(-times[k]);
        EXPECT_NEAR(acc[k] / paths, expected, 0.02 * expected);
    }
}

// Halving dt moves the terminal gap distribution by less than the Monte
// Carlo error band (weak order-1 sanity).
TEST(RunFlow, StepSizeRobustnessOnGapStatistics) {
    const int seeds = 16, n = 100;
    auto model = DensityModel::semicircle();
    std::vector<double> coarse, fine;
    for (int s = 0; s < seeds; ++s) {
        EnsembleSpec spec;
        spec.kind = EnsembleKind::WignerHermitian;
        spec.n = n;
        spec.seed = 42000 + s;
        auto initial = spectrum(sample(spec));
        for (double dt : {2e-4, 1e-4}) {
            FlowConfig c = dbm(2.0, dt, 0.1, 9000 + s);
            auto traj = run_flow(initial, c, {0.1});
            auto gaps = bulk_rescaled_gaps(traj.states[0], model, 0.0, 0.6);
            auto& dst = dt == 2e-4 ? coarse : fine;
            dst.insert(dst.end(), gaps.begin(), gaps.end());
        }
    }
    EXPECT_LE(ks_distance(coarse, fine), 0.06);
}

TEST(Trajectory, CsvAndCheckpointRoundTrip) {
    auto initial = points_of({-1.0, 0.0, 1.5});
    FlowConfig c = dbm(1.0, 1e-3, 0.01, 13);
    auto traj = run_flow(initial, c, {0.005, 0.01});

    std::ostringstream csv;
    write_trajectory_csv(csv, traj);
    EXPECT_NE(csv.str().find("time,k,value"), std::string::npos);

    std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
    write_trajectory_checkpoint(bin, traj);
    auto back = read_trajectory_checkpoint(bin);
    ASSERT_EQ(back.times.size(), traj.times.size());
    for (std::size_t t = 0; t < traj.times.size(); ++t) {
        EXPECT_EQ(back.times[t], traj.times[t]);
        EXPECT_EQ(back.states[t], traj.states[t]);
    }
}

TEST(FlowConfig, ValidationErrors) {
    FlowConfig c = dbm(0.5);
    EXPECT_THROW(c.validate(4), ConfigError);  // beta < 1
    c = dbm(2.0);
    c.drift = DriftKind::LocalRelaxation;
    EXPECT_THROW(c.validate(4), ConfigError);  // missing r/gamma
    c.r = 0.5;
    c.gamma = {0.0, 1.0};
    EXPECT_THROW(c.validate(4), ConfigError);  // gamma length
    FlowConfig cov = dbm(2.0);
    cov.drift = DriftKind::CovarianceFlow;
    EXPECT_THROW(cov.validate(4), ConfigError);  // d missing
}

// Gap statistics after a short OU time move toward GUE monotonically in tau
// (within the Monte Carlo band; pinned seeds).
TEST(RunFlow, RademacherGapsApproachGueUnderFlow) {
    const int n = 400, seeds = 24;
    const double eps = 0.4, delta = 0.2;
    const double tau = std::pow(n, -2.0 * eps + delta);
    auto model = DensityModel::semicircle();
    const double ell = std::pow(n, -0.1);

    std::vector<std::vector<double>> pooled(4);
    std::vector<double> gue_gaps;
    for (int s = 0; s < seeds; ++s) {
        EnsembleSpec spec;
        spec.kind = EnsembleKind::WignerHermitian;
        spec.entry_dist = EntryDist::Rademacher;
        spec.n = n;
        spec.seed = 60000 + s;
        auto initial = spectrum(sample(spec));
        FlowConfig c = dbm(2.0, 2e-5, tau, 70000 + s);
        auto traj = run_flow(initial, c, {tau / 4, tau / 2, tau});
        auto g0 = bulk_rescaled_gaps(initial.values, model, 0.0, ell);
        pooled[0].insert(pooled[0].end(), g0.begin(), g0.end());
        for (int leg = 0; leg < 3; ++leg) {
            auto g = bulk_rescaled_gaps(traj.states[leg], model, 0.0, ell);
            pooled[leg + 1].insert(pooled[leg + 1].end(), g.begin(), g.end());
        }
        EnsembleSpec gspec = spec;
        gspec.entry_dist = EntryDist::Gaussian;
        gspec.seed = 80000 + s;
        auto gg = bulk_rescaled_gaps(spectrum(sample(gspec)).values, model, 0.0, ell);
        gue_gaps.insert(gue_gaps.end(), gg.begin(), gg.end());
    }
    std::vector<double> ks;
    for (auto& g : pooled) ks.push_back(ks_distance(g, gue_gaps));
    // monotone approach within the Monte Carlo error band
    EXPECT_LE(ks[3], ks[0] + 0.01);
    for (int k = 0; k < 3; ++k) EXPECT_LE(ks[k + 1], ks[k] + 0.02) << "leg " << k;
}
