#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rmtlab/common.hpp"
#include "rmtlab/relaxation1d.hpp"

using namespace rmtlab;

namespace {

double l1_gamma_distance(const GridDensity& a, const std::vector<double>& b) {
    double err = 0.0;
    for (int i = 0; i < a.npoints; ++i)
        err += a.weight(i) * a.gamma(a.x(i)) * std::abs(b[static_cast<std::size_t>(i)] -
                                                        a.values[static_cast<std::size_t>(i)]);
    return err;
}

GridDensity bimodal(double beta, double L, int n) {
    auto g = GridDensity::flat(beta, L, n);
    for (int i = 0; i < n; ++i) {
        double x = g.x(i);
        g.values[static_cast<std::size_t>(i)] +=
            0.45 * std::exp(-(x - 1.4) * (x - 1.4) / 2.0) +
            0.35 * std::exp(-(x + 1.6) * (x + 1.6) / 1.8);
    }
    g.normalize();
    return g;
}

}  // namespace

TEST(OuEvolve, UniformDensityIsExactFixedPoint) {
    auto ones = GridDensity::flat(1.0);
    auto ev = ou_evolve(ones, 1.0);
    double worst = 0.0;
    for (double v : ev.values) worst = std::max(worst, std::abs(v - 1.0));
    EXPECT_LE(worst, 1e-10);
}

// first Hermite eigenfunction: 1 + eps x decays with rate beta/2
TEST(OuEvolve, FirstHermiteModeDecay) {
    auto g = GridDensity::flat(1.0);
    const double eps = 1e-2;
    for (int i = 0; i < g.npoints; ++i) g.values[static_cast<std::size_t>(i)] = 1.0 + eps * g.x(i);
    auto ev = ou_evolve(g, 1.0);
    double worst = 0.0;
    for (int i = 0; i < g.npoints; ++i)
        worst = std::max(worst,
                         std::abs(ev.values[static_cast<std::size_t>(i)] -
                                  (1.0 + eps * g.x(i) * std::exp(-0.5))));
    EXPECT_LE(worst, 1e-6);
}

TEST(OuEvolve, MassConservedOnStructuredDensity) {
    auto b = bimodal(1.0, 8.0, 4096);
    double m0 = b.mass();
    auto ev = ou_evolve(b, 1.0);
    EXPECT_LE(std::abs(ev.mass() - m0), 1e-8);
    EXPECT_GE(*std::min_element(ev.values.begin(), ev.values.end()), 0.0);
}

// grid-refinement oracle: the 4096-point answer agrees with a 16384-point
// solve of the same problem in L1(gamma)
TEST(OuEvolve, BimodalMatchesFineGridOracle) {
    auto coarse = bimodal(1.0, 8.0, 4096);
    auto fine = bimodal(1.0, 8.0, 16384);
    auto ev_c = ou_evolve(coarse, 0.5);
    auto ev_f = ou_evolve(fine, 0.5);
    // compare on the coarse nodes (every 4th fine node: 16384 = 4*4096 - 3 off;
    // use matching geometry instead)
    double err = 0.0;
    for (int i = 0; i < coarse.npoints; ++i) {
        double x = coarse.x(i);
        double p = (x + fine.length) / fine.h();
        int j = static_cast<int>(p + 0.5);
        j = std::max(1, std::min(fine.npoints - 2, j));
        double fv = detail::interp_cubic(fine, ev_f.values, x);
        err += coarse.weight(i) * coarse.gamma(x) *
               std::abs(ev_c.values[static_cast<std::size_t>(i)] - fv);
        (void)j;
    }
    EXPECT_LE(err, 1e-5);
}

TEST(OuEvolve, VarianceRelaxesTowardReference) {
    auto b = bimodal(2.0, 8.0, 4096);
    auto mean_of = [](const GridDensity& d) { return d.integral([](double x) { return x; }); };
    auto var_of = [&](const GridDensity& d) {
        double m = mean_of(d);
        return d.integral([m](double x) { return (x - m) * (x - m); });
    };
    double v0 = var_of(b);
    auto ev = ou_evolve(b, 1.5);
    double v1 = var_of(ev);
    double ref = 1.0 / b.beta_ref;
    EXPECT_LT(std::abs(v1 - ref), std::abs(v0 - ref));
    // OU preserves total mass on the way
    EXPECT_NEAR(ev.mass(), 1.0, 1e-8);
}

TEST(ApplyGenerator, PolynomialIdentities) {
    auto g = GridDensity::flat(1.5);
    std::vector<double> x2(static_cast<std::size_t>(g.npoints));
    for (int i = 0; i < g.npoints; ++i) x2[static_cast<std::size_t>(i)] = g.x(i) * g.x(i);
    auto bx2 = apply_ou_generator(g, x2, 2);
    for (int i = 4; i < g.npoints - 4; i += 97) {
        double expected = 1.0 - g.beta_ref * g.x(i) * g.x(i);  // B x^2 = 1 - beta x^2
        EXPECT_NEAR(bx2[static_cast<std::size_t>(i)], expected, 1e-7 * std::max(1.0, std::abs(expected)));
    }
}

TEST(ReverseFlow, TimeZeroIsNormalizedIdentity) {
    auto u = bimodal(1.0, 8.0, 2048);
    auto g0 = reverse_heat_flow(u, 0.0, 2);
    for (int i = 0; i < u.npoints; ++i)
        EXPECT_NEAR(g0.values[static_cast<std::size_t>(i)], u.values[static_cast<std::size_t>(i)],
                    1e-12);
}

TEST(ReverseFlow, UniformDensityUnchanged) {
    auto ones = GridDensity::flat(2.0);
    auto gt = reverse_heat_flow(ones, 0.05, 3);
    double worst = 0.0;
    for (double v : gt.values) worst = std::max(worst, std::abs(v - 1.0));
    EXPECT_LE(worst, 1e-12);  // B(1) = 0 and the adjustment is a no-op
}

TEST(ReverseFlow, OutputHasReferenceMoments) {
    auto u = compact_entry_density(1.0, 0.12);
    auto gt = reverse_heat_flow(u, 0.06, 3);
    EXPECT_NEAR(gt.mass(), 1.0, 1e-10);
    double mean = gt.integral([](double x) { return x; });
    double var = gt.integral([&](double x) { return (x - mean) * (x - mean); });
    EXPECT_NEAR(mean, 0.0, 1e-8);
    EXPECT_NEAR(var, 1.0 / gt.beta_ref, 1e-6);
    for (double v : gt.values) EXPECT_GT(v, 0.0);
}

TEST(ReverseFlow, PositivityViolationRaisesDomainError) {
    auto u = hermite4_entry_density(1.0, 0.16);
    EXPECT_THROW(reverse_heat_flow(u, 0.1, 3), std::domain_error);
    EXPECT_THROW(reverse_heat_flow(u, 0.2, 2), ConfigError);  // t > 0.1
    EXPECT_THROW(reverse_heat_flow(u, 0.01, 5), ConfigError);
}

// Construction-order property at small t, where the OU spectral content of
// the family is far from saturation: the fitted slope increases with K and
// approaches the theoretical order.
TEST(ReverseFlow, ConstructionOrderAtSmallTimes) {
    auto u = compact_entry_density(1.0, 0.12);
    std::vector<double> ts{0.0025, 0.00354, 0.005, 0.00707, 0.01};
    std::vector<double> slopes;
    for (int K : {1, 2, 3}) {
        std::vector<double> lt, le;
        for (double t : ts) {
            auto gt = reverse_heat_flow(u, t, K);
            auto fwd = ou_evolve(gt, t, 5e-5);
            lt.push_back(std::log(t));
            le.push_back(std::log(l1_gamma_distance(u, fwd.values)));
        }
        slopes.push_back(fit_slope(lt, le));
    }
    EXPECT_GE(slopes[0], 0.8);
    EXPECT_GE(slopes[1], 1.6);
    EXPECT_GE(slopes[2], 2.4);
    EXPECT_GT(slopes[1], slopes[0] + 0.5);
    EXPECT_GT(slopes[2], slopes[1] + 0.5);
}

TEST(GapChain, UniformIsStationaryWithZeroFunctionals) {
    GapChainConfig cfg;
    cfg.beta = 1.0;
    cfg.r = 0.5;
    cfg.gamma_gap = 2.0;
    auto grid = gap_chain_grid(cfg);
    std::vector<double> q(static_cast<std::size_t>(cfg.npoints), 1.0);
    EXPECT_NEAR(gap_chain_entropy(grid, q), 0.0, 1e-14);
    EXPECT_EQ(gap_chain_dirichlet(grid, q), 0.0);
    EXPECT_NEAR(gap_chain_mass(grid, q), 1.0, 1e-12);

    auto curves = fokker_planck_gap(cfg, q, {0.0, 0.1, 0.3});
    for (double s : curves.entropy) EXPECT_NEAR(s, 0.0, 1e-12);
    for (double d : curves.dirichlet) EXPECT_NEAR(d, 0.0, 1e-12);
}

TEST(GapChain, EntropyMonotoneMassConservedDissipationBounded) {
    GapChainConfig cfg;
    cfg.beta = 1.0;
    cfg.r = 0.5;
    cfg.gamma_gap = 2.0;
    std::vector<double> q0(static_cast<std::size_t>(cfg.npoints));
    for (int i = 0; i < cfg.npoints; ++i) {
        double uu = cfg.u(i);
        q0[static_cast<std::size_t>(i)] = 0.2 + std::exp(-(uu - 1.2) * (uu - 1.2) / 0.18);
    }
    std::vector<double> tg;
    for (double t = 0.0; t <= 0.401; t += 0.02) tg.push_back(t);
    auto curves = fokker_planck_gap(cfg, q0, tg);

    for (double m : curves.mass) EXPECT_NEAR(m, 1.0, 1e-8);
    for (std::size_t k = 1; k < curves.entropy.size(); ++k)
        EXPECT_LE(curves.entropy[k], curves.entropy[k - 1] + 1e-9);
    EXPECT_GT(curves.entropy.front(), 0.0);

    // dissipation shape: finite-difference dS/dt <= -0.95 D (the exact
    // identity carries a factor 4, so the margin is wide)
    for (std::size_t k = 1; k + 1 < tg.size(); ++k) {
        double fd = (curves.entropy[k + 1] - curves.entropy[k - 1]) / (tg[k + 1] - tg[k - 1]);
        EXPECT_LE(fd, -0.95 * curves.dirichlet[k] + 1e-12);
    }
}

// Logarithmic Sobolev scaling: the constant fitted at R = 0.5 covers the
// R = 0.25 chain after rescaling by R^2.
TEST(GapChain, LsiConstantScalesWithRSquared) {
    Rng rng(55);
    auto sweep = [&](double r, double cfit) {
        GapChainConfig cfg;
        cfg.beta = 1.0;
        cfg.r = r;
        cfg.gamma_gap = 2.0;
        auto grid = gap_chain_grid(cfg);
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> q(static_cast<std::size_t>(cfg.npoints));
            double c1 = rng.uniform(0.5, 3.5), w1 = rng.uniform(0.15, 0.8), a1 = rng.uniform(0.3, 3.0);
            for (int i = 0; i < cfg.npoints; ++i) {
                double uu = cfg.u(i);
                q[static_cast<std::size_t>(i)] = 0.05 + a1 * std::exp(-(uu - c1) * (uu - c1) / (2 * w1 * w1));
            }
            double m = gap_chain_mass(grid, q);
            for (double& v : q) v /= m;
            double s = gap_chain_entropy(grid, q);
            double d = gap_chain_dirichlet(grid, q);
            if (cfit <= 0.0)
                worst = std::max(worst, s / (r * r * d));
            else
                EXPECT_LE(s, cfit * r * r * d * 1.0000001);
        }
        return worst;
    };
    double c = sweep(0.5, -1.0);
    ASSERT_GT(c, 0.0);
    sweep(0.25, 2.0 * c);  // same constant class works at the smaller scale
}

TEST(GapChain, ValidationErrors) {
    GapChainConfig cfg;
    cfg.beta = 1.0;
    cfg.r = 0.25;
    cfg.gamma_gap = 2.0;
    cfg.npoints = 128;  // h = 1/16 > r/8
    std::vector<double> q(128, 1.0);
    EXPECT_THROW(fokker_planck_gap(cfg, q, {0.1}), ConfigError);
    cfg.npoints = 2048;
    EXPECT_THROW(fokker_planck_gap(cfg, std::vector<double>(7, 1.0), {0.1}), ConfigError);
    std::vector<double> bad(2048, 1.0);
    bad[5] = -0.2;
    EXPECT_THROW(fokker_planck_gap(cfg, bad, {0.1}), ConfigError);
}
