#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "afrelay/errors.hpp"
#include "afrelay/math.hpp"
#include "afrelay/performance.hpp"
#include "afrelay/replica.hpp"

namespace afr {
namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

NetworkConfig equal_net(std::vector<int> M, double rho_db)
{
    const int K = static_cast<int>(M.size()) - 1;
    return build_network(K, std::move(M), std::vector<double>(K, db_to_linear(rho_db)), BetaMode::Auto);
}

NetworkConfig unequal_net(double rho_db)
{
    const double r = db_to_linear(rho_db);
    return build_network(3, {4, 6, 8, 12}, {r, 0.7 * r, 0.5 * r}, BetaMode::Auto);
}

double max_abs(const std::vector<double>& v)
{
    double m = 0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

TEST(Solver, UnitGainGoldenRatio)
{
    const auto g = Constellation::gaussian();
    const auto cfg = build_network(1, {8, 8}, {1.0}, BetaMode::Auto);
    const auto b = solve(cfg, DetectorSpec::jdd(g), g);
    ASSERT_TRUE(b.converged);
    EXPECT_NEAR(b.state.eta[0], kGolden, 1e-12);
    EXPECT_NEAR(b.state.eps[0], kGolden, 1e-12);
    EXPECT_LT(b.residual, 1e-12);
}

TEST(Solver, SweepLeavesFixedPointInPlace)
{
    const auto q = Constellation::qpsk();
    const auto cfg = unequal_net(10.0);
    for (const auto& det : {DetectorSpec::map(q), DetectorSpec::lmmse(), DetectorSpec::mf()}) {
        const auto b = solve(cfg, det, q);
        const auto next = sweep_once(b.state, cfg, det, q, 1.0, {}, b.sigma2);
        const auto a = b.state.flatten(), c = next.flatten();
        for (std::size_t i = 0; i < a.size(); ++i)
            EXPECT_NEAR(c[i], a[i], 1e-11 * std::max(1.0, std::abs(a[i])));
    }
}

TEST(Solver, MatchedFilterLimitDecaysAsInverseSigma2)
{
    const auto q = Constellation::qpsk();
    const auto cfg = unequal_net(10.0);
    const auto lo = solve(cfg, DetectorSpec::custom(Constellation::gaussian(), Sigma2::finite(1e8)), q);
    const auto hi = solve(cfg, DetectorSpec::custom(Constellation::gaussian(), Sigma2::finite(1e10)), q);
    for (int k = 0; k < cfg.K; ++k) {
        EXPECT_NEAR(hi.state.xi[k] * 1e10 / (lo.state.xi[k] * 1e8), 1.0, 1e-6);
    }
    EXPECT_NEAR(hi.state.nu[0], cfg.gain(), 1e-8 * cfg.gain());
}

TEST(Solver, VanishingSnr)
{
    const auto q = Constellation::qpsk();
    const auto cfg = equal_net({8, 8, 8, 8}, -80.0);
    const auto b = solve(cfg, DetectorSpec::map(q), q);
    EXPECT_LT(b.state.eps[0], 1e-7);
    EXPECT_NEAR(b.state.eps[0], cfg.gain(), 1e-3 * cfg.gain());
    EXPECT_LT(jdd_rate(cfg, q, false), 1e-7);
}

TEST(Solver, HotAndColdStartsDisagreeInTheTransitionWindow)
{
    const auto q = Constellation::qpsk();
    const auto cfg = equal_net({10, 9, 8, 7}, 18.0);
    SolverOptions hot, cold;
    hot.init = InitKind::HotStart;
    cold.init = InitKind::ColdStart;
    const auto h = solve(cfg, DetectorSpec::map(q), q, hot);
    const auto c = solve(cfg, DetectorSpec::map(q), q, cold);
    ASSERT_TRUE(h.converged && c.converged);
    EXPECT_GT(std::abs(h.state.eta[0] - c.state.eta[0]), 1e-2);
}

TEST(Solver, MatchedReductionSolvesTheFullSystem)
{
    for (const auto& p : {Constellation::gaussian(), Constellation::qpsk()}) {
        const auto cfg = unequal_net(12.0);
        const auto det = DetectorSpec::jdd(p);
        const auto b = solve(cfg, det, p);
        EXPECT_LE(fixed_point_residual(b.state, cfg, det, p, 1.0), 1e-12);
    }
}

TEST(FreeEnergy, StationaryAtEveryBranch)
{
    const auto q = Constellation::qpsk();
    struct Case {
        NetworkConfig cfg;
        DetectorSpec det;
    };
    const std::vector<Case> cases{{equal_net({10, 9, 8, 7}, 18.5), DetectorSpec::map(q)},
                                  {unequal_net(10.0), DetectorSpec::lmmse()},
                                  {unequal_net(10.0), DetectorSpec::custom(q, Sigma2::finite(1.7))},
                                  {unequal_net(3.0), DetectorSpec::mf()}};
    for (const auto& c : cases) {
        for (const auto& b : solve_branches(c.cfg, c.det, q).branches) {
            if (!b.converged)
                continue;
            EXPECT_LE(fixed_point_residual(b.state, c.cfg, c.det, q, b.sigma2), 1e-12);
            EXPECT_LT(max_abs(free_energy_gradient(b.state, c.cfg, c.det, q, b.sigma2)), 1e-5) << b.label;
        }
    }
}

// The ZF surrogate's free energy grows like 1/sigma^2 (about 1e10 here), so finite
// differences are only meaningful relative to |F|.
TEST(FreeEnergy, ZeroForcingStationaryRelativeToItsScale)
{
    const auto q = Constellation::qpsk();
    const auto cfg = unequal_net(3.0);
    const auto b = solve(cfg, DetectorSpec::zf(), q);
    ASSERT_TRUE(b.converged);
    EXPECT_LE(fixed_point_residual(b.state, cfg, DetectorSpec::zf(), q, b.sigma2), 1e-12);
    const double F = std::abs(free_energy(b, cfg, DetectorSpec::zf(), q));
    EXPECT_LT(max_abs(free_energy_gradient(b.state, cfg, DetectorSpec::zf(), q, b.sigma2)), 1e-12 * F);
}

TEST(FreeEnergy, UnitGainAnalyticValue)
{
    const auto g = Constellation::gaussian();
    const auto cfg = build_network(1, {8, 8}, {1.0}, BetaMode::Auto);
    const auto b = solve(cfg, DetectorSpec::jdd(g), g);
    // ln pi + 2 ln(1 + phi) + 1 - phi^2 at xi = eta = nu = eps = phi, g = 1
    const double want = std::log(kPi) + 2 * std::log1p(kGolden) + 1 - kGolden * kGolden;
    EXPECT_NEAR(free_energy(b, cfg, DetectorSpec::jdd(g), g), want, 1e-12);
}

TEST(FreeEnergy, StableBranchHasStrictlySmallestValue)
{
    const auto q = Constellation::qpsk();
    const auto cfg = equal_net({10, 9, 8, 7}, 18.5);
    const auto set = solve_branches(cfg, DetectorSpec::map(q), q);
    ASSERT_GE(set.branches.size(), 2u);
    for (std::size_t i = 0; i < set.branches.size(); ++i) {
        if (static_cast<int>(i) != set.stable_index) {
            EXPECT_LT(set.stable().free_energy, set.branches[i].free_energy);
        }
    }
}

TEST(Branches, SingleBranchAtLowSnr)
{
    const auto q = Constellation::qpsk();
    EXPECT_EQ(solve_branches(equal_net({10, 9, 8, 7}, 5.0), DetectorSpec::map(q), q).branches.size(), 1u);
}

TEST(Branches, SeveralBranchesInTheTransitionWindow)
{
    const auto q = Constellation::qpsk();
    EXPECT_GE(solve_branches(equal_net({10, 9, 8, 7}, 18.5), DetectorSpec::map(q), q).branches.size(), 2u);
}

TEST(Branches, GaussianLmmseIsUnique)
{
    const auto g = Constellation::gaussian();
    SolverOptions opts;
    opts.dense_multistart = true;
    for (double db : {-10.0, 5.0, 20.0, 35.0})
        EXPECT_EQ(solve_branches(unequal_net(db), DetectorSpec::lmmse(), g, opts).branches.size(), 1u) << db;
}

TEST(Rates, SquareChannelOracle)
{
    const auto g = Constellation::gaussian();
    for (double rho : {0.1, 1.0, 10.0}) {
        const double F = std::pow(std::sqrt(4 * rho + 1) - 1, 2);
        const double want = 2 * std::log(1 + rho - F / 4) - F / (4 * rho);
        EXPECT_NEAR(jdd_rate(build_network(1, {16, 16}, {rho}, BetaMode::Auto), g, false), want, 1e-9);
    }
}

TEST(Rates, TdmaFactor)
{
    const auto g = Constellation::gaussian();
    const auto one = build_network(1, {8, 8}, {3.0}, BetaMode::Auto);
    EXPECT_DOUBLE_EQ(jdd_rate(one, g, true), jdd_rate(one, g, false));
    const auto three = equal_net({8, 8, 8, 8}, 10.0);
    EXPECT_NEAR(jdd_rate(three, g, true), jdd_rate(three, g, false) / 3.0, 1e-15);
}

TEST(Rates, QpskSaturatesAtTwoBitsPerSymbol)
{
    const auto cfg = build_network(3, {8, 8, 8, 8}, {db_to_linear(40.0), 100.0, 100.0}, BetaMode::Auto);
    EXPECT_NEAR(jdd_rate(cfg, Constellation::qpsk(), true), 2 * std::log(2.0) / 3.0, 1e-9);
}

TEST(Rates, GaussianRateNondecreasingInEverySnr)
{
    const auto g = Constellation::gaussian();
    for (int k = 0; k < 3; ++k) {
        double prev = -1;
        for (double db = -10; db <= 30; db += 5) {
            std::vector<double> rho{10.0, 10.0, 10.0};
            rho[k] = db_to_linear(db);
            const double r = jdd_rate(build_network(3, {4, 6, 8, 12}, rho, BetaMode::Auto), g, false);
            EXPECT_GE(r, prev - 1e-13);
            prev = r;
        }
    }
}

TEST(Rates, DependOnlyOnAntennaRatios)
{
    const auto q = Constellation::qpsk();
    const auto a = unequal_net(8.0);
    const double r = 8.0;
    const auto b = build_network(3, {8, 12, 16, 24}, {db_to_linear(r), 0.7 * db_to_linear(r), 0.5 * db_to_linear(r)},
                                 BetaMode::Auto);
    EXPECT_NEAR(jdd_rate(a, q, false), jdd_rate(b, q, false), 1e-12);
    EXPECT_NEAR(sd_rate(a, q, DetectorSpec::mf(), false), sd_rate(b, q, DetectorSpec::mf(), false), 1e-12);
    EXPECT_NEAR(ber(a, DetectorSpec::lmmse(), q), ber(b, DetectorSpec::lmmse(), q), 1e-14);
}

TEST(Rates, GaussianMapEqualsLmmse)
{
    const auto g = Constellation::gaussian();
    for (double db : {0.0, 10.0, 25.0})
        EXPECT_NEAR(sd_rate(unequal_net(db), g, DetectorSpec::map(g), false),
                    sd_rate(unequal_net(db), g, DetectorSpec::lmmse(), false), 1e-8);
}

TEST(Rates, SeparateDecodingNeverBeatsJoint)
{
    for (const auto& p : {Constellation::gaussian(), Constellation::qpsk()})
        for (double db : {-5.0, 10.0, 25.0}) {
            const auto cfg = unequal_net(db);
            const double j = jdd_rate(cfg, p, false);
            for (const auto& det : {DetectorSpec::map(p), DetectorSpec::lmmse(), DetectorSpec::mf(), DetectorSpec::zf()})
                EXPECT_LE(sd_rate(cfg, p, det, false), j + 1e-12);
        }
}

TEST(Rates, MatchedFilterNearOptimalOnlyAtLowSnr)
{
    const auto q = Constellation::qpsk();
    auto ratio = [&](double db) {
        return sd_rate(unequal_net(db), q, DetectorSpec::mf(), false) /
               sd_rate(unequal_net(db), q, DetectorSpec::lmmse(), false);
    };
    EXPECT_GT(ratio(-20.0), 0.99);
    EXPECT_LT(ratio(20.0), ratio(0.0));
    EXPECT_LT(ratio(20.0), 0.9);
}

TEST(Rates, OrderingOfLinearDetectors)
{
    for (const auto& p : {Constellation::gaussian(), Constellation::qpsk()})
        for (double db = -10; db <= 30; db += 5) {
            const auto cfg = unequal_net(db);
            const double l = sd_rate(cfg, p, DetectorSpec::lmmse(), false);
            EXPECT_GE(l, sd_rate(cfg, p, DetectorSpec::mf(), false) - 1e-12);
            EXPECT_GE(l, sd_rate(cfg, p, DetectorSpec::zf(), false) - 1e-12);
        }
}

TEST(Loss, IdentityAndLimits)
{
    for (const auto& p : {Constellation::gaussian(), Constellation::qpsk()})
        for (double db : {-10.0, 5.0, 20.0}) {
            const auto cfg = unequal_net(db);
            const double diff = jdd_rate(cfg, p, false) - sd_rate(cfg, p, DetectorSpec::map(p), false);
            const double loss = sd_loss(cfg, p);
            EXPECT_NEAR(loss, diff, 1e-8);
            EXPECT_GE(loss, -1e-9);
        }
    EXPECT_LT(sd_loss(equal_net({8, 8, 8, 8}, -60.0), Constellation::qpsk()), 1e-9);
    EXPECT_LT(sd_loss(equal_net({8, 8, 8, 8}, 40.0), Constellation::qpsk()), 1e-9);
}

TEST(Ber, QFunctionValues)
{
    const auto cfg = build_network(1, {8, 8}, {4.0}, BetaMode::Auto);
    EXPECT_DOUBLE_EQ(ber_from_eta(cfg, 0.0), 0.5);
    EXPECT_NEAR(ber_from_eta(cfg, 0.25), 0.5 * std::erfc(1.0 / std::sqrt(2.0)), 1e-16);
    EXPECT_NEAR(ber_from_eta(cfg, 0.25), 0.158655253931457, 1e-14);
}

TEST(Ber, OrderingOfDetectors)
{
    const auto q = Constellation::qpsk();
    for (double db = -5; db <= 30; db += 5) {
        const auto cfg = unequal_net(db);
        const double map = ber(cfg, DetectorSpec::map(q), q);
        const double l = ber(cfg, DetectorSpec::lmmse(), q);
        EXPECT_LE(map, l + 1e-12);
        EXPECT_LE(l, ber(cfg, DetectorSpec::mf(), q) + 1e-12);
        EXPECT_LE(l, ber(cfg, DetectorSpec::zf(), q) + 1e-12);
    }
}

TEST(Ber, RequiresQpsk)
{
    EXPECT_THROW(ber(unequal_net(0.0), DetectorSpec::lmmse(), Constellation::gaussian()), ConfigError);
}

std::vector<NetworkConfig> fig8_grid(double from, double to, double step)
{
    std::vector<NetworkConfig> out;
    for (double db = from; db <= to + 1e-9; db += step)
        out.push_back(equal_net({10, 9, 8, 7}, db));
    return out;
}

TEST(Hysteresis, SweepsAgreeWhereTheSolutionIsUnique)
{
    const auto q = Constellation::qpsk();
    const auto grid = fig8_grid(4.0, 10.0, 2.0);
    const auto up = hysteresis_sweep(grid, DetectorSpec::map(q), q, SweepDirection::Up);
    const auto down = hysteresis_sweep(grid, DetectorSpec::map(q), q, SweepDirection::Down);
    for (std::size_t i = 0; i < grid.size(); ++i)
        EXPECT_NEAR(up[i].continued.state.eta[0], down[i].continued.state.eta[0], 1e-10);
}

TEST(Hysteresis, LoopInTheTransitionWindow)
{
    const auto q = Constellation::qpsk();
    const auto grid = fig8_grid(14.0, 22.0, 0.5);
    const auto up = hysteresis_sweep(grid, DetectorSpec::map(q), q, SweepDirection::Up);
    const auto down = hysteresis_sweep(grid, DetectorSpec::map(q), q, SweepDirection::Down);
    bool differ = false;
    double jump = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        differ = differ || std::abs(up[i].continued.state.eta[0] - down[i].continued.state.eta[0]) > 1e-3;
        if (i == 0)
            continue;
        const double bu0 = ber_from_eta(grid[i - 1], up[i - 1].continued.state.eta[0]);
        const double bu1 = ber_from_eta(grid[i], up[i].continued.state.eta[0]);
        jump = std::max(jump, bu0 / bu1);
    }
    EXPECT_TRUE(differ);
    // discontinuous drop on the upward sweep
    EXPECT_GT(jump, 10.0);
}

}  // namespace
}  // namespace afr
