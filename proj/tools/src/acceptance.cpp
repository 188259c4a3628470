#include "afrelay_tools/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "afrelay/errors.hpp"
#include "afrelay/math.hpp"
#include "afrelay/mc/estimators.hpp"
#include "afrelay/mc/parallel.hpp"
#include "afrelay/performance.hpp"
#include "afrelay/scalar_channel.hpp"
#include "afrelay_tools/experiment.hpp"

namespace afr::tools {

namespace {

// Tolerances. These are the acceptance contract; do not loosen them to make a run pass.
constexpr double kResidualTol = 1e-12;
constexpr double kGradientTol = 1e-5;
constexpr double kOracleEtaTol = 1e-10;
constexpr double kOracleRateTol = 1e-9;
constexpr double kGaussMcSigmas = 2.0;
constexpr double kQpskConvergedRel = 0.05;
constexpr double kBerRel = 0.10;
constexpr double kBerFloor = 1e-2;
constexpr double kLowerBoundSigmas = 3.0;
constexpr double kOrderingSlack = 1e-9;
constexpr double kMapLmmseTol = 1e-8;
constexpr double kLossIdentityTol = 1e-8;
constexpr double kLossFloor = -1e-9;
constexpr double kImmseRel = 1e-6;
constexpr double kBerJumpRatio = 10.0;
constexpr double kDecouplingSigmas = 3.0;
constexpr long long kDecouplingMinSamples = 100000;

// Sample sizes.
constexpr int kGaussRealizations = 1000;
constexpr int kQpskRealizations = 200;
constexpr int kQpskNoiseDraws = 200;
constexpr int kBerTrials = 500;
constexpr int kOrderingTrials = 200;
constexpr int kDecouplingTrials = 200;
constexpr int kVectorsPerTrial = 100;

std::string sci(double v, int digits = 3)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
    return buf;
}

std::string num(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

NetworkConfig net(std::vector<int> M, std::vector<double> rho)
{
    const int K = static_cast<int>(rho.size());
    return build_network(K, std::move(M), std::move(rho), BetaMode::Auto);
}

// K = 3 uniform antennas, rho_2 = rho_3 = 20 dB.
NetworkConfig first_hop_net(int M, double rho1_db)
{
    return net({M, M, M, M}, {db_to_linear(rho1_db), 100.0, 100.0});
}

// M = [4, 6, 8, 12], rho_1 = rho, rho_2 = 0.7 rho, rho_3 = 0.5 rho.
NetworkConfig unequal_net(double rho_db)
{
    const double r = db_to_linear(rho_db);
    return net({4, 6, 8, 12}, {r, 0.7 * r, 0.5 * r});
}

NetworkConfig equal_net(std::vector<int> M, double rho_db)
{
    const std::size_t K = M.size() - 1;
    return net(std::move(M), std::vector<double>(K, db_to_linear(rho_db)));
}

struct Fidelity {
    double residual = 0.0, gradient = 0.0;
    int branches = 0;
};

Fidelity branch_fidelity(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior)
{
    Fidelity f;
    const BranchSet set = solve_branches(cfg, det, prior);
    for (const auto& b : set.branches) {
        if (!b.converged)
            continue;
        ++f.branches;
        f.residual = std::max(f.residual, fixed_point_residual(b.state, cfg, det, prior, b.sigma2));
        for (double g : free_energy_gradient(b.state, cfg, det, prior, b.sigma2))
            f.gradient = std::max(f.gradient, std::abs(g));
    }
    return f;
}

struct FidelityCase {
    std::string label;
    NetworkConfig cfg;
    Constellation prior;
    DetectorSpec det;
};

CriterionResult fidelity_cases(CriterionResult r, const std::vector<FidelityCase>& cases)
{
    std::vector<Fidelity> out(cases.size());
    std::vector<std::string> errors(cases.size());
    parallel_for(cases.size(), [&](std::size_t i) {
        try {
            out[i] = branch_fidelity(cases[i].cfg, cases[i].det, cases[i].prior);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    double res = 0, grad = 0;
    int branches = 0;
    bool ok = true;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (!errors[i].empty() || out[i].branches == 0) {
            ok = false;
            r.details.push_back(cases[i].label + ": " + (errors[i].empty() ? "no converged branch" : errors[i]));
            continue;
        }
        res = std::max(res, out[i].residual);
        grad = std::max(grad, out[i].gradient);
        branches += out[i].branches;
        r.details.push_back(cases[i].label + ": " + std::to_string(out[i].branches) + " branch(es), residual " +
                            sci(out[i].residual) + ", gradient " + sci(out[i].gradient));
        r.data["cases"].push_back({{"case", cases[i].label},
                                   {"branches", out[i].branches},
                                   {"residual", out[i].residual},
                                   {"gradient", out[i].gradient}});
    }
    r.passed = ok && res <= kResidualTol && grad < kGradientTol;
    r.summary = std::to_string(branches) + " branches in " + std::to_string(cases.size()) + " cases, max residual " +
                sci(res) + " (tol " + sci(kResidualTol, 1) + "), max gradient " + sci(grad) + " (tol " +
                sci(kGradientTol, 1) + ")";
    return r;
}

CriterionResult c1_fixed_point(CriterionResult r)
{
    const auto gauss = Constellation::gaussian();
    const auto qpsk = Constellation::qpsk();
    std::vector<FidelityCase> cases;
    cases.push_back({"K=1 gaussian unit gain", net({8, 8}, {1.0}), gauss, DetectorSpec::jdd(gauss)});
    for (double db : {18.0, 19.0})
        cases.push_back({"M=[10,9,8,7] qpsk map " + num(db) + " dB", equal_net({10, 9, 8, 7}, db), qpsk,
                         DetectorSpec::map(qpsk)});
    for (const auto& prior : {gauss, qpsk}) {
        const auto cfg = unequal_net(10.0);
        cases.push_back({"M=[4,6,8,12] " + prior.name() + " map", cfg, prior, DetectorSpec::map(prior)});
        cases.push_back({"M=[4,6,8,12] " + prior.name() + " lmmse", cfg, prior, DetectorSpec::lmmse()});
        cases.push_back({"M=[4,6,8,12] " + prior.name() + " mf", cfg, prior, DetectorSpec::mf()});
        cases.push_back({"M=[4,6,8,12] " + prior.name() + " zf", cfg, prior, DetectorSpec::zf()});
    }
    cases.push_back({"M=[4,6,8,12] qpsk postulated qpsk, sigma2=2", unequal_net(10.0), qpsk,
                     DetectorSpec::custom(qpsk, Sigma2::finite(2.0))});
    cases.push_back({"M=[4,6,8,12] qpsk postulated gaussian, sigma2=0.5", unequal_net(10.0), qpsk,
                     DetectorSpec::custom(gauss, Sigma2::finite(0.5))});
    return fidelity_cases(std::move(r), cases);
}

// Large-system rate of an i.i.d. square channel, nats per antenna.
double square_channel_rate(double rho)
{
    const double F = std::pow(std::sqrt(4.0 * rho + 1.0) - 1.0, 2);
    return 2.0 * std::log(1.0 + rho - F / 4.0) - F / (4.0 * rho);
}

CriterionResult c2_oracle(CriterionResult r)
{
    const auto gauss = Constellation::gaussian();
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    const auto cfg = net({8, 8}, {1.0});
    const auto set = solve_branches(cfg, DetectorSpec::jdd(gauss), gauss);
    const auto& st = set.stable().state;
    const double d_eta = std::abs(st.eta[0] - golden);
    const double d_eps = std::abs(st.eps[0] - golden);
    double d_rate = 0;
    for (double rho : {0.1, 1.0, 10.0}) {
        const double got = jdd_rate(net({8, 8}, {rho}), gauss, false);
        const double want = square_channel_rate(rho);
        d_rate = std::max(d_rate, std::abs(got - want));
        r.details.push_back("rho " + num(rho) + ": rate " + num(got, 15) + " vs " + num(want, 15));
        r.data["rates"].push_back({{"rho", rho}, {"replica", got}, {"oracle", want}});
    }
    r.data["eta1"] = st.eta[0];
    r.data["eps1"] = st.eps[0];
    r.passed = d_eta <= kOracleEtaTol && d_eps <= kOracleEtaTol && d_rate <= kOracleRateTol;
    r.summary = "|eta1 - golden| " + sci(d_eta) + ", |eps1 - golden| " + sci(d_eps) + " (tol " +
                sci(kOracleEtaTol, 1) + "); max rate error " + sci(d_rate) + " (tol " + sci(kOracleRateTol, 1) + ")";
    return r;
}

CriterionResult c3_gaussian_rate(CriterionResult r, std::uint64_t seed)
{
    const auto gauss = Constellation::gaussian();
    const auto grid = arithmetic_grid(-10, 30, 5);
    std::vector<double> replica(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { replica[i] = jdd_rate(first_hop_net(8, grid[i]), gauss, false); });
    double worst = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto est = mc::mc_mi_gaussian(first_hop_net(8, grid[i]), kGaussRealizations, point_seed(seed, 3, i));
        const double z = (est.mean - replica[i]) / est.std_error;
        worst = std::max(worst, std::abs(z));
        r.details.push_back("rho1 " + num(grid[i]) + " dB: replica " + num(replica[i], 8) + ", MC " +
                            num(est.mean, 8) + " +- " + sci(est.std_error) + " (z " + num(z, 3) + ")");
        r.data["points"].push_back(
            {{"rho1_db", grid[i]}, {"replica", replica[i]}, {"mc", est.mean}, {"std_error", est.std_error}});
    }
    r.passed = worst <= kGaussMcSigmas;
    r.summary = "max |MC - replica| = " + num(worst, 3) + " std errors over " + std::to_string(grid.size()) +
                " points (tol " + num(kGaussMcSigmas) + ")";
    return r;
}

CriterionResult c4_qpsk_trend(CriterionResult r, std::uint64_t seed)
{
    const auto qpsk = Constellation::qpsk();
    const std::vector<int> Ms{2, 4, 6};
    std::vector<double> gap;
    double rel = 0;
    for (std::size_t i = 0; i < Ms.size(); ++i) {
        const auto cfg = first_hop_net(Ms[i], 0.0);
        const double rep = jdd_rate(cfg, qpsk, false);
        const auto est = mc::mc_mi_discrete(cfg, qpsk, kQpskRealizations, kQpskNoiseDraws, point_seed(seed, 4, i));
        gap.push_back(std::abs(est.mean - rep));
        rel = gap.back() / std::abs(est.mean);
        r.details.push_back("M=" + std::to_string(Ms[i]) + ": replica " + num(rep, 8) + ", MC " + num(est.mean, 8) +
                            " +- " + sci(est.std_error) + ", relative gap " + num(100 * rel, 3) + "%");
        r.data["points"].push_back(
            {{"M", Ms[i]}, {"replica", rep}, {"mc", est.mean}, {"std_error", est.std_error}});
    }
    const bool monotone = gap[0] > gap[1] && gap[1] > gap[2];
    r.passed = monotone && rel < kQpskConvergedRel;
    r.summary = std::string("gap ") + (monotone ? "decreases" : "does not decrease") + " over M=2,4,6 (" +
                sci(gap[0]) + ", " + sci(gap[1]) + ", " + sci(gap[2]) + "); relative gap at M=6 " +
                num(100 * rel, 3) + "% (tol " + num(100 * kQpskConvergedRel) + "%)";
    return r;
}

CriterionResult c5_ber(CriterionResult r, std::uint64_t seed)
{
    const auto qpsk = Constellation::qpsk();
    const auto det = DetectorSpec::lmmse();
    const auto grid = arithmetic_grid(0, 20, 2);
    std::vector<double> replica(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { replica[i] = ber(equal_net({24, 28, 36}, grid[i]), det, qpsk); });
    double worst = 0;
    int judged = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto est = mc::mc_ber(equal_net({24, 28, 36}, grid[i]), det, qpsk, kBerTrials, point_seed(seed, 5, i),
                                    kVectorsPerTrial);
        const double m = est.estimate.mean;
        const double rel = std::abs(m - replica[i]) / m;
        const bool judge = m >= kBerFloor;
        if (judge) {
            ++judged;
            worst = std::max(worst, rel);
        }
        r.details.push_back("rho " + num(grid[i]) + " dB: replica " + sci(replica[i]) + ", MC " + sci(m) + " +- " +
                            sci(est.estimate.std_error) + ", relative " + num(100 * rel, 3) + "%" +
                            (judge ? "" : " (below floor, reported only)"));
        r.data["points"].push_back({{"rho_db", grid[i]},
                                    {"replica", replica[i]},
                                    {"mc", m},
                                    {"std_error", est.estimate.std_error},
                                    {"judged", judge}});
    }
    r.passed = judged > 0 && worst <= kBerRel;
    r.summary = "max relative error " + num(100 * worst, 3) + "% over " + std::to_string(judged) +
                " points with MC BER >= " + sci(kBerFloor, 1) + " (tol " + num(100 * kBerRel) + "%)";
    return r;
}

CriterionResult c6_orderings(CriterionResult r, std::uint64_t seed)
{
    const auto gauss = Constellation::gaussian();
    const auto qpsk = Constellation::qpsk();
    const auto grid = arithmetic_grid(0, 30, 5);
    struct Point {
        double lmmse[2], mf[2], zf[2], map_gauss;
        double ber_map, ber_lmmse, ber_mf;
    };
    std::vector<Point> pts(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        const auto cfg = unequal_net(grid[i]);
        auto& p = pts[i];
        const Constellation priors[2] = {gauss, qpsk};
        for (int k = 0; k < 2; ++k) {
            p.lmmse[k] = sd_rate(cfg, priors[k], DetectorSpec::lmmse(), false);
            p.mf[k] = sd_rate(cfg, priors[k], DetectorSpec::mf(), false);
            p.zf[k] = sd_rate(cfg, priors[k], DetectorSpec::zf(), false);
        }
        p.map_gauss = sd_rate(cfg, gauss, DetectorSpec::map(gauss), false);
        p.ber_map = ber(cfg, DetectorSpec::map(qpsk), qpsk);
        p.ber_lmmse = ber(cfg, DetectorSpec::lmmse(), qpsk);
        p.ber_mf = ber(cfg, DetectorSpec::mf(), qpsk);
    });

    int violations = 0;
    double map_gap = 0, bound_excess = -1e300;
    auto fail = [&](const std::string& what) {
        ++violations;
        r.details.push_back("violation: " + what);
    };
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& p = pts[i];
        const std::string at = " at " + num(grid[i]) + " dB";
        for (int k = 0; k < 2; ++k) {
            const std::string prior = k == 0 ? "gaussian" : "qpsk";
            if (p.lmmse[k] < p.mf[k] - kOrderingSlack)
                fail(prior + " sd rate lmmse < mf" + at);
            if (p.lmmse[k] < p.zf[k] - kOrderingSlack)
                fail(prior + " sd rate lmmse < zf" + at);
        }
        map_gap = std::max(map_gap, std::abs(p.map_gauss - p.lmmse[0]));
        if (p.ber_map > p.ber_lmmse + kOrderingSlack)
            fail("ber map > lmmse" + at);
        if (p.ber_lmmse > p.ber_mf + kOrderingSlack)
            fail("ber lmmse > mf" + at);

        const auto cfg = unequal_net(grid[i]);
        const std::uint64_t s = point_seed(seed, 6, i);
        const double lb = mc::mc_lower_bound(cfg, kOrderingTrials, s);
        std::string line = "rho " + num(grid[i]) + " dB: lower bound " + sci(lb);
        for (const auto& [name, det] : {std::pair{"map", DetectorSpec::map(qpsk)},
                                        std::pair{"lmmse", DetectorSpec::lmmse()},
                                        std::pair{"mf", DetectorSpec::mf()}, std::pair{"zf", DetectorSpec::zf()}}) {
            const auto est = mc::mc_ber(cfg, det, qpsk, kOrderingTrials, s, kVectorsPerTrial);
            // With few or no observed errors the across-realization error collapses to zero; the binomial
            // error under the hypothesis BER = bound keeps the comparison well defined.
            const double se = std::max(est.estimate.std_error, std::sqrt(lb * (1.0 - lb) / est.bits));
            const double excess = (lb - est.estimate.mean) / se;
            bound_excess = std::max(bound_excess, excess);
            if (excess > kLowerBoundSigmas)
                fail(std::string("lower bound above MC ") + name + at);
            line += std::string(", ") + name + " " + sci(est.estimate.mean);
        }
        r.details.push_back(line);
        r.data["points"].push_back({{"rho_db", grid[i]},
                                    {"sd_lmmse", {p.lmmse[0], p.lmmse[1]}},
                                    {"sd_mf", {p.mf[0], p.mf[1]}},
                                    {"sd_zf", {p.zf[0], p.zf[1]}},
                                    {"sd_map_gaussian", p.map_gauss},
                                    {"ber", {p.ber_map, p.ber_lmmse, p.ber_mf}},
                                    {"lower_bound", lb}});
    }
    if (map_gap > kMapLmmseTol)
        fail("gaussian map and lmmse sd rates differ by " + sci(map_gap));
    r.passed = violations == 0;
    r.summary = std::to_string(violations) + " ordering violations on " + std::to_string(grid.size()) +
                " points; |map - lmmse| gaussian sd rate " + sci(map_gap) + " (tol " + sci(kMapLmmseTol, 1) +
                "); lower bound at most " + num(bound_excess, 3) + " std errors above MC (tol " +
                num(kLowerBoundSigmas) + ")";
    return r;
}

CriterionResult c7_loss(CriterionResult r)
{
    struct Case {
        std::string label;
        NetworkConfig cfg;
        Constellation prior;
    };
    std::vector<Case> cases;
    const auto gauss = Constellation::gaussian();
    const auto qpsk = Constellation::qpsk();
    const auto psk8 = Constellation::psk(8);
    for (double db : arithmetic_grid(-10, 30, 5)) {
        cases.push_back({"M=8 gaussian " + num(db) + " dB", equal_net({8, 8, 8, 8}, db), gauss});
        cases.push_back({"M=8 qpsk " + num(db) + " dB", equal_net({8, 8, 8, 8}, db), qpsk});
    }
    for (double db : {0.0, 10.0, 20.0})
        cases.push_back({"M=8 8psk " + num(db) + " dB", equal_net({8, 8, 8, 8}, db), psk8});
    for (double db : arithmetic_grid(0, 30, 5)) {
        cases.push_back({"M=[4,6,8,12] gaussian " + num(db) + " dB", unequal_net(db), gauss});
        cases.push_back({"M=[4,6,8,12] qpsk " + num(db) + " dB", unequal_net(db), qpsk});
    }
    struct Out {
        double jdd = 0, sd = 0, loss = 0;
        std::string error;
    };
    std::vector<Out> out(cases.size());
    parallel_for(cases.size(), [&](std::size_t i) {
        try {
            const auto& c = cases[i];
            const auto j = jdd_analysis(c.cfg, c.prior);
            out[i].jdd = j.rate;
            out[i].loss = sd_loss(j, c.cfg);
            out[i].sd = sd_rate(c.cfg, c.prior, DetectorSpec::map(c.prior), false);
        } catch (const Error& e) {
            out[i].error = e.what();
        }
    });
    double worst = 0, lowest = 1e300;
    bool ok = true;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (!out[i].error.empty()) {
            ok = false;
            r.details.push_back(cases[i].label + ": " + out[i].error);
            continue;
        }
        const double d = std::abs(out[i].loss - (out[i].jdd - out[i].sd));
        worst = std::max(worst, d);
        lowest = std::min(lowest, out[i].loss);
        r.details.push_back(cases[i].label + ": loss " + num(out[i].loss, 10) + ", identity error " + sci(d));
        r.data["cases"].push_back({{"case", cases[i].label},
                                   {"jdd", out[i].jdd},
                                   {"sd", out[i].sd},
                                   {"loss", out[i].loss}});
    }
    r.passed = ok && worst <= kLossIdentityTol && lowest >= kLossFloor;
    r.summary = "max |loss - (jdd - sd)| " + sci(worst) + " (tol " + sci(kLossIdentityTol, 1) + "), min loss " +
                sci(lowest) + " (floor " + sci(kLossFloor, 1) + ") over " + std::to_string(cases.size()) + " points";
    return r;
}

CriterionResult c8_immse(CriterionResult r)
{
    const std::vector<double> gains{0.05, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0};
    double worst = 0;
    for (const auto& prior : {Constellation::gaussian(), Constellation::qpsk()}) {
        for (double g : gains) {
            const double h = 1e-3 * g;
            auto I = [&](double s) { return scalar_mi(s, 1.0, prior); };
            const double dI = (-I(g + 2 * h) + 8 * I(g + h) - 8 * I(g - h) + I(g - 2 * h)) / (12 * h);
            const double mmse = eps_actual({g, 1.0, 1.0}, prior, prior) / g;
            const double rel = std::abs(dI - mmse) / mmse;
            worst = std::max(worst, rel);
            r.details.push_back(prior.name() + " gain " + num(g) + ": dI/dg " + num(dI, 12) + ", mmse " +
                                num(mmse, 12) + ", relative " + sci(rel));
            r.data["points"].push_back({{"prior", prior.name()}, {"gain", g}, {"dI", dI}, {"mmse", mmse}});
        }
    }
    r.passed = worst < kImmseRel;
    r.summary = "max relative error " + sci(worst) + " over 2 x " + std::to_string(gains.size()) + " gains (tol " +
                sci(kImmseRel, 1) + ")";
    return r;
}

CriterionResult c9_hysteresis(CriterionResult r)
{
    const auto qpsk = Constellation::qpsk();
    const auto det = DetectorSpec::map(qpsk);
    const auto grid = arithmetic_grid(14, 22, 0.5);
    std::vector<NetworkConfig> nets;
    for (double db : grid)
        nets.push_back(equal_net({10, 9, 8, 7}, db));
    std::vector<int> attracting(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        for (const auto& b : solve_branches(nets[i], det, qpsk).branches)
            attracting[i] += b.converged && b.attracting;
    });
    const auto up = hysteresis_sweep(nets, det, qpsk, afr::SweepDirection::Up);
    const auto down = hysteresis_sweep(nets, det, qpsk, afr::SweepDirection::Down);

    bool coexist = false, differ = false;
    double jump = 0, jump_at = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double bu = ber_from_eta(nets[i], up[i].continued.state.eta[0]);
        const double bd = ber_from_eta(nets[i], down[i].continued.state.eta[0]);
        const double bm = ber_from_eta(nets[i], up[i].min_f.state.eta[0]);
        const bool split = std::abs(up[i].continued.state.eta[0] - down[i].continued.state.eta[0]) >
                           1e-6 * std::max(1.0, std::abs(up[i].continued.state.eta[0]));
        if (attracting[i] >= 2) {
            coexist = true;
            differ = differ || split;
        }
        if (i > 0) {
            const double prev = ber_from_eta(nets[i - 1], up[i - 1].min_f.state.eta[0]);
            const double ratio = std::max(prev / bm, bm / prev);
            if (ratio > jump) {
                jump = ratio;
                jump_at = grid[i];
            }
        }
        r.details.push_back(num(grid[i]) + " dB: " + std::to_string(attracting[i]) + " attracting, up " + sci(bu) +
                            ", down " + sci(bd) + ", min-F " + sci(bm));
        r.data["points"].push_back({{"rho_db", grid[i]},
                                    {"attracting", attracting[i]},
                                    {"up_ber", bu},
                                    {"down_ber", bd},
                                    {"minf_ber", bm}});
    }
    r.passed = coexist && differ && jump > kBerJumpRatio;
    r.summary = std::string(coexist ? "coexisting attracting branches found" : "no coexisting branches") + "; " +
                (differ ? "up/down sweeps differ there" : "up/down sweeps agree") + "; largest min-F BER jump x" +
                num(jump, 4) + " ending at " + num(jump_at) + " dB (need > x" + num(kBerJumpRatio) + ")";
    return r;
}

CriterionResult c10_decoupling(CriterionResult r, std::uint64_t seed)
{
    const auto qpsk = Constellation::qpsk();
    const std::vector<double> grid{0.0, 10.0, 20.0};
    double worst = 0;
    long long fewest = -1;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto cfg = equal_net({32, 32, 32}, grid[i]);
        const auto rep = mc::mc_decoupling(cfg, DetectorSpec::lmmse(), qpsk, kDecouplingTrials,
                                           point_seed(seed, 10, i), kVectorsPerTrial);
        const double z = (rep.mse.mean - rep.pred_mse) / rep.mse.std_error;
        worst = std::max(worst, std::abs(z));
        fewest = fewest < 0 ? rep.samples : std::min(fewest, rep.samples);
        r.details.push_back("rho " + num(grid[i]) + " dB: mse " + sci(rep.mse.mean, 6) + " +- " +
                            sci(rep.mse.std_error) + ", predicted " + sci(rep.pred_mse, 6) + " (z " + num(z, 3) +
                            ", " + std::to_string(rep.samples) + " samples)");
        r.data["points"].push_back({{"rho_db", grid[i]},
                                    {"mse", rep.mse.mean},
                                    {"std_error", rep.mse.std_error},
                                    {"predicted", rep.pred_mse},
                                    {"samples", rep.samples}});
    }
    r.passed = worst <= kDecouplingSigmas && fewest >= kDecouplingMinSamples;
    r.summary = "max |mse - prediction| = " + num(worst, 3) + " std errors (tol " + num(kDecouplingSigmas) + "), " +
                std::to_string(fewest) + " samples per point (need " + std::to_string(kDecouplingMinSamples) + ")";
    return r;
}

}  // namespace

std::string criterion_name(int id)
{
    switch (id) {
    case 0: return "scenario fixed-point fidelity";
    case 1: return "fixed-point fidelity";
    case 2: return "closed-form oracle";
    case 3: return "gaussian rate vs log-det average";
    case 4: return "qpsk finite-size convergence";
    case 5: return "lmmse BER vs simulation";
    case 6: return "detector orderings";
    case 7: return "separation loss identity";
    case 8: return "I-MMSE";
    case 9: return "phase transition and hysteresis";
    case 10: return "decoupling";
    }
    return "unknown";
}

std::vector<int> criterion_ids(const AcceptanceOptions& opts)
{
    if (!opts.only.empty())
        return opts.only;
    if (opts.quick)
        return {1, 2, 7, 8};
    return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
}

CriterionResult run_criterion(int id, const AcceptanceOptions& opts)
{
    CriterionResult r;
    r.id = id;
    r.name = criterion_name(id);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        switch (id) {
        case 1: r = c1_fixed_point(std::move(r)); break;
        case 2: r = c2_oracle(std::move(r)); break;
        case 3: r = c3_gaussian_rate(std::move(r), opts.seed); break;
        case 4: r = c4_qpsk_trend(std::move(r), opts.seed); break;
        case 5: r = c5_ber(std::move(r), opts.seed); break;
        case 6: r = c6_orderings(std::move(r), opts.seed); break;
        case 7: r = c7_loss(std::move(r)); break;
        case 8: r = c8_immse(std::move(r)); break;
        case 9: r = c9_hysteresis(std::move(r)); break;
        case 10: r = c10_decoupling(std::move(r), opts.seed); break;
        default: throw ConfigError("no acceptance criterion " + std::to_string(id));
        }
    } catch (const Error& e) {
        r.passed = false;
        r.summary = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

CriterionResult check_scenario(const ScenarioConfig& sc)
{
    CriterionResult r;
    r.name = criterion_name(0);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<FidelityCase> cases;
    for (const auto& cname : sc.constellations) {
        const auto prior = constellation_from_name(cname);
        for (const auto& dname : sc.detectors)
            cases.push_back({cname + " " + dname, sc.network, prior, detector_from_name(dname, prior)});
    }
    r = fidelity_cases(std::move(r), cases);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_done)
{
    std::vector<CriterionResult> out;
    for (int id : criterion_ids(opts)) {
        out.push_back(run_criterion(id, opts));
        if (on_done)
            on_done(out.back());
    }
    return out;
}

std::string format_line(const CriterionResult& r)
{
    char t[32];
    std::snprintf(t, sizeof t, "%.1fs", r.seconds);
    const std::string tag = r.id == 0 ? "scenario" : "C" + std::to_string(r.id);
    return std::string(r.passed ? "PASS" : "FAIL") + " " + tag + " " + r.name + ": " + r.summary + " [" + t + "]";
}

nlohmann::json to_json(const std::vector<CriterionResult>& results, const AcceptanceOptions& opts)
{
    nlohmann::json j;
    j["seed"] = opts.seed;
    j["quick"] = opts.quick;
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        j["criteria"].push_back({{"id", r.id},
                                 {"name", r.name},
                                 {"passed", r.passed},
                                 {"summary", r.summary},
                                 {"details", r.details},
                                 {"seconds", r.seconds},
                                 {"data", r.data}});
    }
    j["passed"] = all;
    return j;
}

}  // namespace afr::tools
