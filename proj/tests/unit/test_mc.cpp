#include <cmath>

#include <gtest/gtest.h>

#include "afrelay/errors.hpp"
#include "afrelay/math.hpp"
#include "afrelay/mc/estimators.hpp"
#include "afrelay/mc/parallel.hpp"
#include "afrelay/mc/rng.hpp"
#include "afrelay/performance.hpp"

namespace afr::mc {
namespace {

NetworkConfig net(std::vector<int> M, double rho_db)
{
    const int K = static_cast<int>(M.size()) - 1;
    return build_network(K, std::move(M), std::vector<double>(K, db_to_linear(rho_db)), BetaMode::Auto);
}

CMatrix random_matrix(int rows, int cols, double var, std::uint64_t seed)
{
    auto eng = trial_engine(seed, 0, 7);
    ComplexNormal cn(var);
    CMatrix A(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i)
            A(i, j) = cn(eng);
    return A;
}

class ThreadGuard {
public:
    explicit ThreadGuard(int n) : saved_(default_threads()) { set_default_threads(n); }
    ~ThreadGuard() { set_default_threads(saved_); }

private:
    int saved_;
};

TEST(Channel, EntryVarianceMatchesConfiguration)
{
    const auto cfg = build_network(2, {4, 6, 8}, {2.0, 5.0}, BetaMode::Auto);
    for (int k = 1; k <= 2; ++k) {
        double s = 0;
        long long n = 0;
        for (int t = 0; t < 2000; ++t) {
            const auto r = sample_realization(cfg, 11, t);
            s += r.H[k - 1].squaredNorm();
            n += r.H[k - 1].size();
        }
        EXPECT_NEAR(s / n / entry_variance(cfg, k), 1.0, 0.01) << "hop " << k;
    }
    EXPECT_DOUBLE_EQ(entry_variance(cfg, 1), 2.0 / 4);
    EXPECT_DOUBLE_EQ(entry_variance(cfg, 2), 5.0 / 6 / 3.0);
}

TEST(Channel, SingleHopHasWhiteNoise)
{
    const CMatrix H = random_matrix(3, 2, 1.0, 1);
    const auto r = realization_from_hops({H});
    EXPECT_TRUE(r.noise_cov.isIdentity(0));
    EXPECT_TRUE(r.C.isApprox(H));
    EXPECT_TRUE(r.relay_gain.empty());
}

TEST(Channel, TwoHopNoiseCovarianceAndWhitener)
{
    const CMatrix H1 = random_matrix(3, 2, 0.5, 2), H2 = random_matrix(4, 3, 0.7, 3);
    const auto r = realization_from_hops({H1, H2});
    const CMatrix want = CMatrix::Identity(4, 4) + H2 * H2.adjoint();
    EXPECT_LT((r.noise_cov - want).norm(), 1e-12);
    EXPECT_LT((r.G_end - H2 * H1).norm(), 1e-12);
    EXPECT_LT((r.whitener * r.noise_cov * r.whitener.adjoint() - CMatrix::Identity(4, 4)).norm(), 1e-10);
    EXPECT_LT((r.C - r.whitener * H2 * H1).norm(), 1e-12);
}

TEST(Channel, WhitenedRelayNoiseIsWhite)
{
    const auto r = sample_realization(net({6, 6, 6, 6}, 10.0), 5, 0);
    std::mt19937_64 eng(99);
    const int N = 20000;
    CMatrix S = CMatrix::Zero(6, 6);
    for (int i = 0; i < N; ++i) {
        const CVector w = r.whitener * relay_noise(r, eng);
        S.noalias() += w * w.adjoint();
    }
    S /= N;
    EXPECT_NEAR(S.trace().real() / 6, 1.0, 0.02);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            if (i != j) {
                EXPECT_LT(std::abs(S(i, j)), 0.05);
            }
        }
    }
}

TEST(MutualInformation, GaussianClosedForms)
{
    EXPECT_NEAR(mi_gaussian(realization_from_whitened(CMatrix::Identity(2, 2))), std::log(2.0), 1e-14);
    EXPECT_NEAR(mi_gaussian(realization_from_whitened(CMatrix::Zero(3, 2))), 0.0, 1e-14);
    const CMatrix C = random_matrix(4, 3, 1.0, 4);
    const CMatrix U = Eigen::HouseholderQR<CMatrix>(random_matrix(4, 4, 1.0, 5)).householderQ();
    EXPECT_NEAR(mi_gaussian(realization_from_whitened(U * C)), mi_gaussian(realization_from_whitened(C)), 1e-12);
}

TEST(MutualInformation, DiscreteLimits)
{
    const auto q = Constellation::qpsk();
    std::mt19937_64 eng(3);
    EXPECT_NEAR(mi_discrete(realization_from_whitened(100.0 * CMatrix::Identity(2, 2)), q, 50, eng), std::log(4.0),
                1e-9);
    EXPECT_NEAR(mi_discrete(realization_from_whitened(CMatrix::Zero(2, 2)), q, 50, eng), 0.0, 1e-12);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const double v = mi_discrete(realization_from_whitened(random_matrix(3, 2, 1.0, 10 + s)), q, 200, eng);
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, std::log(4.0));
    }
}

TEST(MutualInformation, GaussianAgreesWithLargeSystemRate)
{
    const auto cfg = net({16, 16}, 10.0);
    const auto est = mc_mi_gaussian(cfg, 400, 21);
    const double rate = jdd_rate(cfg, Constellation::gaussian(), false);
    EXPECT_LT(std::abs(est.mean - rate), 3 * est.std_error + 2e-3);
}

TEST(Detection, NoiselessInputsAreRecovered)
{
    const auto q = Constellation::qpsk();
    const auto r = realization_from_whitened(random_matrix(5, 4, 1e4, 6));
    const auto book = enumerate_inputs(q, 4);
    for (int n = 0; n < 256; n += 17) {
        const CVector x = book.vectors.col(n);
        for (const auto& det : {DetectorSpec::map(q), DetectorSpec::lmmse(), DetectorSpec::mf(), DetectorSpec::zf()}) {
            const auto dec = detect(r, r.C * x, det, q);
            if (det.label == DetectorLabel::MF)
                continue;  // MF has inter-stream bias even without noise
            for (int m = 0; m < 4; ++m)
                EXPECT_EQ(dec[m], book.labels[n * 4 + m]) << to_string(det.label);
        }
    }
}

TEST(Detection, LinearFilters)
{
    const CMatrix C = random_matrix(5, 3, 1.0, 7);
    const auto r = realization_from_whitened(C);
    CMatrix A = C.adjoint() * C;
    EXPECT_LT((linear_filter(r, DetectorSpec::zf()) - A.inverse() * C.adjoint()).norm(), 1e-10);
    EXPECT_LT((linear_filter(r, DetectorSpec::mf()) - C.adjoint()).norm(), 0.0 + 1e-15);
    A.diagonal().array() += 1.0;
    EXPECT_LT((linear_filter(r, DetectorSpec::lmmse()) - A.inverse() * C.adjoint()).norm(), 1e-10);
    EXPECT_THROW(linear_filter(realization_from_whitened(random_matrix(2, 3, 1.0, 8)), DetectorSpec::zf()),
                 SingularInput);
}

TEST(Detection, MapMatchesBruteForceMarginals)
{
    const auto q = Constellation::qpsk();
    const CMatrix C = random_matrix(4, 4, 0.5, 9);
    const auto r = realization_from_whitened(C);
    std::mt19937_64 eng(4);
    ComplexNormal cn(1.0);
    for (int trial = 0; trial < 20; ++trial) {
        CVector y(4);
        for (int i = 0; i < 4; ++i)
            y[i] = cn(eng);
        double marg[4][4] = {};
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c)
                    for (int d = 0; d < 4; ++d) {
                        const int s[4] = {a, b, c, d};
                        CVector x(4);
                        for (int m = 0; m < 4; ++m)
                            x[m] = q.points()[s[m]];
                        const double w = std::exp(-(y - C * x).squaredNorm());
                        for (int m = 0; m < 4; ++m)
                            marg[m][s[m]] += w;
                    }
        const auto dec = detect(r, y, DetectorSpec::map(q), q);
        for (int m = 0; m < 4; ++m) {
            int best = 0;
            for (int i = 1; i < 4; ++i)
                if (marg[m][i] > marg[m][best])
                    best = i;
            EXPECT_EQ(dec[m], best);
        }
    }
}

TEST(BitErrors, CoinFlipAtVanishingSnr)
{
    const auto e = mc_ber(net({4, 4}, -40.0), DetectorSpec::lmmse(), Constellation::qpsk(), 100, 1);
    EXPECT_LT(std::abs(e.estimate.mean - 0.5), 5 * std::sqrt(0.25 / e.bits));
    EXPECT_EQ(e.bits, 2LL * 4 * 100 * 100);
}

TEST(BitErrors, MapBetweenBoundAndLmmse)
{
    const auto q = Constellation::qpsk();
    const auto cfg = net({4, 4, 4}, 10.0);
    const auto map = mc_ber(cfg, DetectorSpec::map(q), q, 200, 2);
    const auto lmmse = mc_ber(cfg, DetectorSpec::lmmse(), q, 200, 2);
    const double lb = mc_lower_bound(cfg, 200, 2);
    EXPECT_LE(map.estimate.mean, lmmse.estimate.mean + 3 * lmmse.estimate.std_error);
    EXPECT_LE(lb, map.estimate.mean + 3 * map.estimate.std_error);
}

TEST(BitErrors, RequiresQpskAndPositiveCounts)
{
    const auto cfg = net({4, 4}, 0.0);
    EXPECT_THROW(mc_ber(cfg, DetectorSpec::lmmse(), Constellation::psk(8), 10, 1), ConfigError);
    EXPECT_THROW(mc_ber(cfg, DetectorSpec::lmmse(), Constellation::qpsk(), 0, 1), ConfigError);
}

TEST(LowerBound, RecomputedFromRealizations)
{
    const auto cfg = net({4, 6, 5}, 5.0);
    double s = 0;
    for (int t = 0; t < 300; ++t) {
        const auto r = sample_realization(cfg, 8, t);
        s += r.C.squaredNorm() / r.inputs();
    }
    EXPECT_NEAR(mc_lower_bound(cfg, 300, 8), q_function(std::sqrt(s / 300)), 1e-12);
    EXPECT_NEAR(mc_lower_bound(net({4, 4}, -90.0), 10, 1), 0.5, 1e-4);
}

TEST(LowerBound, SingleHopMeanSnr)
{
    // E ||C||^2 / M0 = rho M1 / M0 for one hop
    const auto cfg = build_network(1, {4, 8}, {3.0}, BetaMode::Auto);
    double s = 0;
    const int N = 4000;
    for (int t = 0; t < N; ++t)
        s += sample_realization(cfg, 3, t).C.squaredNorm() / 4;
    EXPECT_NEAR(s / N / 6.0, 1.0, 0.02);
}

TEST(Determinism, SameSeedSameResultAnyThreadCount)
{
    const auto q = Constellation::qpsk();
    const auto cfg = net({4, 4, 4}, 8.0);
    double a, b, c, mi1, mi2;
    {
        ThreadGuard g(1);
        a = mc_ber(cfg, DetectorSpec::lmmse(), q, 40, 5, 20).estimate.mean;
        b = mc_ber(cfg, DetectorSpec::lmmse(), q, 40, 5, 20).estimate.mean;
        mi1 = mc_mi_discrete(cfg, q, 10, 10, 5).mean;
    }
    {
        ThreadGuard g(3);
        c = mc_ber(cfg, DetectorSpec::lmmse(), q, 40, 5, 20).estimate.mean;
        mi2 = mc_mi_discrete(cfg, q, 10, 10, 5).mean;
    }
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    EXPECT_EQ(mi1, mi2);
    EXPECT_NE(a, mc_ber(cfg, DetectorSpec::lmmse(), q, 40, 6, 20).estimate.mean);
}

TEST(Summary, StandardErrorShrinksWithTrials)
{
    const auto cfg = net({4, 4, 4}, 5.0);
    const double s1 = mc_mi_gaussian(cfg, 200, 7).std_error;
    const double s4 = mc_mi_gaussian(cfg, 800, 7).std_error;
    EXPECT_GT(s4 / s1, 0.35);
    EXPECT_LT(s4 / s1, 0.65);
    const auto e = summarize({1.0, 2.0, 3.0}, 0);
    EXPECT_DOUBLE_EQ(e.mean, 2.0);
    EXPECT_DOUBLE_EQ(e.std_error, std::sqrt(1.0 / 3.0));
}

TEST(Decoupling, AgreesWithScalarChannelAtModerateSize)
{
    const auto q = Constellation::qpsk();
    const auto rep = mc_decoupling(net({32, 32, 32}, 10.0), DetectorSpec::lmmse(), q, 40, 3, 50);
    EXPECT_EQ(rep.samples, 40LL * 50 * 32);
    EXPECT_LT(std::abs(rep.mse.mean - rep.pred_mse), 3 * rep.mse.std_error + 1e-2 * rep.pred_mse);
    EXPECT_LT(std::abs(rep.cross_re.mean - rep.pred_cross_re), 3 * rep.cross_re.std_error + 1e-2);
    EXPECT_LT(std::abs(rep.cross_im.mean - rep.pred_cross_im), 3 * rep.cross_im.std_error + 1e-2);
}

TEST(Decoupling, HighSnrEstimatesTheInput)
{
    const auto rep = mc_decoupling(net({8, 16}, 40.0), DetectorSpec::lmmse(), Constellation::qpsk(), 20, 1, 20);
    EXPECT_LT(rep.mse.mean, 1e-2);
    EXPECT_NEAR(rep.cross_re.mean, 1.0, 1e-2);
}

}  // namespace
}  // namespace afr::mc
