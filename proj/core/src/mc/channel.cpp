#include "afrelay/mc/channel.hpp"

#include <Eigen/Eigenvalues>

#include "afrelay/errors.hpp"
#include "afrelay/mc/rng.hpp"

namespace afr::mc {

double entry_variance(const NetworkConfig& cfg, int k)
{
    const double denom = cfg.channel_norm == ChannelNorm::TransmitSide ? cfg.M[k - 1] : cfg.M[k];
    return cfg.rho[k - 1] * cfg.beta[k - 1] / denom;
}

ChannelRealization realization_from_hops(std::vector<CMatrix> H)
{
    if (H.empty())
        throw ConfigError("at least one hop is required");
    const int K = static_cast<int>(H.size());
    ChannelRealization r;
    r.H = std::move(H);
    r.G_end = r.H[0];
    for (int k = 1; k < K; ++k)
        r.G_end = r.H[k] * r.G_end;
    const auto MK = r.H[K - 1].rows();
    r.noise_cov = CMatrix::Identity(MK, MK);
    r.relay_gain.resize(K - 1);
    // relay_gain_k = H_K ... H_{k+1}, built from the destination backwards.
    for (int k = K - 1; k >= 1; --k) {
        r.relay_gain[k - 1] = (k == K - 1) ? r.H[K - 1] : CMatrix(r.relay_gain[k] * r.H[k]);
        r.noise_cov.noalias() += r.relay_gain[k - 1] * r.relay_gain[k - 1].adjoint();
    }
    if (K == 1) {
        r.whitener = CMatrix::Identity(MK, MK);
    } else {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(r.noise_cov);
        const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
        r.whitener = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
    }
    r.C = r.whitener * r.G_end;
    return r;
}

ChannelRealization realization_from_whitened(const CMatrix& C) { return realization_from_hops({C}); }

ChannelRealization sample_realization(const NetworkConfig& cfg, std::uint64_t seed, std::uint64_t trial)
{
    auto eng = trial_engine(seed, trial, 0);
    std::vector<CMatrix> H(cfg.K);
    for (int k = 1; k <= cfg.K; ++k) {
        ComplexNormal cn(entry_variance(cfg, k));
        CMatrix h(cfg.M[k], cfg.M[k - 1]);
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            for (Eigen::Index i = 0; i < h.rows(); ++i)
                h(i, j) = cn(eng);
        H[k - 1] = std::move(h);
    }
    return realization_from_hops(std::move(H));
}

CVector relay_noise(const ChannelRealization& real, std::mt19937_64& eng)
{
    ComplexNormal cn(1.0);
    const auto MK = real.outputs();
    CVector n(MK);
    for (Eigen::Index i = 0; i < MK; ++i)
        n[i] = cn(eng);
    for (const auto& G : real.relay_gain) {
        CVector nk(G.cols());
        for (Eigen::Index i = 0; i < nk.size(); ++i)
            nk[i] = cn(eng);
        n.noalias() += G * nk;
    }
    return n;
}

CVector received(const ChannelRealization& real, const CVector& x, std::mt19937_64& eng)
{
    const CVector raw = real.G_end * x + relay_noise(real, eng);
    return real.whitener * raw;
}

}  // namespace afr::mc
