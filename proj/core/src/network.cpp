#include "afrelay/network.hpp"

#include <cmath>
#include <string>

#include "afrelay/errors.hpp"

namespace afr {

namespace {

std::vector<double> derive_beta(int K, const std::vector<double>& rho, BetaMode mode)
{
    std::vector<double> beta(K);
    for (int k = 0; k < K; ++k) {
        if (mode == BetaMode::AutoAll)
            beta[k] = 1.0 / (1.0 + rho[k]);
        else
            beta[k] = k == 0 ? 1.0 : 1.0 / (1.0 + rho[k - 1]);
    }
    return beta;
}

}  // namespace

double NetworkConfig::effective_rho(int k) const
{
    const double r = rho[k - 1];
    if (channel_norm == ChannelNorm::ReceiveSide)
        return r * static_cast<double>(M[k - 1]) / static_cast<double>(M[k]);
    return r;
}

double NetworkConfig::hop_gain(int k) const { return beta[k] * effective_rho(k + 1); }

NetworkConfig build_network(int K, std::vector<int> M, std::vector<double> rho, BetaMode beta_mode,
                            ChannelNorm channel_norm, std::vector<double> beta)
{
    if (K < 1)
        throw ConfigError("hop count must be at least 1");
    if (static_cast<int>(M.size()) != K + 1)
        throw ConfigError("M must have K+1 entries (got " + std::to_string(M.size()) + " for K=" +
                          std::to_string(K) + ")");
    if (static_cast<int>(rho.size()) != K)
        throw ConfigError("rho must have K entries (got " + std::to_string(rho.size()) + ")");
    for (int m : M)
        if (m < 1)
            throw ConfigError("antenna counts must be positive");
    for (double r : rho)
        if (!(r > 0.0) || !std::isfinite(r))
            throw ConfigError("per-hop SNRs must be positive and finite");

    if (beta_mode == BetaMode::Explicit) {
        if (static_cast<int>(beta.size()) != K)
            throw ConfigError("beta must have K entries (got " + std::to_string(beta.size()) + ")");
        for (double b : beta)
            if (!(b > 0.0) || !std::isfinite(b))
                throw ConfigError("normalization constants must be positive and finite");
    } else {
        beta = derive_beta(K, rho, beta_mode);
    }

    NetworkConfig cfg;
    cfg.K = K;
    cfg.M = std::move(M);
    cfg.rho = std::move(rho);
    cfg.beta = std::move(beta);
    cfg.beta_mode = beta_mode;
    cfg.channel_norm = channel_norm;
    return cfg;
}

NetworkConfig build_network(const NetworkConfig& cfg)
{
    return build_network(cfg.K, cfg.M, cfg.rho, cfg.beta_mode, cfg.channel_norm, cfg.beta);
}

double antenna_ratio(const NetworkConfig& cfg, int i, int j)
{
    if (i < 0 || j < 0 || i > cfg.K || j > cfg.K)
        throw ConfigError("antenna index out of range");
    return static_cast<double>(cfg.M[j]) / static_cast<double>(cfg.M[i]);
}

NetworkConfig apply_pathloss(const NetworkConfig& cfg, const PathlossModel& model)
{
    if (static_cast<int>(model.distances.size()) != cfg.K)
        throw ConfigError("pathloss distances must have K entries");
    if (!(model.base_snr > 0.0))
        throw ConfigError("base SNR must be positive");
    if (model.exponent < 0.0)
        throw ConfigError("pathloss exponent must be nonnegative");
    std::vector<double> rho(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
        const double d = model.distances[k];
        if (!(d > 0.0))
            throw ConfigError("distances must be positive");
        rho[k] = model.base_snr * std::pow(d, -model.exponent);
    }
    return with_rho(cfg, std::move(rho));
}

PathlossModel equidistant(int K, double total_distance, double exponent, double base_snr)
{
    if (K < 1)
        throw ConfigError("hop count must be at least 1");
    PathlossModel m;
    m.distances.assign(K, total_distance / K);
    m.exponent = exponent;
    m.base_snr = base_snr;
    return m;
}

NetworkConfig with_rho(const NetworkConfig& cfg, std::vector<double> rho)
{
    return build_network(cfg.K, cfg.M, std::move(rho), cfg.beta_mode, cfg.channel_norm, cfg.beta);
}

NetworkConfig with_uniform_antennas(const NetworkConfig& cfg, int m)
{
    return build_network(cfg.K, std::vector<int>(cfg.K + 1, m), cfg.rho, cfg.beta_mode,
                         cfg.channel_norm, cfg.beta);
}

}  // namespace afr
