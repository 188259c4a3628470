#pragma once

#include <optional>
#include <vector>

namespace afr {

enum class ChannelNorm { TransmitSide, ReceiveSide };

// Auto:    beta_0 = 1 (unit-power source), beta_k = 1/(1+rho_k) for relays k = 1..K-1.
// AutoAll: beta_k = 1/(1+rho_{k+1}) for every k = 0..K-1, i.e. the source is scaled too.
// Explicit: values supplied by the caller.
enum class BetaMode { Auto, AutoAll, Explicit };

struct NetworkConfig {
    int K = 1;
    std::vector<int> M;         // M_0..M_K
    std::vector<double> rho;    // rho_1..rho_K, linear
    std::vector<double> beta;   // beta_0..beta_{K-1}
    BetaMode beta_mode = BetaMode::Auto;
    ChannelNorm channel_norm = ChannelNorm::TransmitSide;

    // g = beta_0 rho_1, gain of the decoupled scalar channel
    double gain() const { return beta[0] * rho[0]; }
    // b_k = beta_k rho_{k+1}, k = 1..K-1, on the solver's effective SNRs
    double hop_gain(int k) const;
    // rho_k as seen by the fixed-point system (ReceiveSide rescales by M_{k-1}/M_k)
    double effective_rho(int k) const;
};

struct PathlossModel {
    std::vector<double> distances;
    double exponent = 4.0;
    double base_snr = 1.0;  // linear
};

NetworkConfig build_network(int K, std::vector<int> M, std::vector<double> rho, BetaMode beta_mode,
                            ChannelNorm channel_norm = ChannelNorm::TransmitSide,
                            std::vector<double> beta = {});

// Re-validates and re-derives beta when it is not explicit.
NetworkConfig build_network(const NetworkConfig& cfg);

double antenna_ratio(const NetworkConfig& cfg, int i, int j);

NetworkConfig apply_pathloss(const NetworkConfig& cfg, const PathlossModel& model);

// d_k = d/K for every hop.
PathlossModel equidistant(int K, double total_distance, double exponent, double base_snr);

NetworkConfig with_rho(const NetworkConfig& cfg, std::vector<double> rho);
NetworkConfig with_uniform_antennas(const NetworkConfig& cfg, int m);

}  // namespace afr
