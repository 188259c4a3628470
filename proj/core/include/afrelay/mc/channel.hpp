#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "afrelay/network.hpp"

namespace afr::mc {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct ChannelRealization {
    std::vector<CMatrix> H;           // H_k, M_k x M_{k-1}
    CMatrix G_end;                    // H_K ... H_1
    std::vector<CMatrix> relay_gain;  // H_K ... H_{k+1}: relay-k noise to destination, k = 1..K-1
    CMatrix noise_cov;                // I + sum_k relay_gain_k relay_gain_k^H
    CMatrix whitener;                 // noise_cov^{-1/2}
    CMatrix C;                        // whitener * G_end

    int inputs() const { return static_cast<int>(C.cols()); }
    int outputs() const { return static_cast<int>(C.rows()); }
};

// Per-entry variance of H_k under the configured normalisation (k = 1..K).
double entry_variance(const NetworkConfig& cfg, int k);

ChannelRealization sample_realization(const NetworkConfig& cfg, std::uint64_t seed, std::uint64_t trial = 0);

// Builds the derived matrices from given per-hop channels.
ChannelRealization realization_from_hops(std::vector<CMatrix> H);

// A single-hop realization with the given end-to-end channel (no relay noise).
ChannelRealization realization_from_whitened(const CMatrix& C);

// Destination signal after whitening: whitener (G_end x + sum_k relay_gain_k n_k + n_K).
CVector received(const ChannelRealization& real, const CVector& x, std::mt19937_64& eng);

// Unwhitened destination noise, for calibration checks.
CVector relay_noise(const ChannelRealization& real, std::mt19937_64& eng);

}  // namespace afr::mc
