#pragma once

#include <cstdint>
#include <vector>

#include "afrelay/constellation.hpp"
#include "afrelay/detector.hpp"
#include "afrelay/mc/channel.hpp"
#include "afrelay/replica.hpp"

namespace afr::mc {

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
};

// Mean and standard error of per-trial values, reduced pairwise in index order.
McEstimate summarize(const std::vector<double>& per_trial, std::uint64_t seed);

inline constexpr std::size_t kEnumerationLimit = std::size_t{1} << 20;

// All |X|^M0 input vectors with their probabilities.
struct Codebook {
    CMatrix vectors;            // M0 x N
    std::vector<int> labels;    // M0 * N point indices, column-major
    std::vector<double> log_prob;
};
Codebook enumerate_inputs(const Constellation& c, int M0);

double mi_gaussian(const ChannelRealization& real);
McEstimate mc_mi_gaussian(const NetworkConfig& cfg, int realizations, std::uint64_t seed);

// (1/M0) [h_s - h_n] for one realization, averaging over `noise_draws` (x, w) pairs.
double mi_discrete(const ChannelRealization& real, const Constellation& c, int noise_draws, std::mt19937_64& eng);
McEstimate mc_mi_discrete(const NetworkConfig& cfg, const Constellation& c, int realizations, int noise_draws,
                          std::uint64_t seed);

// Linear GPME filter (C^H C + s2 I)^{-1} C^H with the MF/ZF limits taken exactly.
CMatrix linear_filter(const ChannelRealization& real, const DetectorSpec& det);

// Hard decisions (point indices) for one received vector.
std::vector<int> detect(const ChannelRealization& real, const CVector& y, const DetectorSpec& det,
                        const Constellation& c);

// Posterior mean <x'> of the vector GPME (Gaussian postulate: linear; discrete: enumeration).
CVector gpme_output(const ChannelRealization& real, const CVector& y, const DetectorSpec& det, double sigma2);

struct BerEstimate {
    McEstimate estimate;           // across-realization standard error
    double binomial_std_error = 0.0;
    long long bits = 0;
};

BerEstimate mc_ber(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& c, int trials,
                   std::uint64_t seed, int vectors_per_trial = 100);

double mc_lower_bound(const NetworkConfig& cfg, int realizations, std::uint64_t seed);

struct DecouplingReport {
    McEstimate cross_re, cross_im, est_power, mse;
    long long samples = 0;
    // Scalar-channel predictions on the stable branch.
    double pred_cross_re = 0.0, pred_cross_im = 0.0, pred_est_power = 0.0, pred_mse = 0.0;
    double eta1 = 0.0, xi1 = 0.0;
};

DecouplingReport mc_decoupling(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior,
                               int trials, std::uint64_t seed, int vectors_per_trial = 100,
                               const SolverOptions& opts = {});

}  // namespace afr::mc
