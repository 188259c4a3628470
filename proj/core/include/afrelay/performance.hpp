#pragma once

#include "afrelay/replica.hpp"

namespace afr {

// Normalised differential entropy in the matched (xi = eta, nu = eps) form; with
// `pinned` the source MI term is dropped (eta_1 = eps_1 = 0).
double entropy_from_state(const ReplicaState& st, const NetworkConfig& cfg, const Constellation& prior, bool pinned);

struct JddResult {
    double hs = 0.0;
    double hn = 0.0;
    double rate = 0.0;  // hs - hn, nats per source antenna, no TDMA factor
    int branch_count = 0;
    SolutionBranch source_branch;  // selected h_s branch
    SolutionBranch noise_branch;   // pinned h_n solution
};

JddResult jdd_analysis(const NetworkConfig& cfg, const Constellation& prior, const SolverOptions& opts = {});

double jdd_hs(const NetworkConfig& cfg, const Constellation& prior, const SolverOptions& opts = {});
double jdd_hn(const NetworkConfig& cfg, const Constellation& prior, const SolverOptions& opts = {});
double jdd_rate(const NetworkConfig& cfg, const Constellation& prior, bool tdma, const SolverOptions& opts = {});

double sd_rate(const NetworkConfig& cfg, const Constellation& prior, const DetectorSpec& det, bool tdma,
               const SolverOptions& opts = {});

// Separation loss assembled from the h_s and h_n order parameters.
double sd_loss(const NetworkConfig& cfg, const Constellation& prior, const SolverOptions& opts = {});
double sd_loss(const JddResult& jdd, const NetworkConfig& cfg);

// Q(sqrt(g eta_1)) on the minimum free-energy branch; QPSK only.
double ber(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior = Constellation::qpsk(),
           const SolverOptions& opts = {});
double ber_from_eta(const NetworkConfig& cfg, double eta1);

inline double tdma_factor(const NetworkConfig& cfg, bool tdma) { return tdma ? 1.0 / cfg.K : 1.0; }

}  // namespace afr
