#pragma once

#include <string>
#include <vector>

#include "afrelay/constellation.hpp"
#include "afrelay/detector.hpp"
#include "afrelay/network.hpp"

namespace afr {

// Order parameters xi_k, eta_k, nu_k, eps_k for k = 1..K (stored 0-based).
struct ReplicaState {
    std::vector<double> xi, eta, nu, eps;

    static ReplicaState zeros(int K);
    int K() const { return static_cast<int>(xi.size()); }
    // Layout: xi, eta, nu, eps blocks of length K.
    std::vector<double> flatten() const;
    static ReplicaState unflatten(const std::vector<double>& v);
};

enum class InitKind { ColdStart, HotStart, Warm };

struct SolverOptions {
    double damping = 0.5;
    double tol = 1e-12;
    int max_iter = 50000;
    InitKind init = InitKind::ColdStart;
    ReplicaState warm;
    // Iterate only (eta, eps) with xi = eta, nu = eps when the detector is matched.
    bool matched_reduction = true;
    // Hold eta_1 = eps_1 = 0 (conditional-entropy system).
    bool pin_source = false;
    // Extra starting points for solve_branches.
    std::vector<ReplicaState> warm_starts;
    bool dense_multistart = false;
    int multistart_points = 20;
    // Root bracketing of the scalar reduction (matched detectors); also finds unstable branches.
    bool bracket_scan = true;
    int bracket_points = 160;
    double hot_eps = 1e-6;
    double mf_sigma2 = 1e8;
    double zf_sigma2 = 1e-8;
    double limit_tol = 1e-8;
};

struct SolutionBranch {
    ReplicaState state;
    double free_energy = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string label;
    // False for branches that damped iteration cannot reach (found by bracketing only).
    bool attracting = true;
    double sigma2 = 1.0;
};

struct BranchSet {
    std::vector<SolutionBranch> branches;
    int stable_index = -1;
    const SolutionBranch& stable() const { return branches.at(stable_index); }
};

// Postulated noise variance actually used for a detector (limits replaced by finite surrogates).
double surrogate_sigma2(const DetectorSpec& det, const SolverOptions& opts = {});

ReplicaState initial_state(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior,
                           InitKind kind, const SolverOptions& opts = {});

// One Gauss-Seidel pass (backward xi/eta, forward nu/eps) blended with `state` by `damping`.
ReplicaState sweep_once(const ReplicaState& state, const NetworkConfig& cfg, const DetectorSpec& det,
                        const Constellation& prior, double damping = 1.0, const SolverOptions& opts = {},
                        double sigma2 = -1.0);

// Right-hand sides of all 4K equations evaluated at `state` (no reduction applied).
ReplicaState fixed_point_map(const ReplicaState& state, const NetworkConfig& cfg, const DetectorSpec& det,
                             const Constellation& prior, double sigma2, bool pin_source = false);

// max_i |rhs_i - theta_i| / max(1, |theta_i|)
double fixed_point_residual(const ReplicaState& state, const NetworkConfig& cfg, const DetectorSpec& det,
                            const Constellation& prior, double sigma2, bool pin_source = false);

SolutionBranch solve(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior,
                     const SolverOptions& opts = {});

double free_energy(const ReplicaState& state, const NetworkConfig& cfg, const DetectorSpec& det,
                   const Constellation& prior, double sigma2);
double free_energy(const SolutionBranch& branch, const NetworkConfig& cfg, const DetectorSpec& det,
                   const Constellation& prior);

// Fourth-order central differences of the free energy; coordinate i is perturbed by 1e-6 * s_i and the
// reported component is s_i dF/dtheta_i, with s_i = max(|theta_i|, 1) except for coordinates
// below 1e-2 in magnitude, which are perturbed relatively (s_i = |theta_i|).
std::vector<double> free_energy_gradient(const ReplicaState& state, const NetworkConfig& cfg,
                                         const DetectorSpec& det, const Constellation& prior, double sigma2,
                                         double step = 1e-6);

BranchSet solve_branches(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior,
                         const SolverOptions& opts = {});

enum class SweepDirection { Up, Down };

struct HysteresisPoint {
    SolutionBranch continued;  // warm-started from the previous grid point
    SolutionBranch min_f;      // minimum free energy among all branches at this point
    int branch_count = 0;
};

// `grid` is ordered by increasing SNR; results are returned in grid order for either direction.
std::vector<HysteresisPoint> hysteresis_sweep(const std::vector<NetworkConfig>& grid, const DetectorSpec& det,
                                              const Constellation& prior, SweepDirection direction,
                                              const SolverOptions& opts = {});

}  // namespace afr
