#include "afrelay/performance.hpp"

#include <cmath>

#include "afrelay/errors.hpp"
#include "afrelay/scalar_channel.hpp"

namespace afr {

double entropy_from_state(const ReplicaState& st, const NetworkConfig& cfg, const Constellation& prior, bool pinned)
{
    const int K = cfg.K;
    auto a0 = [&](int k) { return static_cast<double>(cfg.M[k]) / cfg.M[0]; };
    double h = pinned ? 0.0 : scalar_mi(cfg.gain(), st.eta[0], prior);
    h += a0(K) * std::log1p(st.eps[K - 1]);
    for (int k = 1; k <= K; ++k)
        h -= a0(k - 1) * st.eta[k - 1] * st.eps[k - 1];
    for (int k = 1; k <= K - 1; ++k)
        h += a0(k) * std::log1p(cfg.hop_gain(k) * st.eta[k] * (st.eps[k - 1] + 1.0));
    h += a0(K) * (1.0 + std::log(kPi));
    return h;
}

JddResult jdd_analysis(const NetworkConfig& cfg, const Constellation& prior, const SolverOptions& opts)
{
    const DetectorSpec det = DetectorSpec::jdd(prior);
    JddResult r;
    BranchSet set = solve_branches(cfg, det, prior, opts);
    r.branch_count = static_cast<int>(set.branches.size());
    // The valid solution minimises the entropy of interest.
    double best = 0.0;
    for (std::size_t i = 0; i < set.branches.size(); ++i) {
        const double h = entropy_from_state(set.branches[i].state, cfg, prior, false);
        if (i == 0 || h < best) {
            best = h;
            r.source_branch = set.branches[i];
        }
    }
    r.hs = best;

    SolverOptions pin = opts;
    pin.pin_source = true;
    pin.init = InitKind::ColdStart;
    r.noise_branch = solve(cfg, det, prior, pin);
    r.hn = entropy_from_state(r.noise_branch.state, cfg, prior, true);
    r.rate = r.hs - r.hn;
    return r;
}

double jdd_hs(const NetworkConfig& cfg, const Constellation& prior, const SolverOptions& opts)
{
    return jdd_analysis(cfg, prior, opts).hs;
}

double jdd_hn(const NetworkConfig& cfg, const Constellation& prior, const SolverOptions& opts)
{
    SolverOptions pin = opts;
    pin.pin_source = true;
    pin.init = InitKind::ColdStart;
    const auto br = solve(cfg, DetectorSpec::jdd(prior), prior, pin);
    return entropy_from_state(br.state, cfg, prior, true);
}

double jdd_rate(const NetworkConfig& cfg, const Constellation& prior, bool tdma, const SolverOptions& opts)
{
    return jdd_analysis(cfg, prior, opts).rate * tdma_factor(cfg, tdma);
}

double sd_rate(const NetworkConfig& cfg, const Constellation& prior, const DetectorSpec& det, bool tdma,
               const SolverOptions& opts)
{
    const BranchSet set = solve_branches(cfg, det, prior, opts);
    return sd_rate_scalar(cfg.gain(), set.stable().state.eta[0], prior) * tdma_factor(cfg, tdma);
}

double sd_loss(const JddResult& jdd, const NetworkConfig& cfg)
{
    const int K = cfg.K;
    auto a0 = [&](int k) { return static_cast<double>(cfg.M[k]) / cfg.M[0]; };
    const auto& s = jdd.source_branch.state;
    const auto& n = jdd.noise_branch.state;
    double loss = 0.0;
    for (int k = 1; k <= K - 1; ++k) {
        const double b = cfg.hop_gain(k);
        loss += a0(k) * (std::log1p(b * s.eta[k] * (s.eps[k - 1] + 1.0)) - std::log1p(b * n.eta[k] * (n.eps[k - 1] + 1.0)));
    }
    loss += a0(K) * (std::log1p(s.eps[K - 1]) - std::log1p(n.eps[K - 1]));
    for (int k = 1; k <= K; ++k)
        loss -= a0(k - 1) * (s.eta[k - 1] * s.eps[k - 1] - n.eta[k - 1] * n.eps[k - 1]);
    return loss;
}

double sd_loss(const NetworkConfig& cfg, const Constellation& prior, const SolverOptions& opts)
{
    return sd_loss(jdd_analysis(cfg, prior, opts), cfg);
}

double ber_from_eta(const NetworkConfig& cfg, double eta1) { return q_function(std::sqrt(cfg.gain() * eta1)); }

double ber(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior, const SolverOptions& opts)
{
    if (!prior.is_qpsk())
        throw ConfigError("the BER expression is defined for QPSK inputs only");
    const BranchSet set = solve_branches(cfg, det, prior, opts);
    return ber_from_eta(cfg, set.stable().state.eta[0]);
}

}  // namespace afr
