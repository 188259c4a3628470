#include "afrelay/mc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "afrelay/errors.hpp"
#include "afrelay/mc/parallel.hpp"
#include "afrelay/mc/rng.hpp"
#include "afrelay/scalar_channel.hpp"

namespace afr::mc {

namespace {

double log_sum_exp(const Eigen::VectorXd& v)
{
    const double mx = v.maxCoeff();
    return mx + std::log((v.array() - mx).exp().sum());
}

// Per-antenna index draws for a discrete prior.
class SymbolSource {
public:
    explicit SymbolSource(const Constellation& c) : c_(c)
    {
        if (!c.is_gaussian())
            pick_ = std::discrete_distribution<int>(c.probs().begin(), c.probs().end());
    }

    // Fills x and, for discrete priors, the point indices.
    void draw(CVector& x, std::vector<int>& idx, std::mt19937_64& eng)
    {
        idx.resize(x.size());
        for (Eigen::Index m = 0; m < x.size(); ++m) {
            if (c_.is_gaussian()) {
                x[m] = cn_(eng);
                idx[m] = -1;
            } else {
                idx[m] = pick_(eng);
                x[m] = c_.points()[idx[m]];
            }
        }
    }

private:
    const Constellation& c_;
    std::discrete_distribution<int> pick_;
    ComplexNormal cn_{1.0};
};

int nearest_point(cplx v, const Constellation& c)
{
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double d = std::norm(v - c.points()[i]);
        if (d < bd) {
            bd = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

// Detector state reused across the received vectors of one realization.
class PreparedDetector {
public:
    PreparedDetector(const ChannelRealization& real, const DetectorSpec& det, const Constellation& c)
        : real_(real), det_(det), c_(c)
    {
        if (det.linear()) {
            W_ = linear_filter(real, det);
            bias_ = (W_ * real.C).diagonal();
        } else {
            if (det.sigma2.is_limit())
                throw ConfigError("exhaustive detection needs a finite postulated noise variance");
            book_ = enumerate_inputs(det.postulated_prior, real.inputs());
            CX_ = real.C * book_.vectors;
            norms_ = CX_.colwise().squaredNorm().transpose();
        }
    }

    std::vector<int> decide(const CVector& y) const
    {
        const int M0 = real_.inputs();
        std::vector<int> out(M0);
        if (det_.linear()) {
            const CVector xt = W_ * y;
            for (int m = 0; m < M0; ++m)
                out[m] = nearest_point(xt[m] / bias_[m], c_);
            return out;
        }
        const Eigen::VectorXd lw = log_weights(y);
        const int Q = static_cast<int>(det_.postulated_prior.size());
        const double mx = lw.maxCoeff();
        const Eigen::VectorXd w = (lw.array() - mx).exp();
        Eigen::MatrixXd marg = Eigen::MatrixXd::Zero(Q, M0);
        for (Eigen::Index n = 0; n < w.size(); ++n)
            for (int m = 0; m < M0; ++m)
                marg(book_.labels[n * M0 + m], m) += w[n];
        for (int m = 0; m < M0; ++m) {
            Eigen::Index best;
            marg.col(m).maxCoeff(&best);
            // Map the postulated point to the nearest true-constellation point.
            out[m] = nearest_point(det_.postulated_prior.points()[best], c_);
        }
        return out;
    }

    CVector mean(const CVector& y, double sigma2) const
    {
        if (det_.linear()) {
            const CMatrix& C = real_.C;
            CMatrix A = C.adjoint() * C;
            A.diagonal().array() += sigma2;
            return A.llt().solve(C.adjoint() * y);
        }
        const Eigen::VectorXd lw = log_weights(y);
        const double mx = lw.maxCoeff();
        const Eigen::VectorXd w = (lw.array() - mx).exp();
        return book_.vectors * w.cast<cplx>() / w.sum();
    }

private:
    Eigen::VectorXd log_weights(const CVector& y) const
    {
        const double s2 = det_.sigma2.value;
        const Eigen::VectorXcd yc = CX_.adjoint() * y;
        const double yn = y.squaredNorm();
        Eigen::VectorXd lw(norms_.size());
        for (Eigen::Index n = 0; n < lw.size(); ++n)
            lw[n] = book_.log_prob[n] - (yn - 2.0 * yc[n].real() + norms_[n]) / s2;
        return lw;
    }

    const ChannelRealization& real_;
    const DetectorSpec& det_;
    const Constellation& c_;
    CMatrix W_;
    CVector bias_;
    Codebook book_;
    CMatrix CX_;
    Eigen::VectorXd norms_;
};

}  // namespace

McEstimate summarize(const std::vector<double>& v, std::uint64_t seed)
{
    McEstimate e;
    e.trials = static_cast<int>(v.size());
    e.seed = seed;
    if (v.empty())
        return e;
    const double n = static_cast<double>(v.size());
    e.mean = pairwise_sum(v) / n;
    if (v.size() > 1) {
        std::vector<double> d(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            d[i] = (v[i] - e.mean) * (v[i] - e.mean);
        e.std_error = std::sqrt(pairwise_sum(d) / (n - 1.0) / n);
    }
    return e;
}

Codebook enumerate_inputs(const Constellation& c, int M0)
{
    if (c.is_gaussian())
        throw ConfigError("enumeration needs a discrete constellation");
    const std::size_t Q = c.size();
    std::size_t N = 1;
    for (int m = 0; m < M0; ++m) {
        N *= Q;
        if (N > kEnumerationLimit)
            throw EnumerationLimit("exhaustive enumeration exceeds 2^20 input vectors");
    }
    Codebook b;
    b.vectors.resize(M0, static_cast<Eigen::Index>(N));
    b.labels.resize(N * M0);
    b.log_prob.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
        std::size_t r = n;
        double lp = 0.0;
        for (int m = 0; m < M0; ++m) {
            const int d = static_cast<int>(r % Q);
            r /= Q;
            b.labels[n * M0 + m] = d;
            b.vectors(m, static_cast<Eigen::Index>(n)) = c.points()[d];
            lp += std::log(c.probs()[d]);
        }
        b.log_prob[n] = lp;
    }
    return b;
}

double mi_gaussian(const ChannelRealization& real)
{
    const CMatrix& C = real.C;
    const Eigen::Index M0 = C.cols();
    CMatrix A = C.adjoint() * C;
    A.diagonal().array() += 1.0;
    Eigen::LLT<CMatrix> llt(A);
    const CMatrix L = llt.matrixL();
    double ld = 0.0;
    for (Eigen::Index i = 0; i < M0; ++i)
        ld += 2.0 * std::log(L(i, i).real());
    return ld / static_cast<double>(M0);
}

McEstimate mc_mi_gaussian(const NetworkConfig& cfg, int realizations, std::uint64_t seed)
{
    if (realizations < 1)
        throw ConfigError("at least one realization is required");
    std::vector<double> v(realizations);
    parallel_for(v.size(), [&](std::size_t t) { v[t] = mi_gaussian(sample_realization(cfg, seed, t)); });
    return summarize(v, seed);
}

double mi_discrete(const ChannelRealization& real, const Constellation& c, int noise_draws, std::mt19937_64& eng)
{
    if (noise_draws < 1)
        throw ConfigError("at least one noise draw is required");
    const int M0 = real.inputs();
    const Codebook book = enumerate_inputs(c, M0);
    const CMatrix CX = real.C * book.vectors;
    const Eigen::VectorXd norms = CX.colwise().squaredNorm().transpose();
    const Eigen::Map<const Eigen::VectorXd> lp(book.log_prob.data(), static_cast<Eigen::Index>(book.log_prob.size()));
    SymbolSource src(c);
    ComplexNormal cn(1.0);
    const std::size_t Q = c.size();
    CVector x(M0), w(real.outputs());
    std::vector<int> idx;
    std::vector<double> vals(noise_draws);
    Eigen::VectorXd e(norms.size());
    for (int d = 0; d < noise_draws; ++d) {
        src.draw(x, idx, eng);
        std::size_t j = 0, mul = 1;
        for (int m = 0; m < M0; ++m) {
            j += static_cast<std::size_t>(idx[m]) * mul;
            mul *= Q;
        }
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w[i] = cn(eng);
        const CVector y = CX.col(static_cast<Eigen::Index>(j)) + w;
        const CVector yc = CX.adjoint() * y;
        const double yn = y.squaredNorm();
        const double wn = w.squaredNorm();
        // ||w||^2 replaces its mean M_K (control variate for the known h_n).
        for (Eigen::Index n = 0; n < e.size(); ++n)
            e[n] = lp[n] + wn - (yn - 2.0 * yc[n].real() + norms[n]);
        vals[d] = -log_sum_exp(e);
    }
    return pairwise_sum(vals) / noise_draws / M0;
}

McEstimate mc_mi_discrete(const NetworkConfig& cfg, const Constellation& c, int realizations, int noise_draws,
                          std::uint64_t seed)
{
    if (realizations < 1)
        throw ConfigError("at least one realization is required");
    std::vector<double> v(realizations);
    parallel_for(v.size(), [&](std::size_t t) {
        auto eng = trial_engine(seed, t, 1);
        v[t] = mi_discrete(sample_realization(cfg, seed, t), c, noise_draws, eng);
    });
    return summarize(v, seed);
}

CMatrix linear_filter(const ChannelRealization& real, const DetectorSpec& det)
{
    if (!det.linear())
        throw ConfigError("linear filter requested for a non-Gaussian postulate");
    const CMatrix& C = real.C;
    const Eigen::Index M0 = C.cols();
    switch (det.sigma2.kind) {
    case Sigma2::Kind::InfinityLimit:
        return C.adjoint();
    case Sigma2::Kind::ZeroLimit: {
        if (C.rows() < M0)
            throw SingularInput("singular ZF: fewer receive than transmit dimensions");
        const CMatrix A = C.adjoint() * C;
        Eigen::LLT<CMatrix> llt(A);
        if (llt.info() != Eigen::Success)
            throw SingularInput("singular ZF: C^H C is not invertible");
        return llt.solve(C.adjoint());
    }
    case Sigma2::Kind::Finite: {
        CMatrix A = C.adjoint() * C;
        A.diagonal().array() += det.sigma2.value;
        return A.llt().solve(C.adjoint());
    }
    }
    return C.adjoint();
}

std::vector<int> detect(const ChannelRealization& real, const CVector& y, const DetectorSpec& det,
                        const Constellation& c)
{
    if (y.size() != real.outputs())
        throw ConfigError("received vector length does not match the channel");
    return PreparedDetector(real, det, c).decide(y);
}

CVector gpme_output(const ChannelRealization& real, const CVector& y, const DetectorSpec& det, double sigma2)
{
    if (det.linear())
        return PreparedDetector(real, DetectorSpec::custom(Constellation::gaussian(), Sigma2::finite(sigma2)),
                                Constellation::gaussian())
            .mean(y, sigma2);
    const DetectorSpec d = DetectorSpec::custom(det.postulated_prior, Sigma2::finite(sigma2));
    return PreparedDetector(real, d, det.postulated_prior).mean(y, sigma2);
}

BerEstimate mc_ber(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& c, int trials,
                   std::uint64_t seed, int vectors_per_trial)
{
    if (!c.is_qpsk())
        throw ConfigError("BER simulation uses Gray-mapped QPSK");
    if (trials < 1 || vectors_per_trial < 1)
        throw ConfigError("trials and vectors per trial must be positive");
    const int M0 = cfg.M[0];
    std::vector<double> per(trials);
    parallel_for(per.size(), [&](std::size_t t) {
        const auto real = sample_realization(cfg, seed, t);
        const PreparedDetector pd(real, det, c);
        auto eng = trial_engine(seed, t, 1);
        SymbolSource src(c);
        CVector x(M0);
        std::vector<int> idx;
        long long errors = 0;
        for (int v = 0; v < vectors_per_trial; ++v) {
            src.draw(x, idx, eng);
            const CVector y = received(real, x, eng);
            const auto dec = pd.decide(y);
            for (int m = 0; m < M0; ++m) {
                const cplx a = c.points()[idx[m]], b = c.points()[dec[m]];
                errors += (a.real() > 0) != (b.real() > 0);
                errors += (a.imag() > 0) != (b.imag() > 0);
            }
        }
        per[t] = static_cast<double>(errors) / (2.0 * M0 * vectors_per_trial);
    });
    BerEstimate out;
    out.estimate = summarize(per, seed);
    out.bits = 2LL * M0 * vectors_per_trial * trials;
    const double p = out.estimate.mean;
    out.binomial_std_error = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(out.bits));
    return out;
}

double mc_lower_bound(const NetworkConfig& cfg, int realizations, std::uint64_t seed)
{
    if (realizations < 1)
        throw ConfigError("at least one realization is required");
    std::vector<double> v(realizations);
    parallel_for(v.size(), [&](std::size_t t) {
        const auto real = sample_realization(cfg, seed, t);
        v[t] = real.C.squaredNorm() / real.inputs();
    });
    return q_function(std::sqrt(pairwise_sum(v) / realizations));
}

DecouplingReport mc_decoupling(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior,
                               int trials, std::uint64_t seed, int vectors_per_trial, const SolverOptions& opts)
{
    if (trials < 1 || vectors_per_trial < 1)
        throw ConfigError("trials and vectors per trial must be positive");
    const BranchSet set = solve_branches(cfg, det, prior, opts);
    const SolutionBranch& br = set.stable();
    const double g = cfg.gain();
    DecouplingReport rep;
    rep.eta1 = br.state.eta[0];
    rep.xi1 = br.state.xi[0];
    const ScalarMoments sm = scalar_moments({g, rep.eta1, rep.xi1}, prior, det.postulated_prior);
    rep.pred_cross_re = sm.cross.real();
    rep.pred_cross_im = sm.cross.imag();
    rep.pred_est_power = sm.est_power;
    rep.pred_mse = br.state.eps[0] / g;

    const int M0 = cfg.M[0];
    const double s2 = br.sigma2;
    std::vector<double> cre(trials), cim(trials), pw(trials), mse(trials);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        const auto real = sample_realization(cfg, seed, t);
        const DetectorSpec d = det.linear() ? DetectorSpec::custom(Constellation::gaussian(), Sigma2::finite(s2))
                                            : DetectorSpec::custom(det.postulated_prior, Sigma2::finite(s2));
        const PreparedDetector pd(real, d, d.postulated_prior);
        auto eng = trial_engine(seed, t, 1);
        SymbolSource src(prior);
        CVector x(M0);
        std::vector<int> idx;
        std::vector<double> a, b, c2, e;
        a.reserve(vectors_per_trial * M0);
        b.reserve(vectors_per_trial * M0);
        c2.reserve(vectors_per_trial * M0);
        e.reserve(vectors_per_trial * M0);
        for (int v = 0; v < vectors_per_trial; ++v) {
            src.draw(x, idx, eng);
            const CVector y = received(real, x, eng);
            const CVector m = pd.mean(y, s2);
            for (int i = 0; i < M0; ++i) {
                const cplx xm = x[i] * std::conj(m[i]);
                a.push_back(xm.real());
                b.push_back(xm.imag());
                c2.push_back(std::norm(m[i]));
                e.push_back(std::norm(x[i] - m[i]));
            }
        }
        const double n = static_cast<double>(a.size());
        cre[t] = pairwise_sum(a) / n;
        cim[t] = pairwise_sum(b) / n;
        pw[t] = pairwise_sum(c2) / n;
        mse[t] = pairwise_sum(e) / n;
    });
    rep.cross_re = summarize(cre, seed);
    rep.cross_im = summarize(cim, seed);
    rep.est_power = summarize(pw, seed);
    rep.mse = summarize(mse, seed);
    rep.samples = static_cast<long long>(trials) * vectors_per_trial * M0;
    return rep;
}

}  // namespace afr::mc
