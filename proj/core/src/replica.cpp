#include "afrelay/replica.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "afrelay/errors.hpp"
#include "afrelay/scalar_channel.hpp"

namespace afr {

namespace {

struct System {
    const NetworkConfig& cfg;
    const DetectorSpec& det;
    const Constellation& prior;
    double s2;
    bool matched;
    bool pinned;

    int K() const { return cfg.K; }
    double g() const { return cfg.gain(); }
    // alpha_{k-1,k}
    double a(int k) const { return static_cast<double>(cfg.M[k]) / cfg.M[k - 1]; }
    // alpha_{0,k}
    double a0(int k) const { return static_cast<double>(cfg.M[k]) / cfg.M[0]; }
    double b(int k) const { return cfg.hop_gain(k); }

    void source_update(double xi1, double eta1, double& nu1, double& eps1) const
    {
        if (pinned) {
            nu1 = eps1 = 0.0;
        } else if (matched) {
            eps1 = nu1 = eps_actual({g(), eta1, eta1}, prior, prior);
        } else {
            nu1 = nu_actual({g(), eta1, xi1}, prior, det.postulated_prior);
            eps1 = eps_actual({g(), eta1, xi1}, prior, det.postulated_prior);
        }
    }

    // eps_k from eps_{k-1}, nu_{k-1} and xi_k, eta_k with b = b_{k-1}
    double eps_forward(double b, double eps_prev, double nu_prev, double xi_k, double eta_k) const
    {
        if (matched)
            return b * (1.0 + eps_prev) / (1.0 + b * eta_k * (1.0 + eps_prev));
        const double v = s2 + nu_prev;
        const double d = 1.0 + b * xi_k * v;
        const double t = xi_k > 0.0 ? b * b * xi_k * xi_k * v * v / eta_k : 0.0;
        return (b * (1.0 + eps_prev) + t) / (d * d);
    }

    double nu_forward(double b, double nu_prev, double xi_k) const
    {
        const double v = s2 + nu_prev;
        return b * v / (1.0 + b * xi_k * v);
    }

    ReplicaState sweep(const ReplicaState& st, double damping) const
    {
        const int n = K();
        ReplicaState x = st;
        x.xi[n - 1] = a(n) / (s2 + st.nu[n - 1]);
        x.eta[n - 1] = a(n) / (1.0 + st.eps[n - 1]);
        for (int k = n - 1; k >= 1; --k) {
            const int i = k - 1;
            const double bk = b(k);
            x.xi[i] = a(k) * bk * x.xi[i + 1] / (1.0 + bk * x.xi[i + 1] * (s2 + st.nu[i]));
            x.eta[i] = a(k) * bk * x.eta[i + 1] / (1.0 + bk * x.eta[i + 1] * (1.0 + st.eps[i]));
        }
        if (matched)
            x.xi = x.eta;
        if (pinned)
            x.xi[0] = x.eta[0] = 0.0;
        source_update(x.xi[0], x.eta[0], x.nu[0], x.eps[0]);
        for (int k = 2; k <= n; ++k) {
            const int i = k - 1;
            const double bk = b(k - 1);
            x.eps[i] = eps_forward(bk, x.eps[i - 1], x.nu[i - 1], x.xi[i], x.eta[i]);
            x.nu[i] = matched ? x.eps[i] : nu_forward(bk, x.nu[i - 1], x.xi[i]);
        }
        if (damping != 1.0) {
            auto blend = [&](std::vector<double>& nw, const std::vector<double>& old) {
                for (std::size_t j = 0; j < nw.size(); ++j)
                    nw[j] = damping * nw[j] + (1.0 - damping) * old[j];
            };
            blend(x.xi, st.xi);
            blend(x.eta, st.eta);
            blend(x.nu, st.nu);
            blend(x.eps, st.eps);
        }
        return x;
    }

    // Unreduced right-hand sides at st.
    ReplicaState map(const ReplicaState& st) const
    {
        const int n = K();
        ReplicaState r = ReplicaState::zeros(n);
        r.xi[n - 1] = a(n) / (s2 + st.nu[n - 1]);
        r.eta[n - 1] = a(n) / (1.0 + st.eps[n - 1]);
        for (int k = n - 1; k >= 1; --k) {
            const int i = k - 1;
            const double bk = b(k);
            r.xi[i] = a(k) * bk * st.xi[i + 1] / (1.0 + bk * st.xi[i + 1] * (s2 + st.nu[i]));
            r.eta[i] = a(k) * bk * st.eta[i + 1] / (1.0 + bk * st.eta[i + 1] * (1.0 + st.eps[i]));
        }
        if (pinned) {
            r.xi[0] = r.eta[0] = r.nu[0] = r.eps[0] = 0.0;
        } else {
            r.nu[0] = nu_actual({g(), st.eta[0], st.xi[0]}, prior, det.postulated_prior);
            r.eps[0] = eps_actual({g(), st.eta[0], st.xi[0]}, prior, det.postulated_prior);
        }
        System full = *this;
        full.matched = false;
        for (int k = 2; k <= n; ++k) {
            const int i = k - 1;
            const double bk = b(k - 1);
            r.nu[i] = full.nu_forward(bk, st.nu[i - 1], st.xi[i]);
            r.eps[i] = full.eps_forward(bk, st.eps[i - 1], st.nu[i - 1], st.xi[i], st.eta[i]);
        }
        return r;
    }

    double residual(const ReplicaState& st) const
    {
        const auto r = map(st).flatten();
        const auto t = st.flatten();
        double m = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double d = std::fabs(r[j] - t[j]) / std::max(1.0, std::fabs(t[j]));
            m = std::max(m, std::isfinite(d) ? d : std::numeric_limits<double>::infinity());
        }
        return m;
    }

    ReplicaState initial(InitKind kind, double start_eps) const
    {
        const int n = K();
        ReplicaState st = ReplicaState::zeros(n);
        double e = pinned ? 0.0 : (kind == InitKind::ColdStart ? g() : start_eps);
        double v = e;
        st.eps[0] = e;
        st.nu[0] = matched ? e : v;
        for (int k = 2; k <= n; ++k) {
            const double bk = b(k - 1);
            st.eps[k - 1] = bk * (1.0 + st.eps[k - 2]);
            st.nu[k - 1] = matched ? st.eps[k - 1] : bk * (s2 + st.nu[k - 2]);
        }
        return st;
    }
};

double scaled_change(const ReplicaState& a, const ReplicaState& b)
{
    const auto x = a.flatten(), y = b.flatten();
    double m = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = std::fabs(x[j] - y[j]) / std::max(1.0, std::fabs(y[j]));
        m = std::max(m, std::isfinite(d) ? d : std::numeric_limits<double>::infinity());
    }
    return m;
}

bool finite_nonneg(const ReplicaState& s)
{
    for (double v : s.flatten())
        if (!std::isfinite(v) || v < 0.0)
            return false;
    return true;
}

// Fully relative change; tiny order parameters (nu_k near the ZF limit) need this to be
// resolved beyond the absolute floor of the residual.
double relative_change(const ReplicaState& a, const ReplicaState& b)
{
    const auto x = a.flatten(), y = b.flatten();
    double m = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] == y[j])
            continue;
        const double d = std::fabs(x[j] - y[j]) / std::max(std::fabs(x[j]), std::fabs(y[j]));
        m = std::max(m, d);
    }
    return m;
}

// Keeps sweeping a converged state while the relative change still shrinks.
ReplicaState polish(const System& sys, ReplicaState st, double damp, int& iters)
{
    constexpr int kMaxPolish = 5000;
    constexpr int kPatience = 25;
    double best = std::numeric_limits<double>::infinity();
    ReplicaState best_state = st;
    int since = 0;
    for (int i = 0; i < kMaxPolish && since < kPatience; ++i) {
        ReplicaState nx = sys.sweep(st, damp);
        if (!finite_nonneg(nx))
            break;
        const double c = relative_change(nx, st) / damp;
        st = std::move(nx);
        ++iters;
        if (c < best) {
            best = c;
            best_state = st;
            since = 0;
        } else {
            ++since;
        }
        if (c <= 4.0 * std::numeric_limits<double>::epsilon())
            break;
    }
    return best_state;
}


SolutionBranch iterate(const System& sys, ReplicaState st, const SolverOptions& opts, const std::string& label)
{
    SolutionBranch br;
    br.label = label;
    br.sigma2 = sys.s2;
    double best = std::numeric_limits<double>::infinity();
    ReplicaState best_state = st;
    const double damp = opts.damping;
    for (int it = 1; it <= opts.max_iter; ++it) {
        ReplicaState nx = sys.sweep(st, damp);
        if (!finite_nonneg(nx))
            break;
        const double change = scaled_change(nx, st) / damp;
        st = std::move(nx);
        br.iterations = it;
        if (change <= opts.tol) {
            const double res = sys.residual(st);
            if (res < best) {
                best = res;
                best_state = st;
            }
            if (res <= opts.tol) {
                int it2 = it;
                ReplicaState pol = polish(sys, st, damp, it2);
                const double pres = sys.residual(pol);
                if (pres <= opts.tol) {
                    st = std::move(pol);
                    br.iterations = it2;
                }
                br.state = st;
                br.residual = sys.residual(st);
                br.converged = true;
                return br;
            }
        }
    }
    if (!std::isfinite(best)) {
        best = sys.residual(st);
        best_state = st;
    }
    br.state = best_state;
    br.residual = best;
    br.converged = false;
    return br;
}

System make_system(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior,
                   const SolverOptions& opts, double s2)
{
    const bool matched = opts.matched_reduction && det.matched(prior);
    return System{cfg, det, prior, s2, matched, opts.pin_source};
}

double rel_diff(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300}); }

// Runs the damped iteration, refining the surrogate sigma2 for MF/ZF until eta_1 and eps_1 settle.
SolutionBranch run_from(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior,
                        const SolverOptions& opts, const ReplicaState* start, InitKind kind, const std::string& label,
                        double start_eps)
{
    double s2 = surrogate_sigma2(det, opts);
    System sys = make_system(cfg, det, prior, opts, s2);
    ReplicaState init = start ? *start : sys.initial(kind, start_eps);
    SolutionBranch br = iterate(sys, init, opts, label);
    if (!det.sigma2.is_limit() || !br.converged)
        return br;
    const double factor = det.sigma2.kind == Sigma2::Kind::InfinityLimit ? 2.0 : 0.5;
    for (int step = 0; step < 40; ++step) {
        s2 *= factor;
        System nsys = make_system(cfg, det, prior, opts, s2);
        SolutionBranch nb = iterate(nsys, br.state, opts, label);
        if (!nb.converged)
            return br;
        const bool settled = rel_diff(nb.state.eta[0], br.state.eta[0]) < opts.limit_tol &&
                             rel_diff(nb.state.eps[0], br.state.eps[0]) < opts.limit_tol;
        br = std::move(nb);
        if (settled)
            break;
    }
    return br;
}

// Scalar reduction for matched detectors: eta_1 -> Phi(eta_1) with the rest of the system solved exactly.
struct Reduction {
    const System& sys;
    std::vector<double> eta, eps;  // indices 1..K-1 used

    explicit Reduction(const System& s) : sys(s), eta(s.K(), 0.0), eps(s.K(), 0.0) {}

    double eps1(double eta1) const { return eps_actual({sys.g(), eta1, eta1}, sys.prior, sys.prior); }

    double phi(double eta1, double e1)
    {
        const int n = sys.K();
        if (n == 1)
            return sys.a(1) / (1.0 + e1);
        for (int pass = 0; pass < 2; ++pass) {
            const double damp = pass == 0 ? 1.0 : 0.5;
            for (int it = 0; it < 100000; ++it) {
                double change = 0.0;
                auto upd = [&](double& x, double v) {
                    v = damp * v + (1.0 - damp) * x;
                    change = std::max(change, std::fabs(v - x) / std::max(1.0, std::fabs(x)));
                    x = v;
                };
                upd(eta[n - 1], sys.a(n) / (1.0 + eps[n - 1]));
                for (int k = n - 1; k >= 2; --k) {
                    const double bk = sys.b(k);
                    upd(eta[k - 1], sys.a(k) * bk * eta[k] / (1.0 + bk * eta[k] * (1.0 + eps[k - 1])));
                }
                for (int k = 2; k <= n; ++k) {
                    const double bk = sys.b(k - 1);
                    const double prev = k == 2 ? e1 : eps[k - 2];
                    upd(eps[k - 1], bk * (1.0 + prev) / (1.0 + bk * eta[k - 1] * (1.0 + prev)));
                }
                if (change < 1e-16)
                    break;
            }
            if (std::isfinite(eta[1]))
                break;
        }
        (void)eta1;
        const double b1 = sys.b(1);
        return sys.a(1) * b1 * eta[1] / (1.0 + b1 * eta[1] * (1.0 + e1));
    }

    ReplicaState state(double eta1)
    {
        const double e1 = eps1(eta1);
        phi(eta1, e1);
        const int n = sys.K();
        ReplicaState st = ReplicaState::zeros(n);
        st.eta[0] = eta1;
        st.eps[0] = e1;
        for (int k = 1; k < n; ++k) {
            st.eta[k] = eta[k];
            st.eps[k] = eps[k];
        }
        st.xi = st.eta;
        st.nu = st.eps;
        return st;
    }
};

std::vector<SolutionBranch> bracket_branches(const System& sys, const SolverOptions& opts)
{
    std::vector<SolutionBranch> out;
    Reduction red(sys);
    const int n = opts.bracket_points;
    const double hi = std::log(sys.a(1));
    const double lo = hi + std::log(1e-10);
    auto f = [&](double le) {
        const double e = std::exp(le);
        return red.phi(e, red.eps1(e)) - e;
    };
    double x0 = lo, f0 = f(lo);
    for (int i = 1; i < n; ++i) {
        const double x1 = lo + (hi - lo) * i / (n - 1);
        const double f1 = f(x1);
        if ((f0 > 0.0) != (f1 > 0.0)) {
            double a = x0, b = x1, fa = f0;
            for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::fabs(b)); ++it) {
                const double m = 0.5 * (a + b);
                const double fm = f(m);
                if ((fm > 0.0) == (fa > 0.0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            const double root = std::exp(0.5 * (a + b));
            SolutionBranch br;
            br.state = red.state(root);
            br.residual = sys.residual(br.state);
            br.converged = br.residual <= opts.tol;
            br.label = "bracket";
            br.attracting = false;
            br.sigma2 = sys.s2;
            out.push_back(std::move(br));
        }
        x0 = x1;
        f0 = f1;
    }
    return out;
}

bool same_state(const ReplicaState& a, const ReplicaState& b, double tol)
{
    const auto x = a.flatten(), y = b.flatten();
    for (std::size_t j = 0; j < x.size(); ++j)
        if (std::fabs(x[j] - y[j]) > tol * std::max({std::fabs(x[j]), std::fabs(y[j]), 1e-14}))
            return false;
    return true;
}

}  // namespace

ReplicaState ReplicaState::zeros(int K)
{
    ReplicaState s;
    s.xi.assign(K, 0.0);
    s.eta.assign(K, 0.0);
    s.nu.assign(K, 0.0);
    s.eps.assign(K, 0.0);
    return s;
}

std::vector<double> ReplicaState::flatten() const
{
    std::vector<double> v;
    v.reserve(4 * xi.size());
    v.insert(v.end(), xi.begin(), xi.end());
    v.insert(v.end(), eta.begin(), eta.end());
    v.insert(v.end(), nu.begin(), nu.end());
    v.insert(v.end(), eps.begin(), eps.end());
    return v;
}

ReplicaState ReplicaState::unflatten(const std::vector<double>& v)
{
    if (v.size() % 4 != 0)
        throw SingularInput("flattened state length must be a multiple of 4");
    const std::size_t K = v.size() / 4;
    ReplicaState s;
    s.xi.assign(v.begin(), v.begin() + K);
    s.eta.assign(v.begin() + K, v.begin() + 2 * K);
    s.nu.assign(v.begin() + 2 * K, v.begin() + 3 * K);
    s.eps.assign(v.begin() + 3 * K, v.end());
    return s;
}

double surrogate_sigma2(const DetectorSpec& det, const SolverOptions& opts)
{
    switch (det.sigma2.kind) {
    case Sigma2::Kind::InfinityLimit: return opts.mf_sigma2;
    case Sigma2::Kind::ZeroLimit: return opts.zf_sigma2;
    case Sigma2::Kind::Finite: break;
    }
    return det.sigma2.value;
}

ReplicaState initial_state(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior,
                           InitKind kind, const SolverOptions& opts)
{
    if (kind == InitKind::Warm)
        return opts.warm;
    System sys = make_system(cfg, det, prior, opts, surrogate_sigma2(det, opts));
    return sys.initial(kind, opts.hot_eps);
}

ReplicaState sweep_once(const ReplicaState& state, const NetworkConfig& cfg, const DetectorSpec& det,
                        const Constellation& prior, double damping, const SolverOptions& opts, double sigma2)
{
    if (!(damping > 0.0 && damping <= 1.0))
        throw ConfigError("damping must lie in (0, 1]");
    if (state.K() != cfg.K)
        throw ConfigError("state size does not match the hop count");
    const double s2 = sigma2 > 0.0 ? sigma2 : surrogate_sigma2(det, opts);
    return make_system(cfg, det, prior, opts, s2).sweep(state, damping);
}

ReplicaState fixed_point_map(const ReplicaState& state, const NetworkConfig& cfg, const DetectorSpec& det,
                             const Constellation& prior, double sigma2, bool pin_source)
{
    System sys{cfg, det, prior, sigma2, false, pin_source};
    return sys.map(state);
}

double fixed_point_residual(const ReplicaState& state, const NetworkConfig& cfg, const DetectorSpec& det,
                            const Constellation& prior, double sigma2, bool pin_source)
{
    System sys{cfg, det, prior, sigma2, false, pin_source};
    return sys.residual(state);
}

namespace {

using Quad = boost::multiprecision::cpp_bin_float_quad;

// Cross-entropy term of the first hop; closed form (evaluated in T) for Gaussian postulates.
template <class T>
T cross_entropy_t(double g, double eta, double xi, const Constellation& prior, const Constellation& q)
{
    if (!q.is_gaussian())
        return T(cross_entropy_term({g, eta, xi}, prior, q));
    using std::log;
    const T vq = T(g) + T(1) / T(xi);
    return log(T(kPi) * vq) + (T(g) + T(1) / T(eta)) / vq;
}

template <class T>
T free_energy_t(const ReplicaState& st, const NetworkConfig& cfg, const DetectorSpec& det,
                const Constellation& prior, double sigma2)
{
    using std::log;
    const int K = cfg.K;
    if (st.K() != K)
        throw ConfigError("state size does not match the hop count");
    for (int k = 0; k < K; ++k)
        if (!(st.eta[k] > 0.0) || !(st.xi[k] > 0.0))
            throw SingularInput("free energy needs strictly positive xi_k and eta_k");
    auto a0 = [&](int k) { return T(cfg.M[k]) / T(cfg.M[0]); };
    const T s2(sigma2);
    const T pi(kPi);
    const T vK = s2 + T(st.nu[K - 1]);
    T F = a0(K) * (log(pi) + (T(1) + T(st.eps[K - 1])) / vK + log(vK));
    F += -T(st.xi[0]) / T(st.eta[0]) - log(pi / T(st.xi[0])) +
         cross_entropy_t<T>(cfg.gain(), st.eta[0], st.xi[0], prior, det.postulated_prior);
    for (int k = 1; k <= K; ++k) {
        const int i = k - 1;
        const T x(st.xi[i]), e(st.eta[i]);
        F -= a0(k - 1) * (x * T(st.eps[i]) - T(st.nu[i]) * (x / e) * (x - e));
    }
    for (int k = 1; k <= K - 1; ++k) {
        const int i = k - 1;
        const T b(cfg.hop_gain(k));
        const T x(st.xi[i + 1]), e(st.eta[i + 1]);
        const T v = s2 + T(st.nu[i]);
        const T d = T(1) + b * x * v;
        F += a0(k) * (log(d) + b * (x / e) * (e * (T(1) + T(st.eps[i])) - x * v) / d);
    }
    return F;
}

}  // namespace

double free_energy(const ReplicaState& st, const NetworkConfig& cfg, const DetectorSpec& det,
                   const Constellation& prior, double s2)
{
    return free_energy_t<double>(st, cfg, det, prior, s2);
}

double free_energy(const SolutionBranch& branch, const NetworkConfig& cfg, const DetectorSpec& det,
                   const Constellation& prior)
{
    return free_energy(branch.state, cfg, det, prior, branch.sigma2);
}

std::vector<double> free_energy_gradient(const ReplicaState& state, const NetworkConfig& cfg,
                                         const DetectorSpec& det, const Constellation& prior, double sigma2,
                                         double step)
{
    // Near the MF/ZF limits F grows like 1/sigma^2 (or sigma^2) and the double-precision
    // differences drown in rounding, so Gaussian postulates are differenced in quad precision.
    const bool wide = det.postulated_prior.is_gaussian();
    const auto theta = state.flatten();
    std::vector<double> grad(theta.size(), 0.0);
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double t = std::fabs(theta[j]);
        const double s = t < 1e-2 ? t : std::max(t, 1.0);
        if (s == 0.0)
            continue;
        const double h = step * s;
        auto at = [&](double mult) {
            auto tt = theta;
            tt[j] += mult * h;
            return ReplicaState::unflatten(tt);
        };
        if (wide) {
            const Quad d = -free_energy_t<Quad>(at(2), cfg, det, prior, sigma2) +
                           8 * free_energy_t<Quad>(at(1), cfg, det, prior, sigma2) -
                           8 * free_energy_t<Quad>(at(-1), cfg, det, prior, sigma2) +
                           free_energy_t<Quad>(at(-2), cfg, det, prior, sigma2);
            grad[j] = static_cast<double>(Quad(s) * d / (12 * Quad(h)));
        } else {
            const double d = -free_energy(at(2), cfg, det, prior, sigma2) +
                             8.0 * free_energy(at(1), cfg, det, prior, sigma2) -
                             8.0 * free_energy(at(-1), cfg, det, prior, sigma2) +
                             free_energy(at(-2), cfg, det, prior, sigma2);
            grad[j] = s * d / (12.0 * h);
        }
    }
    return grad;
}

SolutionBranch solve(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior,
                     const SolverOptions& opts)
{
    validate_detector(det, prior);
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw ConfigError("damping must lie in (0, 1]");
    if (!(opts.tol > 0.0))
        throw ConfigError("tolerance must be positive");
    std::string label = opts.init == InitKind::ColdStart ? "cold" : opts.init == InitKind::HotStart ? "hot" : "warm";
    SolutionBranch br = run_from(cfg, det, prior, opts, opts.init == InitKind::Warm ? &opts.warm : nullptr,
                                 opts.init, label, opts.hot_eps);
    if (!br.converged)
        throw NonConvergence("fixed-point iteration did not converge", br.residual);
    if (!opts.pin_source)
        br.free_energy = free_energy(br, cfg, det, prior);
    return br;
}

BranchSet solve_branches(const NetworkConfig& cfg, const DetectorSpec& det, const Constellation& prior,
                         const SolverOptions& opts)
{
    validate_detector(det, prior);
    std::vector<SolutionBranch> found;
    found.push_back(run_from(cfg, det, prior, opts, nullptr, InitKind::ColdStart, "cold", opts.hot_eps));
    found.push_back(run_from(cfg, det, prior, opts, nullptr, InitKind::HotStart, "hot", opts.hot_eps));
    for (const auto& w : opts.warm_starts)
        found.push_back(run_from(cfg, det, prior, opts, &w, InitKind::Warm, "warm", opts.hot_eps));
    if (opts.dense_multistart) {
        const int n = std::max(2, opts.multistart_points);
        for (int i = 0; i < n; ++i) {
            const double e = cfg.gain() * std::pow(10.0, -6.0 + 6.0 * i / (n - 1));
            found.push_back(run_from(cfg, det, prior, opts, nullptr, InitKind::HotStart, "multistart", e));
        }
    }

    BranchSet set;
    double best_res = std::numeric_limits<double>::infinity();
    for (auto& br : found) {
        best_res = std::min(best_res, br.residual);
        if (!br.converged)
            continue;
        bool dup = false;
        for (const auto& kept : set.branches)
            dup = dup || same_state(kept.state, br.state, 1e-8);
        if (!dup)
            set.branches.push_back(std::move(br));
    }

    const System sys = make_system(cfg, det, prior, opts, surrogate_sigma2(det, opts));
    if (opts.bracket_scan && sys.matched && !opts.pin_source) {
        for (auto& br : bracket_branches(sys, opts)) {
            if (!br.converged)
                continue;
            // Iterated branches near a spinodal are ill-conditioned; match them on eta_1 loosely.
            bool dup = false;
            for (const auto& kept : set.branches)
                dup = dup || rel_diff(kept.state.eta[0], br.state.eta[0]) < 1e-5;
            if (!dup)
                set.branches.push_back(std::move(br));
        }
    }

    if (set.branches.empty())
        throw NonConvergence("no branch converged", best_res);
    for (auto& br : set.branches)
        br.free_energy = free_energy(br, cfg, det, prior);
    std::sort(set.branches.begin(), set.branches.end(),
              [](const SolutionBranch& a, const SolutionBranch& b) { return a.state.eta[0] < b.state.eta[0]; });
    set.stable_index = 0;
    for (std::size_t i = 1; i < set.branches.size(); ++i)
        if (set.branches[i].free_energy < set.branches[set.stable_index].free_energy)
            set.stable_index = static_cast<int>(i);
    return set;
}

std::vector<HysteresisPoint> hysteresis_sweep(const std::vector<NetworkConfig>& grid, const DetectorSpec& det,
                                              const Constellation& prior, SweepDirection direction,
                                              const SolverOptions& opts)
{
    validate_detector(det, prior);
    const int n = static_cast<int>(grid.size());
    std::vector<HysteresisPoint> out(n);
    bool have_prev = false;
    ReplicaState prev;
    for (int step = 0; step < n; ++step) {
        const int idx = direction == SweepDirection::Up ? step : n - 1 - step;
        const auto& cfg = grid[idx];
        HysteresisPoint& pt = out[idx];
        if (have_prev) {
            pt.continued = run_from(cfg, det, prior, opts, &prev, InitKind::Warm, "warm", opts.hot_eps);
        } else {
            const InitKind kind = direction == SweepDirection::Up ? InitKind::ColdStart : InitKind::HotStart;
            pt.continued = run_from(cfg, det, prior, opts, nullptr, kind,
                                    kind == InitKind::ColdStart ? "cold" : "hot", opts.hot_eps);
        }
        if (pt.continued.converged) {
            pt.continued.free_energy = free_energy(pt.continued, cfg, det, prior);
            prev = pt.continued.state;
            have_prev = true;
        }
        try {
            BranchSet set = solve_branches(cfg, det, prior, opts);
            pt.branch_count = static_cast<int>(set.branches.size());
            pt.min_f = set.stable();
        } catch (const NonConvergence&) {
            pt.branch_count = 0;
        }
    }
    return out;
}

}  // namespace afr
