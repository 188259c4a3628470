#include "afrelay/scalar_channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "afrelay/errors.hpp"
#include "afrelay/quadrature.hpp"

namespace afr {

namespace {

const double kSqrtHalf = std::sqrt(0.5);

template <class F>
double integrate_adaptive(F&& f)
{
    double prev = f(gauss_hermite(kQuadOrders[0]));
    for (std::size_t i = 1; i < std::size(kQuadOrders); ++i) {
        const double cur = f(gauss_hermite(kQuadOrders[i]));
        if (std::fabs(cur - prev) <= kQuadTol * std::max(1.0, std::fabs(cur)))
            return cur;
        prev = cur;
    }
    throw QuadratureError("Gauss-Hermite escalation exhausted");
}

// E h(w), w ~ CN(0,1), via the tensor rule.
template <class H>
double expect_cn(const QuadratureRule& r, H&& h)
{
    double acc = 0.0;
    for (int a = 0; a < r.order; ++a) {
        double row = 0.0;
        const double wa = r.nodes[a] * kSqrtHalf;
        for (int b = 0; b < r.order; ++b)
            row += r.weights[b] * h(cplx(wa, r.nodes[b] * kSqrtHalf));
        acc += r.weights[a] * row;
    }
    return acc;
}

// Integrands of discrete priors switch between decision regions over a width 1/sqrt(snr)
// several standard deviations out, which fixed Gauss-Hermite rules do not resolve; these
// are integrated by adaptive Gauss-Kronrod against the normal density instead.
constexpr double kNormalCut = 9.0;
constexpr double kAbsTol = 1e-13;
constexpr int kAdaptDepth = 24;

double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * kPi); }

// Bisection on a Gauss-Kronrod 31 panel with an absolute error budget, so that
// vanishing integrals (deep in the high-snr tail) terminate early.
template <class F>
double gk_adapt(F& f, double a, double b, double tol, int depth)
{
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    const double r = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err);
    if (depth == 0 || err <= tol)
        return r;
    const double mid = 0.5 * (a + b);
    return gk_adapt(f, a, mid, 0.5 * tol, depth - 1) + gk_adapt(f, mid, b, 0.5 * tol, depth - 1);
}

constexpr int kInitialPanels = 6;

template <class H>
double expect_normal_adaptive(H&& h, double tol = kAbsTol)
{
    auto f = [&](double t) { return normal_pdf(t) * h(t); };
    const double w = 2.0 * kNormalCut / kInitialPanels;
    double acc = 0.0;
    for (int i = 0; i < kInitialPanels; ++i)
        acc += gk_adapt(f, -kNormalCut + i * w, -kNormalCut + (i + 1) * w, tol / kInitialPanels, kAdaptDepth);
    return acc;
}

// E h(w), w ~ CN(0,1), as nested adaptive integrals over the real and imaginary parts.
// The inner budget grows where the outer density is small. With `even` the integrand is
// taken to satisfy h(conj w) = h(w) and only the upper half plane is integrated.
template <class H>
double expect_cn_adaptive(H&& h, bool even = false)
{
    const double p0 = normal_pdf(0.0);
    return expect_normal_adaptive([&](double a) {
        const double tol = std::min(1e-3, kAbsTol * p0 / normal_pdf(a));
        auto inner = [&](double b) { return h(cplx(a * kSqrtHalf, b * kSqrtHalf)); };
        if (!even)
            return expect_normal_adaptive(inner, tol);
        auto f = [&](double t) { return normal_pdf(t) * inner(t); };
        const double w = kNormalCut / (kInitialPanels / 2);
        double acc = 0.0;
        for (int i = 0; i < kInitialPanels / 2; ++i)
            acc += gk_adapt(f, i * w, (i + 1) * w, 0.5 * tol / kInitialPanels, kAdaptDepth);
        return 2.0 * acc;
    });
}

// Postulated mixture sum_i q_i CN(sqrt(g) x_i, 1/xi) with the logs hoisted out of the integrands.
struct Mixture {
    std::vector<cplx> centers;
    std::vector<cplx> points;
    std::vector<double> logp;
    double xi = 0.0;
    bool conj_closed = false;

    Mixture(const Constellation& q, double sg, double xi_) : xi(xi_)
    {
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (!(q.probs()[i] > 0.0))
                continue;
            points.push_back(q.points()[i]);
            centers.push_back(sg * q.points()[i]);
            logp.push_back(std::log(q.probs()[i]));
        }
        conj_closed = true;
        for (std::size_t i = 0; i < points.size() && conj_closed; ++i) {
            bool hit = false;
            for (std::size_t k = 0; k < points.size() && !hit; ++k)
                hit = std::abs(std::conj(points[i]) - points[k]) < 1e-12 && std::fabs(logp[i] - logp[k]) < 1e-12;
            conj_closed = hit;
        }
    }

    // ln sum_i q_i exp(-xi |z - sqrt(g) x_i|^2)
    double log_sum(cplx z) const
    {
        double e[kStackPoints];
        std::vector<double> heap;
        double* v = buffer(e, heap);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < centers.size(); ++i) {
            v[i] = logp[i] - xi * std::norm(z - centers[i]);
            mx = std::max(mx, v[i]);
        }
        double s = 0.0;
        for (std::size_t i = 0; i < centers.size(); ++i)
            s += std::exp(v[i] - mx);
        return mx + std::log(s);
    }

    cplx mean(cplx z) const
    {
        double e[kStackPoints];
        std::vector<double> heap;
        double* v = buffer(e, heap);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < centers.size(); ++i) {
            v[i] = logp[i] - xi * std::norm(z - centers[i]);
            mx = std::max(mx, v[i]);
        }
        double s = 0.0;
        cplx m = 0.0;
        for (std::size_t i = 0; i < centers.size(); ++i) {
            const double w = std::exp(v[i] - mx);
            s += w;
            m += w * points[i];
        }
        return m / s;
    }

    // Posterior variance E|x' - <x'>|^2 given z, accumulated around the mean to avoid cancellation.
    double variance(cplx z) const
    {
        double e[kStackPoints];
        std::vector<double> heap;
        double* v = buffer(e, heap);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < centers.size(); ++i) {
            v[i] = logp[i] - xi * std::norm(z - centers[i]);
            mx = std::max(mx, v[i]);
        }
        double s = 0.0;
        cplx m = 0.0;
        for (std::size_t i = 0; i < centers.size(); ++i) {
            v[i] = std::exp(v[i] - mx);
            s += v[i];
            m += v[i] * points[i];
        }
        m /= s;
        double acc = 0.0;
        for (std::size_t i = 0; i < centers.size(); ++i)
            acc += v[i] * std::norm(points[i] - m);
        return acc / s;
    }

    // Integrand symmetry under w -> conj(w) for a real transmitted point.
    bool even_for(cplx x) const { return conj_closed && x.imag() == 0.0; }

private:
    static constexpr std::size_t kStackPoints = 64;
    double* buffer(double* stack, std::vector<double>& heap) const
    {
        if (centers.size() <= kStackPoints)
            return stack;
        heap.resize(centers.size());
        return heap.data();
    }
};

// Indices of input points to average over (one suffices for symmetric constellations).
std::size_t input_count(const Constellation& p, const Constellation& q)
{
    return (p.symmetric() && (q == p || q.is_gaussian())) ? 1 : p.size();
}

// For the single-input shortcut pick a real point when there is one (enables the half-plane rule).
std::size_t input_index(const Constellation& p, std::size_t j, std::size_t count)
{
    if (count != 1)
        return j;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p.points()[i].imag() == 0.0)
            return i;
    return 0;
}

double input_weight(const Constellation& p, std::size_t j, std::size_t count)
{
    return count == 1 ? 1.0 : p.probs()[j];
}

}  // namespace

cplx gpme_scalar(cplx z, const ScalarParams& params, const Constellation& q)
{
    if (params.xi == 0.0)
        return 0.0;
    const double sg = std::sqrt(params.g);
    if (q.is_gaussian())
        return sg * params.xi * z / (1.0 + params.g * params.xi);
    return Mixture(q, sg, params.xi).mean(z);
}

double eps_linear(const ScalarParams& params)
{
    const double g = params.g;
    if (g == 0.0)
        return 0.0;
    if (!(params.eta > 0.0))
        throw SingularInput("eps_linear requires eta > 0");
    const double d = 1.0 + g * params.xi;
    return g * (params.eta + g * params.xi * params.xi) / (params.eta * d * d);
}

namespace detail {

double eps_qpsk_1d(double g, double eta)
{
    const double s = g * eta;
    if (s == 0.0)
        return g;
    const double rs = std::sqrt(s);
    // 1 - tanh(u) = 2 / (1 + e^{2u}), kept in that form to avoid cancellation at high snr
    const double v = expect_normal_adaptive([&](double t) { return 2.0 / (1.0 + std::exp(2.0 * (s + rs * t))); });
    return g * v;
}

double mi_qpsk_1d(double g, double eta)
{
    const double s = g * eta;
    if (s == 0.0)
        return 0.0;
    const double rs = std::sqrt(s);
    // E u = s, and u - lncosh(u) stays bounded
    const double v = expect_normal_adaptive([&](double t) {
        const double u = s + rs * t;
        return u - log_cosh(u);
    });
    return 2.0 * v;
}

double eps_generic(const ScalarParams& params, const Constellation& p, const Constellation& q)
{
    const double g = params.g, eta = params.eta, xi = params.xi;
    if (g == 0.0)
        return 0.0;
    if (xi == 0.0)
        return g;
    if (!(eta > 0.0))
        throw SingularInput("eps_actual: eta = 0 with an informative postulated channel");
    const double sg = std::sqrt(g);
    const double sd = 1.0 / std::sqrt(eta);
    if (p.is_gaussian()) {
        // E|x - m|^2 = mmse_p + E|E[x|z] - m(z)|^2 with z ~ CN(0, g + 1/eta)
        const double sz = std::sqrt(g + 1.0 / eta);
        const double a = sg * eta / (1.0 + g * eta);
        const Mixture mix(q, sg, xi);
        const double extra = expect_cn_adaptive(
            [&](cplx w) {
                const cplx z = sz * w;
                return std::norm(a * z - mix.mean(z));
            },
            mix.conj_closed);
        return g * (1.0 / (1.0 + g * eta) + extra);
    }
    const Mixture mix(q, sg, xi);
    const std::size_t nj = input_count(p, q);
    double v = 0.0;
    for (std::size_t j = 0; j < nj; ++j) {
        const cplx x = p.points()[input_index(p, j, nj)];
        v += input_weight(p, j, nj) *
             expect_cn_adaptive([&](cplx w) { return std::norm(x - mix.mean(sg * x + sd * w)); }, mix.even_for(x));
    }
    return g * v;
}

double mi_generic(double g, double eta, const Constellation& p)
{
    const double s = g * eta;
    if (s == 0.0)
        return 0.0;
    if (p.is_gaussian())
        return std::log1p(s);
    const double rs = std::sqrt(s);
    // -E ln sum_i p_i exp(|w|^2 - |w + rs (x - x_i)|^2), written as a mixture centred at rs x
    const Mixture mix(p, rs, 1.0);
    const std::size_t nj = input_count(p, p);
    double acc = 0.0;
    for (std::size_t j = 0; j < nj; ++j) {
        const cplx x = p.points()[input_index(p, j, nj)];
        acc += input_weight(p, j, nj) *
               expect_cn_adaptive([&](cplx w) { return -(std::norm(w) + mix.log_sum(w + rs * x)); }, mix.even_for(x));
    }
    return acc;
}

}  // namespace detail

double eps_actual(const ScalarParams& params, const Constellation& p, const Constellation& q)
{
    if (params.g < 0.0 || params.eta < 0.0 || params.xi < 0.0)
        throw SingularInput("scalar parameters must be nonnegative");
    if (params.g == 0.0)
        return 0.0;
    if (params.xi == 0.0)
        return params.g;
    if (q.is_gaussian())
        return eps_linear(params);
    if (p.is_qpsk() && q.is_qpsk() && params.xi == params.eta)
        return detail::eps_qpsk_1d(params.g, params.eta);
    return detail::eps_generic(params, p, q);
}

double nu_posterior(const ScalarParams& params, const Constellation& q)
{
    if (params.g == 0.0)
        return 0.0;
    if (params.xi == 0.0)
        return params.g;
    if (q.is_gaussian())
        return params.g / (1.0 + params.g * params.xi);
    return eps_actual({params.g, params.xi, params.xi}, q, q);
}

double nu_actual(const ScalarParams& params, const Constellation& p, const Constellation& q)
{
    if (params.g < 0.0 || params.eta < 0.0 || params.xi < 0.0)
        throw SingularInput("scalar parameters must be nonnegative");
    if (params.g == 0.0)
        return 0.0;
    if (params.xi == 0.0)
        return params.g;
    // The posterior variance does not depend on z for a Gaussian postulate.
    if (q.is_gaussian())
        return params.g / (1.0 + params.g * params.xi);
    if (p == q && params.xi == params.eta)
        return eps_actual(params, p, q);
    if (!(params.eta > 0.0))
        throw SingularInput("nu_actual: eta = 0 with an informative postulated channel");
    const double g = params.g;
    const double sg = std::sqrt(g);
    const Mixture mix(q, sg, params.xi);
    if (p.is_gaussian()) {
        const double sz = std::sqrt(g + 1.0 / params.eta);
        return g * expect_cn_adaptive([&](cplx w) { return mix.variance(sz * w); }, mix.conj_closed);
    }
    const double sd = 1.0 / std::sqrt(params.eta);
    const std::size_t nj = input_count(p, q);
    double v = 0.0;
    for (std::size_t j = 0; j < nj; ++j) {
        const cplx x = p.points()[input_index(p, j, nj)];
        v += input_weight(p, j, nj) *
             expect_cn_adaptive([&](cplx w) { return mix.variance(sg * x + sd * w); }, mix.even_for(x));
    }
    return g * v;
}

double scalar_mi(double g, double eta, const Constellation& p)
{
    if (g < 0.0 || eta < 0.0)
        throw SingularInput("scalar parameters must be nonnegative");
    if (g * eta == 0.0)
        return 0.0;
    if (p.is_gaussian())
        return std::log1p(g * eta);
    if (p.is_qpsk())
        return detail::mi_qpsk_1d(g, eta);
    return detail::mi_generic(g, eta, p);
}

double sd_rate_scalar(double g, double eta, const Constellation& p)
{
    if (g < 0.0 || eta < 0.0)
        throw SingularInput("scalar parameters must be nonnegative");
    if (eta == 0.0 || g == 0.0)
        return 0.0;
    const double ref = std::log(kPi * std::exp(1.0) / eta);
    if (p.is_gaussian()) {
        const double v = g + 1.0 / eta;
        const double sv = std::sqrt(v);
        const double h = integrate_adaptive([&](const QuadratureRule& r) {
            return expect_cn(r, [&](cplx w) {
                const cplx z = sv * w;
                return std::log(kPi * v) + std::norm(z) / v;
            });
        });
        return h - ref;
    }
    const double sg = std::sqrt(g);
    const double sd = 1.0 / std::sqrt(eta);
    const Mixture mix(p, sg, eta);
    const std::size_t nj = input_count(p, p);
    double h = 0.0;
    for (std::size_t j = 0; j < nj; ++j) {
        const cplx x = p.points()[input_index(p, j, nj)];
        h += input_weight(p, j, nj) *
             expect_cn_adaptive([&](cplx w) { return -(std::log(eta / kPi) + mix.log_sum(sg * x + sd * w)); },
                                mix.even_for(x));
    }
    return h - ref;
}

double cross_entropy_term(const ScalarParams& params, const Constellation& p, const Constellation& q)
{
    const double g = params.g, eta = params.eta, xi = params.xi;
    if (!(eta > 0.0) || !(xi > 0.0))
        throw SingularInput("cross-entropy term requires eta > 0 and xi > 0");
    if (q.is_gaussian()) {
        const double vq = g + 1.0 / xi;
        return std::log(kPi * vq) + (g + 1.0 / eta) / vq;
    }
    const double sg = std::sqrt(g);
    if (p.is_gaussian()) {
        const double sz = std::sqrt(g + 1.0 / eta);
        const Mixture mix(q, sg, xi);
        return expect_cn_adaptive([&](cplx w) { return -(std::log(xi / kPi) + mix.log_sum(sz * w)); },
                                  mix.conj_closed);
    }
    const Mixture mix(q, sg, xi);
    const double sd = 1.0 / std::sqrt(eta);
    const std::size_t nj = input_count(p, q);
    double acc = 0.0;
    for (std::size_t j = 0; j < nj; ++j) {
        const cplx x = p.points()[input_index(p, j, nj)];
        acc += input_weight(p, j, nj) *
               expect_cn_adaptive([&](cplx w) { return -(std::log(xi / kPi) + mix.log_sum(sg * x + sd * w)); },
                                  mix.even_for(x));
    }
    return acc;
}

ScalarMoments scalar_moments(const ScalarParams& params, const Constellation& p, const Constellation& q)
{
    const double g = params.g, eta = params.eta, xi = params.xi;
    ScalarMoments out{0.0, 0.0, 1.0};
    if (xi == 0.0 || g == 0.0)
        return out;
    if (!(eta > 0.0))
        throw SingularInput("scalar moments require eta > 0");
    const double sg = std::sqrt(g);
    if (q.is_gaussian()) {
        const double a = sg * xi / (1.0 + g * xi);
        out.cross = a * sg;
        out.est_power = a * a * (g + 1.0 / eta);
        out.mse = 1.0 - 2.0 * a * sg + out.est_power;
        return out;
    }
    const Mixture mix(q, sg, xi);
    const double sd = 1.0 / std::sqrt(eta);
    // Gaussian inputs: condition on z ~ CN(0, g + 1/eta) and use E[x|z] = a z.
    const double sz = std::sqrt(g + 1.0 / eta);
    const double a = sg * eta / (1.0 + g * eta);
    auto run = [&](auto&& fn) {
        if (p.is_gaussian())
            return expect_cn_adaptive([&](cplx w) { return fn(a * sz * w, sz * w); });
        double acc = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const cplx x = p.points()[j];
            acc += p.probs()[j] * expect_cn_adaptive([&](cplx w) { return fn(x, sg * x + sd * w); });
        }
        return acc;
    };
    const double cre = run([&](cplx x, cplx z) { return std::real(x * std::conj(mix.mean(z))); });
    const double cim = run([&](cplx x, cplx z) { return std::imag(x * std::conj(mix.mean(z))); });
    out.cross = cplx(cre, cim);
    out.est_power = run([&](cplx, cplx z) { return std::norm(mix.mean(z)); });
    out.mse = p.is_gaussian() ? eps_actual(params, p, q) / g
                              : run([&](cplx x, cplx z) { return std::norm(x - mix.mean(z)); });
    return out;
}

}  // namespace afr
