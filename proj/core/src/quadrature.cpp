#include "afrelay/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "afrelay/errors.hpp"

namespace afr {

namespace {

// Orthonormal probabilists' Hermite recurrence; returns p_n(x), p_{n-1}(x) and sum_k p_k(x)^2.
void hermite_eval(int n, double x, double& pn, double& pn1, double& sumsq)
{
    double p0 = 1.0, p1 = x;
    sumsq = 1.0;
    if (n == 1) {
        pn = p1;
        pn1 = p0;
        return;
    }
    sumsq += p1 * p1;
    for (int k = 1; k < n; ++k) {
        const double p2 = (x * p1 - std::sqrt(static_cast<double>(k)) * p0) / std::sqrt(k + 1.0);
        p0 = p1;
        p1 = p2;
        if (k + 1 < n)
            sumsq += p1 * p1;
    }
    pn = p1;
    pn1 = p0;
}

QuadratureRule build_rule(int n)
{
    // Golub-Welsch for the initial nodes, then Newton polish and Christoffel weights.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k)
        sub[k - 1] = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    QuadratureRule r;
    r.order = n;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = es.eigenvalues()[i];
        double pn, pn1, s;
        for (int it = 0; it < 3; ++it) {
            hermite_eval(n, x, pn, pn1, s);
            const double d = std::sqrt(static_cast<double>(n)) * pn1;
            if (d != 0.0)
                x -= pn / d;
        }
        hermite_eval(n, x, pn, pn1, s);
        r.nodes[i] = x;
        r.weights[i] = 1.0 / s;
    }
    // Symmetrize and normalize.
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
        const double w = 0.5 * (r.weights[n - 1 - i] + r.weights[i]);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        r.nodes[n / 2] = 0.0;
    double sum = 0.0;
    for (double w : r.weights)
        sum += w;
    for (double& w : r.weights)
        w /= sum;
    return r;
}

}  // namespace

const QuadratureRule& gauss_hermite(int order)
{
    if (order < 1 || order > 512)
        throw QuadratureError("unsupported Gauss-Hermite order");
    static const QuadratureRule r64 = build_rule(64), r128 = build_rule(128), r256 = build_rule(256);
    if (order == 64)
        return r64;
    if (order == 128)
        return r128;
    if (order == 256)
        return r256;
    static std::mutex mu;
    static std::map<int, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[order];
    if (!slot)
        slot = std::make_unique<QuadratureRule>(build_rule(order));
    return *slot;
}

}  // namespace afr
