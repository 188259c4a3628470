#pragma once

#include "afrelay/constellation.hpp"
#include "afrelay/math.hpp"

namespace afr {

// Decoupled scalar channels:
//   actual     z = sqrt(g) x  + w  / sqrt(eta),  x  ~ p
//   postulated z = sqrt(g) x' + w' / sqrt(xi),   x' ~ q
struct ScalarParams {
    double g = 0.0;
    double eta = 0.0;
    double xi = 0.0;
};

// Posterior mean of x' under the postulated channel.
cplx gpme_scalar(cplx z, const ScalarParams& params, const Constellation& q);

// g E|x - <x'>|^2 with z drawn from the actual channel.
double eps_actual(const ScalarParams& params, const Constellation& p, const Constellation& q);

// g E|x' - <x'>|^2 with z drawn from the postulated channel (precision xi).
double nu_posterior(const ScalarParams& params, const Constellation& q);

// g E|x' - <x'>|^2 with z drawn from the actual channel (precision eta) and x' from the postulated
// posterior. This is the nu_1 that makes the free energy stationary; it equals nu_posterior whenever
// the postulate is Gaussian or matched (xi = eta, q = p).
double nu_actual(const ScalarParams& params, const Constellation& p, const Constellation& q);

// Closed-form eps_actual for a Gaussian postulated prior and unit-energy input.
double eps_linear(const ScalarParams& params);

// I(z; x) in nats for the actual channel.
double scalar_mi(double g, double eta, const Constellation& p);

// -int p(z) ln p(z) dz - ln(pi e / eta), evaluated from the output density.
double sd_rate_scalar(double g, double eta, const Constellation& p);

// -int p(z; eta) ln q(z; xi) dz
double cross_entropy_term(const ScalarParams& params, const Constellation& p, const Constellation& q);

// Joint moments of (x, <x'>) on the scalar channel, normalised per unit gain.
struct ScalarMoments {
    cplx cross;        // E{x <x'>*}
    double est_power;  // E|<x'>|^2
    double mse;        // E|x - <x'>|^2 (= eps_actual / g)
};
ScalarMoments scalar_moments(const ScalarParams& params, const Constellation& p, const Constellation& q);

// Individual evaluation paths, exposed for consistency checks.
namespace detail {
double eps_qpsk_1d(double g, double eta);
double mi_qpsk_1d(double g, double eta);
double eps_generic(const ScalarParams& params, const Constellation& p, const Constellation& q);
double mi_generic(double g, double eta, const Constellation& p);
}  // namespace detail

}  // namespace afr
