#pragma once

#include <cmath>
#include <complex>
#include <vector>

namespace afr {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double nats_to_bits(double nats) { return nats / std::log(2.0); }

// Standard normal tail probability.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// ln cosh(x) without overflow.
inline double log_cosh(double x)
{
    const double a = std::fabs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

// Pairwise summation; the result depends only on the order of `v`.
double pairwise_sum(const double* v, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace afr
