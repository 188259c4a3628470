#pragma once

#include <cstdint>
#include <random>

#include "afrelay/math.hpp"

namespace afr::mc {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Independent stream for (master seed, trial, purpose); identical regardless of scheduling.
inline std::mt19937_64 trial_engine(std::uint64_t master, std::uint64_t trial, std::uint64_t stream = 0)
{
    const std::uint64_t s = splitmix64(splitmix64(master) ^ splitmix64(trial * 0x2545F4914F6CDD1Dull + stream));
    return std::mt19937_64(s);
}

class ComplexNormal {
public:
    // CN(0, var)
    explicit ComplexNormal(double var = 1.0) : n_(0.0, std::sqrt(var / 2.0)) {}
    template <class Engine>
    cplx operator()(Engine& e)
    {
        const double re = n_(e);
        const double im = n_(e);
        return {re, im};
    }

private:
    std::normal_distribution<double> n_;
};

}  // namespace afr::mc
