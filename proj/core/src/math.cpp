#include "afrelay/math.hpp"

#include <atomic>

#include "afrelay/mc/parallel.hpp"

namespace afr {

double pairwise_sum(const double* v, std::size_t n)
{
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

namespace {
std::atomic<int> g_threads{1};
}

void set_default_threads(int n) { g_threads = n < 1 ? 1 : n; }
int default_threads() { return g_threads; }

}  // namespace afr
