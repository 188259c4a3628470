#include <benchmark/benchmark.h>

#include "afrelay/math.hpp"
#include "afrelay/mc/estimators.hpp"
#include "afrelay/performance.hpp"
#include "afrelay/scalar_channel.hpp"

namespace {

using namespace afr;

NetworkConfig net(std::vector<int> M, double rho_db)
{
    const int K = static_cast<int>(M.size()) - 1;
    return build_network(K, std::move(M), std::vector<double>(K, db_to_linear(rho_db)), BetaMode::Auto);
}

void BM_EpsQpsk(benchmark::State& st)
{
    const auto q = Constellation::qpsk();
    double eta = 0.1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(eps_actual({1.0, eta, eta}, q, q));
        eta = eta < 50 ? eta * 1.01 : 0.1;
    }
}
BENCHMARK(BM_EpsQpsk);

void BM_EpsMismatched(benchmark::State& st)
{
    const auto q = Constellation::qpsk();
    const auto p8 = Constellation::psk(8);
    for (auto _ : st)
        benchmark::DoNotOptimize(eps_actual({2.0, 1.3, 0.7}, q, p8));
}
BENCHMARK(BM_EpsMismatched);

void BM_SolveGaussian(benchmark::State& st)
{
    const auto g = Constellation::gaussian();
    const auto cfg = net({8, 8, 8, 8}, static_cast<double>(st.range(0)));
    for (auto _ : st)
        benchmark::DoNotOptimize(solve(cfg, DetectorSpec::jdd(g), g));
}
BENCHMARK(BM_SolveGaussian)->Arg(0)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_BranchesQpskMap(benchmark::State& st)
{
    const auto q = Constellation::qpsk();
    const auto cfg = net({10, 9, 8, 7}, 18.5);
    for (auto _ : st)
        benchmark::DoNotOptimize(solve_branches(cfg, DetectorSpec::map(q), q));
}
BENCHMARK(BM_BranchesQpskMap)->Unit(benchmark::kMillisecond);

void BM_JddRateQpsk(benchmark::State& st)
{
    const auto q = Constellation::qpsk();
    const auto cfg = net({8, 8, 8, 8}, 10.0);
    for (auto _ : st)
        benchmark::DoNotOptimize(jdd_rate(cfg, q, true));
}
BENCHMARK(BM_JddRateQpsk)->Unit(benchmark::kMillisecond);

void BM_McMiGaussian(benchmark::State& st)
{
    const auto cfg = net({8, 8, 8, 8}, 10.0);
    for (auto _ : st)
        benchmark::DoNotOptimize(mc::mc_mi_gaussian(cfg, 100, 1));
}
BENCHMARK(BM_McMiGaussian)->Unit(benchmark::kMillisecond);

void BM_McBerMap(benchmark::State& st)
{
    const auto q = Constellation::qpsk();
    const auto cfg = net({static_cast<int>(st.range(0)), 8, 8}, 10.0);
    for (auto _ : st)
        benchmark::DoNotOptimize(mc::mc_ber(cfg, DetectorSpec::map(q), q, 10, 1, 20));
}
BENCHMARK(BM_McBerMap)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
