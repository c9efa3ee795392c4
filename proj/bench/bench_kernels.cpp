// Serial reference kernels against their OpenMP counterparts, plus whole
// sweeps in warm (sequential) and flat (parallel) mode.
//
//   ./bench_kernels --benchmark_filter=Invert
//   OMP_NUM_THREADS=4 ./bench_kernels

#include <benchmark/benchmark.h>

#include <random>

#include "wirtstab/casemodel.hpp"
#include "wirtstab/numerics.hpp"
#include "wirtstab/powerflow.hpp"
#include "wirtstab/sweep.hpp"

using namespace wirtstab;
using numerics::Complex;
using numerics::ComplexMatrix;
using numerics::Execution;

namespace {

ComplexMatrix random_matrix(std::size_t n) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ComplexMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a(i, j) = Complex(u(gen), u(gen)) + (i == j ? Complex(n, 0) : Complex{});
    return a;
}

void BM_Multiply(benchmark::State& state) {
    const auto a = random_matrix(static_cast<std::size_t>(state.range(0)));
    const bool par = state.range(1) != 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(par ? numerics::multiply(a, a) : numerics::serial::multiply(a, a));
}

void BM_LuFactor(benchmark::State& state) {
    const auto a = random_matrix(static_cast<std::size_t>(state.range(0)));
    const bool par = state.range(1) != 0;
    for (auto _ : state) {
        if (par)
            benchmark::DoNotOptimize(numerics::LuFactorization<Complex>(a, Execution::Parallel));
        else
            benchmark::DoNotOptimize(numerics::serial::lu_factor(a));
    }
}

void BM_Invert(benchmark::State& state) {
    const auto a = random_matrix(static_cast<std::size_t>(state.range(0)));
    const bool par = state.range(1) != 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(par ? numerics::invert(a) : numerics::serial::invert(a));
}

void BM_ConventionalJacobian(benchmark::State& state) {
    const auto c = casemodel::load_case(std::string(WIRTSTAB_DATA_DIR) + "/case39.m");
    const powerflow::Problem p(c, powerflow::default_profile(c));
    const auto pt = powerflow::newton_solve(p);
    const auto exec = state.range(0) != 0 ? Execution::Parallel : Execution::Serial;
    for (auto _ : state)
        benchmark::DoNotOptimize(powerflow::conventional_jacobian(p, pt.v, exec));
}

void BM_Sweep39(benchmark::State& state) {
    const auto c = casemodel::load_case(std::string(WIRTSTAB_DATA_DIR) + "/case39_ibr.json");
    const auto profile = powerflow::default_profile(c);
    sweep::SweepOptions opt;
    opt.targets = casemodel::ScalingTarget::IbrOnly;
    opt.start = state.range(0) != 0 ? sweep::SweepOptions::Start::Flat : sweep::SweepOptions::Start::Warm;
    const auto schedule = sweep::make_schedule(0.2, 1.0, 0.1);
    for (auto _ : state)
        benchmark::DoNotOptimize(sweep::run_sweep(c, profile, schedule, opt));
}

} // namespace

// second argument: 0 serial reference, 1 OpenMP
BENCHMARK(BM_Multiply)->ArgsProduct({{40, 120, 300}, {0, 1}});
BENCHMARK(BM_LuFactor)->ArgsProduct({{40, 120, 300}, {0, 1}});
BENCHMARK(BM_Invert)->ArgsProduct({{40, 120, 300}, {0, 1}});
BENCHMARK(BM_ConventionalJacobian)->Arg(0)->Arg(1);
// 0 warm sequential, 1 flat parallel
BENCHMARK(BM_Sweep39)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
