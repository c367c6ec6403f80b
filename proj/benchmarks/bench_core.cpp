#include <benchmark/benchmark.h>

#include "activeid/active.hpp"
#include "activeid/design.hpp"
#include "activeid/estimate.hpp"
#include "activeid/freq.hpp"
#include "activeid/lds.hpp"

using namespace activeid;

namespace {

Matrix jordan(int d, double rho) {
    Matrix A = rho * Matrix::Identity(d, d);
    for (int i = 0; i + 1 < d; ++i) A(i, i + 1) = 1.0;
    return A;
}

PeriodicInput random_input(int p, int k, std::uint64_t seed) {
    RandomStream r(seed, "bench");
    Matrix       u(p, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < p; ++i) u(i, j) = r.gaussian();
    u.colwise() -= u.rowwise().mean();
    return PeriodicInput::from_time_domain(u, u.squaredNorm() / k);
}

void BM_Transfer(benchmark::State& state) {
    const int    d = static_cast<int>(state.range(0));
    // large Jordan blocks make the resolvent numerically singular
    Matrix A = 0.5 * Matrix::Identity(d, d);
    for (int i = 0; i + 1 < d; ++i) A(i, i + 1) = 0.3;
    const Matrix B     = Matrix::Identity(d, d);
    double       theta = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(transfer(A, B, theta));
        theta += 1e-3;
    }
}
BENCHMARK(BM_Transfer)->Arg(4)->Arg(16)->Arg(64);

void BM_GammaKU(benchmark::State& state) {
    const int    d = 4;
    const int    k = static_cast<int>(state.range(0));
    const Matrix A = jordan(d, 0.9);
    const Matrix B = Matrix::Identity(d, d);
    const auto   in = random_input(d, k, 1);
    for (auto _ : state) benchmark::DoNotOptimize(gamma_k_u(A, B, in));
    state.SetComplexityN(k);
}
BENCHMARK(BM_GammaKU)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oN);

void BM_OptInput(benchmark::State& state) {
    const int     d = 4;
    DesignProblem pr;
    pr.A_hat          = jordan(d, 0.9);
    pr.B              = Matrix::Identity(d, d);
    pr.gamma2         = 4.0;
    pr.k              = static_cast<int>(state.range(0));
    pr.support        = all_frequencies(pr.k);
    pr.past_cov       = 100.0 * gram_noise(pr.A_hat, 50);
    pr.horizon_weight = 300.0;
    for (auto _ : state) benchmark::DoNotOptimize(opt_input(pr, 7).objective);
}
BENCHMARK(BM_OptInput)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_OptimalNoise(benchmark::State& state) {
    const int    d = static_cast<int>(state.range(0));
    const Matrix A = jordan(d, 0.9);
    const Matrix B = Matrix::Identity(d, d);
    const long   K = 200;
    for (auto _ : state) benchmark::DoNotOptimize(optimal_noise_cov(A, B, 4.0, 1.0, K).objective);
}
BENCHMARK(BM_OptimalNoise)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
    const int    d = 4;
    const LinSys sys(jordan(d, 0.9), Matrix::Identity(d, d));
    const auto   in = random_input(d, 20, 2);
    const long   T  = state.range(0);
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate(sys, NoiseModel{1.0, 0.5}, in.signal(), T, Vector::Zero(d), 3).states(0, T));
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(10000);

void BM_LeastSquares(benchmark::State& state) {
    const int    d = 4;
    const LinSys sys(jordan(d, 0.9), Matrix::Identity(d, d));
    const long   T  = state.range(0);
    const auto   tr = simulate(sys, NoiseModel{1.0, 1.0}, {}, T, Vector::Zero(d), 4);
    for (auto _ : state) benchmark::DoNotOptimize(least_squares(tr, sys.B()).A_hat(0, 0));
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_LeastSquares)->Arg(1000)->Arg(10000);

void BM_ActiveRun(benchmark::State& state) {
    const LinSys sys(jordan(4, 0.9), Matrix::Identity(4, 4));
    ActiveConfig c;
    c.gamma2 = 4.0;
    c.epochs = static_cast<int>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(run_active(sys, NoiseModel{}, c, trial_seed(5, seed++)).A_hat(0, 0));
}
BENCHMARK(BM_ActiveRun)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
