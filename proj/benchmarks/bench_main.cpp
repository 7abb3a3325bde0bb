#include <random>

#include <benchmark/benchmark.h>

#include "newsfolio/portfolio.hpp"
#include "newsfolio/ridge.hpp"
#include "newsfolio/sharpe_test.hpp"

namespace nf = newsfolio;

namespace {

Eigen::MatrixXd random_design(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = normal(rng);
    return X;
}

void BM_RidgeGrid(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int d = static_cast<int>(state.range(1));
    Eigen::MatrixXd X = random_design(n, d, 7);
    Eigen::VectorXd y = random_design(n, 1, 8);
    nf::standardize(X);
    auto grid = nf::default_lambda_grid();
    for (auto _ : state) {
        nf::RidgeProblem problem(X, y);
        benchmark::DoNotOptimize(nf::select_lambda(problem, grid));
    }
}
BENCHMARK(BM_RidgeGrid)->Args({500, 16})->Args({4000, 32})->Args({4000, 128});

void BM_DecileAssign(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    nf::DailyForecastSet day;
    day.trading_day = nf::Date(2010, 1, 4);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    for (int i = 0; i < n; ++i) {
        nf::ForecastEntry e;
        e.firm_id = "F" + std::to_string(i);
        e.prediction = normal(rng);
        e.next_day_return = normal(rng) * 0.02;
        day.entries.push_back(std::move(e));
    }
    for (auto _ : state) benchmark::DoNotOptimize(nf::decile_assign(day));
}
BENCHMARK(BM_DecileAssign)->Arg(200)->Arg(2000);

void BM_SharpeHac(benchmark::State& state) {
    const std::size_t T = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(13);
    std::normal_distribution<double> normal;
    nf::PairedSeries pair;
    for (std::size_t t = 0; t < T; ++t) {
        pair.a.push_back(normal(rng) * 0.01);
        pair.b.push_back(normal(rng) * 0.01);
    }
    for (auto _ : state) benchmark::DoNotOptimize(nf::lw_test(pair));
}
BENCHMARK(BM_SharpeHac)->Arg(1000)->Arg(3900);

}  // namespace

BENCHMARK_MAIN();
