#include <benchmark/benchmark.h>

#include <random>

#include "rtedmd/baselines.hpp"
#include "rtedmd/estimator_rt.hpp"
#include "rtedmd/linalg.hpp"
#include "rtedmd/spectral.hpp"

using namespace rtedmd;

namespace {

std::vector<Eigen::VectorXd> starts(int m) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Eigen::VectorXd> out;
    for (int i = 0; i < m; ++i) out.push_back(Eigen::VectorXd::Constant(1, u(rng)));
    return out;
}

const TrajectoryEnsemble& ou_ensemble() {
    static const TrajectoryEnsemble ens = simulate_paths(ornstein_uhlenbeck(-0.5, 0.02), Domain::ball(1, 2.0),
                                                         starts(50), 50, SimConfig{5.0, 100.0, 1, 3});
    return ens;
}

}  // namespace

static void BM_SimulateOu(benchmark::State& state) {
    const auto init = starts(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto ens = simulate_paths(ornstein_uhlenbeck(-0.5, 0.02), Domain::ball(1, 2.0), init, 20,
                                  SimConfig{2.0, 100.0, 10, 5});
        benchmark::DoNotOptimize(ens);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 20 * 2000);
}
BENCHMARK(BM_SimulateOu)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_SimulateLv(benchmark::State& state) {
    std::vector<Eigen::VectorXd> init(20, Eigen::Vector2d(3.0, 2.0));
    const Domain box = Domain::box(Eigen::Vector2d(0.01, 0.01), Eigen::Vector2d(10, 10));
    for (auto _ : state) {
        auto ens = simulate_paths(lotka_volterra({}), box, init, 20, SimConfig{2.0, 100.0, 10, 5});
        benchmark::DoNotOptimize(ens);
    }
}
BENCHMARK(BM_SimulateLv)->Unit(benchmark::kMillisecond);

static void BM_MeanObservables(benchmark::State& state) {
    const Dictionary dict = monomials_up_to_degree(1, static_cast<int>(state.range(0)), false);
    ou_ensemble();
    for (auto _ : state) benchmark::DoNotOptimize(mean_observables(ou_ensemble(), dict));
}
BENCHMARK(BM_MeanObservables)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_EstimateRt(benchmark::State& state) {
    const Dictionary dict = monomials_up_to_degree(1, 5, false);
    const RtConfig rt;
    ou_ensemble();
    for (auto _ : state) benchmark::DoNotOptimize(estimate_rt(ou_ensemble(), dict, rt));
}
BENCHMARK(BM_EstimateRt)->Unit(benchmark::kMillisecond);

static void BM_FitKoopman(benchmark::State& state) {
    const Dictionary dict = monomials_up_to_degree(1, 5, false);
    ou_ensemble();
    for (auto _ : state) benchmark::DoNotOptimize(fit_koopman(ou_ensemble(), dict, 1));
}
BENCHMARK(BM_FitKoopman)->Unit(benchmark::kMillisecond);

static void BM_StreamingLeastSquares(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Eigen::MatrixXd rows(1000, 2 * n);
    for (Eigen::Index i = 0; i < rows.size(); ++i) rows(i) = g(rng);
    for (auto _ : state) {
        StreamingLeastSquares s(n, n);
        for (int r = 0; r < 100; ++r)
            for (Eigen::Index k = 0; k < rows.rows(); ++k) {
                const Eigen::RowVectorXd row = rows.row(k);
                s.add_row(row.data(), row.data() + n);
            }
        benchmark::DoNotOptimize(s.solve());
    }
    state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_StreamingLeastSquares)->Arg(5)->Arg(14)->Unit(benchmark::kMillisecond);

static void BM_Eigendecompose(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = g(rng);
    for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(a));
}
BENCHMARK(BM_Eigendecompose)->Arg(5)->Arg(14)->Arg(40);
BENCHMARK_MAIN();
