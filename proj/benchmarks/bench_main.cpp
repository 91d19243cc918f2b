#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "arhgls/arh_sim.hpp"
#include "arhgls/gls_core.hpp"
#include "arhgls/models.hpp"
#include "arhgls/plugin_est.hpp"
#include "arhgls/rng.hpp"

namespace {

using namespace arhgls;

// Simulated Model 1 data shared by the fitting benchmarks.
struct Fixture {
    ModelSpec model = ModelSpec::model1();
    RegressorPanel panel;
    std::vector<HFunction> Y;
    BlockPrecision P;

    explicit Fixture(int N) {
        panel = build_model_regressors(model, N, model.K);
        RngStream rng = RngStream::for_repetition(7, 0);
        const Interval iv{0.0, 60.0};
        const ArhSpec arh(model.rho(), model.r_delta());
        const auto errors = simulate_arh1(arh, N, 0, iv, rng);
        Y = simulate_response(panel, model.beta_truth(iv), errors);
        P = build_block_precision(model.r0_stationary(), model.rho(), N);
    }
};

void BM_TridiagQuadForm(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    const ToeplitzAr1 t{0.7, N};
    const SymTridiag tri = toeplitz_inverse_tridiag(t);
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(N, -1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(tri.quad_form(x, x));
    }
}
BENCHMARK(BM_TridiagQuadForm)->Arg(200)->Arg(1000);

void BM_DenseQuadForm(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    const ToeplitzAr1 t{0.7, N};
    const Eigen::MatrixXd dense = toeplitz_inverse_tridiag(t).dense();
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(N, -1.0, 1.0);
    for (auto _ : state) {
        const double v = x.dot(dense * x);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_DenseQuadForm)->Arg(200)->Arg(1000);

void BM_SimulatePath(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    const ModelSpec model = ModelSpec::model1();
    const ArhSpec arh(model.rho(), model.r_delta());
    const Interval iv{0.0, 60.0};
    std::uint64_t rep = 0;
    for (auto _ : state) {
        RngStream rng = RngStream::for_repetition(11, rep++);
        benchmark::DoNotOptimize(simulate_arh1(arh, N, 0, iv, rng));
    }
}
BENCHMARK(BM_SimulatePath)->Arg(200)->Arg(1000);

void BM_GlsKnownPrecision(benchmark::State& state) {
    const Fixture fx(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(gls_estimate(fx.panel, fx.Y, fx.P));
    }
}
BENCHMARK(BM_GlsKnownPrecision)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_PluginPipeline(benchmark::State& state) {
    const Fixture fx(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(plugin_gls(fx.panel, fx.Y, PluginOptions{4, 1.0}));
    }
}
BENCHMARK(BM_PluginPipeline)->Arg(200)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
