#include <benchmark/benchmark.h>

#include "simcap/channel.hpp"
#include "simcap/metrics.hpp"
#include "simcap/optimizer.hpp"
#include "simcap/scene.hpp"
#include "simcap/simstack.hpp"

using namespace simcap;

namespace {

SystemConfig sized_config(int layers) {
    SystemConfig cfg = default_config();
    cfg.layers_tx = layers;
    cfg.layers_rx = layers;
    cfg.finalize();
    return cfg;
}

}  // namespace

static void BM_BuildScene(benchmark::State& state) {
    SystemConfig cfg = sized_config(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(build_scene(cfg));
}
BENCHMARK(BM_BuildScene)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_Compose(benchmark::State& state) {
    SystemConfig cfg = sized_config(static_cast<int>(state.range(0)));
    SceneMatrices sc = build_scene(cfg);
    PhaseProfile pr = random_profile(cfg, 1);
    for (auto _ : state) benchmark::DoNotOptimize(compose(pr, sc));
}
BENCHMARK(BM_Compose)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);

// one fading draw plus the instantaneous capacity it feeds
static void BM_McTrial(benchmark::State& state) {
    SystemConfig cfg = sized_config(4);
    SceneMatrices sc = build_scene(cfg);
    CompositeResponse comp = compose(random_profile(cfg, 1), sc);
    std::uint64_t i = 0;
    for (auto _ : state) {
        ChannelDraw draw = draw_channel(7, i++, sc, comp, sc.beta / cfg.m_tx);
        benchmark::DoNotOptimize(instantaneous_capacity(draw.h, 10.0, cfg.n_t));
    }
}
BENCHMARK(BM_McTrial)->Unit(benchmark::kMicrosecond);

// single-layer analytic gradient through the public partial-product path
static void BM_LayerGradient(benchmark::State& state) {
    SystemConfig cfg = sized_config(static_cast<int>(state.range(0)));
    SceneMatrices sc = build_scene(cfg);
    PhaseProfile pr = random_profile(cfg, 1);
    CompositeResponse comp = compose(pr, sc);
    for (auto _ : state) {
        PartialProducts pp = partial_products(pr, sc, Side::transmit, 1);
        benchmark::DoNotOptimize(grad_clb_tx(pr, sc, comp, pp, 100.0, 1));
    }
}
BENCHMARK(BM_LayerGradient)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);

// full ascent iteration: every layer's gradient plus the backtracking probes
static void BM_PgaIteration(benchmark::State& state) {
    SystemConfig cfg = sized_config(static_cast<int>(state.range(0)));
    SceneMatrices sc = build_scene(cfg);
    ObjectiveSpec obj{Objective::clb, cfg.snr_linear(), 1.0};
    OptimizerOptions opts;
    opts.max_iters = 1;
    opts.tol = 0.0;
    PhaseProfile pr = random_profile(cfg, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(projected_gradient_ascent(cfg, sc, obj, pr, opts));
}
BENCHMARK(BM_PgaIteration)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
