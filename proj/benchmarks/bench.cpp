#include <benchmark/benchmark.h>

#include "pqx/bexplain.hpp"
#include "pqx/dataset.hpp"
#include "pqx/kmeans.hpp"
#include "pqx/network.hpp"
#include "pqx/occlusion.hpp"
#include "pqx/rng.hpp"
#include "pqx/train.hpp"

namespace {

struct DeskFixture {
    pqx::ArchDescriptor arch = pqx::ArchDescriptor::desk();
    pqx::Network net{arch};
    std::vector<double> theta, buffers, x;

    DeskFixture() {
        net.init_params(theta, 1);
        net.init_buffers(buffers);
        pqx::Rng rng(2);
        x.resize(640);
        for (double& v : x) v = rng.normal();
    }
};

DeskFixture& fixture() {
    static DeskFixture fx;
    return fx;
}

void BM_ForwardDesk(benchmark::State& state) {
    auto& fx = fixture();
    for (auto _ : state) {
        auto probs = fx.net.forward_one(fx.theta, fx.buffers, fx.x, pqx::Mode::eval);
        benchmark::DoNotOptimize(probs.data());
    }
}
BENCHMARK(BM_ForwardDesk);

void BM_LossAndGradDesk(benchmark::State& state) {
    auto& fx = fixture();
    const int batch = static_cast<int>(state.range(0));
    pqx::BatchTensor input;
    input.resize(batch, 1, 640);
    pqx::Rng rng(3);
    for (double& v : input.data) v = rng.normal();
    std::vector<int> labels(static_cast<size_t>(batch));
    for (int b = 0; b < batch; ++b) labels[static_cast<size_t>(b)] = b % 16;
    std::vector<double> grad(fx.net.param_count());
    std::vector<double> bufs = fx.buffers;
    for (auto _ : state) {
        const double loss =
            fx.net.loss_and_grad(fx.theta, bufs, false, input, labels, 1e-4, grad);
        benchmark::DoNotOptimize(loss);
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_LossAndGradDesk)->Arg(1)->Arg(32);

void BM_RelevanceMap(benchmark::State& state) {
    auto& fx = fixture();
    pqx::OcclusionConfig cfg; // w=64 v=8 over 640 samples: 73 windows + clean
    const auto baseline = pqx::resolve_baseline(cfg, fx.x, {});
    for (auto _ : state) {
        const auto rv = pqx::relevance_map(fx.net, fx.theta, fx.buffers, fx.x, baseline, 0, cfg);
        benchmark::DoNotOptimize(rv.r.data());
    }
}
BENCHMARK(BM_RelevanceMap);

void BM_GenerateRecord(benchmark::State& state) {
    const auto wave = pqx::WaveformSpec::standard(0.3);
    uint64_t seed = 0;
    for (auto _ : state) {
        pqx::Rng rng(seed++);
        const auto dist = pqx::draw_disturbance(pqx::DisturbanceClass::FlickerSag, wave, rng);
        const auto rec = pqx::synth_disturbed(wave, dist, 30.0, seed);
        benchmark::DoNotOptimize(rec.x.data());
    }
}
BENCHMARK(BM_GenerateRecord);

void BM_KMeans500x640(benchmark::State& state) {
    pqx::Rng rng(7);
    std::vector<double> rows(500 * 640);
    for (double& v : rows) v = rng.normal();
    for (auto _ : state) {
        const auto res = pqx::kmeans(rows, 500, 640, 5, 11);
        benchmark::DoNotOptimize(res.inertia);
    }
}
BENCHMARK(BM_KMeans500x640);

} // namespace

BENCHMARK_MAIN();
