#include <benchmark/benchmark.h>

#include <cmath>

#include "avs/model.hpp"
#include "avs/objective.hpp"

using namespace avs;

namespace {

// Matches configs/desk.ini.
ModelConfig desk_model() {
    ModelConfig cfg;
    cfg.fused_width = 32;
    cfg.model_width = 32;
    cfg.queries = 8;
    cfg.heads = 4;
    cfg.encoder_layers = 1;
    cfg.decoder_layers = 2;
    cfg.ffn_width = 64;
    cfg.mask_channels = 16;
    return cfg;
}

FrameClip frames(int t, int side) {
    std::vector<double> px(static_cast<std::size_t>(t) * 3 * side * side);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = 0.5 + 0.5 * std::sin(0.013 * static_cast<double>(i));
    return FrameClip(t, side, side, std::move(px));
}

AudioClip audio(int t) { return AudioClip(Tensor({t, 96, 64}, -6.0), 16000); }

}  // namespace

static void BM_BackboneEncode(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const AutrModel model(desk_model(), 0);
    const auto f = frames(1, side);
    const auto a = audio(1);
    for (auto _ : state) benchmark::DoNotOptimize(model.encode(f, a));
}
BENCHMARK(BM_BackboneEncode)->Arg(64)->Arg(224)->Unit(benchmark::kMillisecond);

static void BM_HeadsForward(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const AutrModel model(desk_model(), 0);
    const auto enc = model.encode(frames(1, side), audio(1));
    ag::NoGradGuard no_grad;
    for (auto _ : state) benchmark::DoNotOptimize(model.forward(enc));
}
BENCHMARK(BM_HeadsForward)->Arg(64)->Arg(224)->Unit(benchmark::kMillisecond);

// One sample's loss and backward pass through the trainable heads.
static void BM_HeadsForwardBackward(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const AutrModel model(desk_model(), 0);
    const auto enc = model.encode(frames(1, side), audio(1));
    const int g = side / 4;
    std::vector<std::uint8_t> target(static_cast<std::size_t>(g) * g);
    for (int y = 0; y < g; ++y)
        for (int x = 0; x < g; ++x) target[y * g + x] = std::abs(x - g / 2) + std::abs(y - g / 2) < g / 4;
    objective::CostConfig cfg;
    cfg.full_resolution = false;
    for (auto _ : state) {
        const auto loss = objective::training_loss(model.forward(enc), target, cfg);
        ag::backward(loss);
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_HeadsForwardBackward)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
