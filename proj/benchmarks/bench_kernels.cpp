#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "avs/core_types.hpp"
#include "avs/mask_head.hpp"
#include "avs/metrics.hpp"
#include "avs/objective.hpp"
#include "avs/spectrogram.hpp"

using namespace avs;

namespace {

std::vector<double> randn(std::mt19937& gen, std::size_t n) {
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(gen);
    return v;
}

BinaryMask blob(int side, int cx, int cy, int r) {
    BinaryMask m(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) m.set(y, x, (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r);
    return m;
}

}  // namespace

static void BM_RleEncode(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto m = blob(side, side / 2, side / 2, side / 3);
    for (auto _ : state) benchmark::DoNotOptimize(rle_encode(m));
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_RleEncode)->Arg(56)->Arg(224);

static void BM_RleDecode(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto rle = rle_encode(blob(side, side / 2, side / 2, side / 3));
    for (auto _ : state) benchmark::DoNotOptimize(rle_decode(rle));
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_RleDecode)->Arg(56)->Arg(224);

static void BM_IouAndF(benchmark::State& state) {
    const auto a = blob(224, 100, 110, 60), b = blob(224, 120, 100, 55);
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::iou(a, b));
        benchmark::DoNotOptimize(metrics::f_measure(a, b));
    }
}
BENCHMARK(BM_IouAndF);

static void BM_DynamicConvolve(benchmark::State& state) {
    const int nq = static_cast<int>(state.range(0)), c = 16, side = 56, frames = 5;
    std::mt19937 gen(1);
    mask_head::MaskFeatures f;
    f.height = f.width = side;
    for (int t = 0; t < frames; ++t) f.maps.push_back(ag::Var::constant(side * side, c, randn(gen, side * side * c)));
    const mask_head::KernelBank bank{ag::Var::constant(nq, c, randn(gen, nq * c)), ag::Var::constant(1, nq, randn(gen, nq))};
    ag::NoGradGuard no_grad;
    for (auto _ : state) benchmark::DoNotOptimize(mask_head::dynamic_convolve(f, bank));
}
BENCHMARK(BM_DynamicConvolve)->Arg(8)->Arg(16);

static void BM_DiceFocalCostAndGrad(benchmark::State& state) {
    const std::size_t n = 56 * 56;
    std::mt19937 gen(2);
    const auto x = randn(gen, n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.3;
    std::vector<double> g(n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(objective::dice_cost(x, y, 1, 1.0));
        objective::dice_cost_grad(x, y, 1, 1.0, g);
        benchmark::DoNotOptimize(objective::focal_cost(x, y, 2.0, 0.25));
        objective::focal_cost_grad(x, y, 2.0, 0.25, g);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_DiceFocalCostAndGrad);

static void BM_Match(benchmark::State& state) {
    const int nq = static_cast<int>(state.range(0)), side = 56;
    std::mt19937 gen(3);
    mask_head::MaskLogits pred;
    pred.logits = ag::Var::constant(nq, side * side, randn(gen, static_cast<std::size_t>(nq) * side * side));
    pred.sounding_scores = ag::Var::constant(nq, 1, randn(gen, nq));
    pred.frames = 1;
    pred.height = pred.width = side;
    const auto target = blob(side, 20, 30, 12);
    const objective::CostConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(objective::match(pred, target.bits(), cfg));
}
BENCHMARK(BM_Match)->Arg(8)->Arg(16);

static void BM_LogMelSpectrogram(benchmark::State& state) {
    const int rate = 16000;
    std::vector<double> wave(static_cast<std::size_t>(rate) * state.range(0));
    for (std::size_t i = 0; i < wave.size(); ++i) wave[i] = 0.5 * std::sin(2 * M_PI * 440.0 * i / rate);
    for (auto _ : state) benchmark::DoNotOptimize(encoders::log_mel_spectrogram(wave, rate));
}
BENCHMARK(BM_LogMelSpectrogram)->Arg(1)->Arg(5);
