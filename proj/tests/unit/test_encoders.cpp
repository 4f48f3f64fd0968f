#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "avs/encoders.hpp"
#include "avs/errors.hpp"
#include "avs/spectrogram.hpp"

using namespace avs;
using namespace avs::encoders;

namespace {

std::vector<double> tone(double hz, double seconds, int rate = 16000) {
    std::vector<double> w(static_cast<std::size_t>(seconds * rate));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * std::sin(2.0 * std::numbers::pi * hz * i / rate);
    return w;
}

}  // namespace

TEST(Spectrogram, SilenceIsLogEps) {
    const SpectrogramConfig cfg;
    const auto spec = log_mel_spectrogram(std::vector<double>(16000, 0.0), 16000, cfg);
    EXPECT_EQ(spec.frames(), 1);
    EXPECT_EQ(spec.time_bins(), 96);
    EXPECT_EQ(spec.mel_bands(), 64);
    for (double v : spec.spectrograms().data()) EXPECT_DOUBLE_EQ(v, std::log(cfg.eps));
}

TEST(Spectrogram, ToneLandsInItsMelBand) {
    const SpectrogramConfig cfg;
    const auto spec = log_mel_spectrogram(tone(440.0, 1.0), 16000, cfg);
    std::vector<double> mean(64, 0.0);
    for (int f = 0; f < 96; ++f)
        for (int m = 0; m < 64; ++m) mean[m] += spec.spectrograms().at({0, f, m});
    const int peak = static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());

    const auto filters = mel_filterbank(cfg);
    const int bin = static_cast<int>(std::lround(440.0 * cfg.fft_size / cfg.sample_rate_hz));
    int expected = 0;
    for (int m = 1; m < 64; ++m)
        if (filters[bin * 64 + m] > filters[bin * 64 + expected]) expected = m;
    EXPECT_LE(std::abs(peak - expected), 1);
}

TEST(Spectrogram, SegmentCounting) {
    const SpectrogramConfig cfg;
    EXPECT_EQ(log_mel_spectrogram(tone(300, 2.0), 16000, cfg).frames(), 2);
    EXPECT_EQ(log_mel_spectrogram(tone(300, 5.0), 16000, cfg).frames(), 5);
    EXPECT_EQ(segment_count(16000 * 5, cfg), 5);
    // Short input is zero-padded to one segment.
    EXPECT_EQ(log_mel_spectrogram(tone(300, 0.5), 16000, cfg).frames(), 1);
}

TEST(Spectrogram, RejectsShortOrMismatchedInput) {
    EXPECT_THROW(log_mel_spectrogram(tone(300, 0.05), 16000), TooShort);
    EXPECT_THROW(log_mel_spectrogram({}, 16000), TooShort);
    EXPECT_THROW(log_mel_spectrogram(tone(300, 1.0, 8000), 8000), Error);
}

TEST(Spectrogram, MelScaleRoundTripAndFilterbank) {
    for (double hz : {0.0, 125.0, 1000.0, 7500.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-9);
    const SpectrogramConfig cfg;
    const auto w = mel_filterbank(cfg);
    ASSERT_EQ(w.size(), static_cast<std::size_t>(257 * 64));
    for (int m = 0; m < 64; ++m) {
        double peak = 0.0;
        for (int k = 0; k < 257; ++k) {
            EXPECT_GE(w[k * 64 + m], 0.0);
            peak = std::max(peak, w[k * 64 + m]);
        }
        EXPECT_GT(peak, 0.0) << "band " << m;
        EXPECT_LE(peak, 1.0);
    }
}

TEST(VisualEncoder, PyramidShapes) {
    const ToyVisualBackbone backbone(3, {4, 6, 8, 10});
    for (int t : {1, 5}) {
        const FrameClip clip(t, 224, 224, std::vector<double>(static_cast<std::size_t>(t) * 3 * 224 * 224, 0.2));
        const auto p = encode_visual(clip, backbone);
        EXPECT_EQ(p.frames(), t);
        EXPECT_EQ(p.fine.shape(), (std::vector<int>{t, 4, 56, 56}));
        EXPECT_EQ(p.levels[0].shape(), (std::vector<int>{t, 6, 28, 28}));
        EXPECT_EQ(p.levels[1].shape(), (std::vector<int>{t, 8, 14, 14}));
        EXPECT_EQ(p.levels[2].shape(), (std::vector<int>{t, 10, 7, 7}));
    }
}

TEST(VisualEncoder, RejectsSizesNotDivisibleBy32) {
    const ToyVisualBackbone backbone(3, {4, 4, 4, 4});
    EXPECT_THROW(encode_visual(FrameClip(1, 224, 200, std::vector<double>(3 * 224 * 200)), backbone), ShapeError);
    EXPECT_THROW(encode_visual(FrameClip(1, 100, 224, std::vector<double>(3 * 100 * 224)), backbone), ShapeError);
}

TEST(VisualEncoder, BackboneIsFrozenAndSeeded) {
    const ToyVisualBackbone a(3), b(3), c(4);
    for (const auto& p : a.parameters()) EXPECT_TRUE(p.frozen) << p.name;
    const FrameClip clip(1, 32, 32, std::vector<double>(3 * 32 * 32, 0.5));
    EXPECT_EQ(encode_visual(clip, a).levels[2], encode_visual(clip, b).levels[2]);
    EXPECT_NE(encode_visual(clip, a).levels[0], encode_visual(clip, c).levels[0]);
}

TEST(VisualEncoder, TokenLayoutRoundTrip) {
    Tensor level({2, 3, 2, 2});
    for (std::size_t i = 0; i < level.size(); ++i) level[i] = static_cast<double>(i);
    std::vector<ag::Var> frames{frame_tokens(level, 0), frame_tokens(level, 1)};
    EXPECT_EQ(frames[1].at(3, 2), level.at({1, 2, 1, 1}));
    EXPECT_EQ(tokens_to_tchw(frames, 2, 2), level);
}

TEST(AudioEncoder, ShapesAndDistinctness) {
    const ToyAudioBackbone backbone(5, 16);
    const auto low = encode_audio(log_mel_spectrogram(tone(200, 3.0), 16000), backbone);
    const auto high = encode_audio(log_mel_spectrogram(tone(3000, 3.0), 16000), backbone);
    EXPECT_EQ(low.frames(), 3);
    EXPECT_EQ(low.width(), 16);
    double diff = 0.0;
    for (std::size_t i = 0; i < low.vectors.size(); ++i) diff += std::abs(low.vectors[i] - high.vectors[i]);
    EXPECT_GT(diff, 1e-3);
    for (const auto& p : backbone.parameters()) EXPECT_TRUE(p.frozen);
}
