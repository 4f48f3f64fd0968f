#include "avs/encoders.hpp"

#include <string>

#include "avs/errors.hpp"

namespace avs::encoders {

namespace {

// Maps raw log-mel values (log of magnitudes near [1e-6, 1e2]) to O(1).
constexpr double kLogMelCenter = -7.0;
constexpr double kLogMelScale = 1.0 / 7.0;

}  // namespace

ag::Var frame_tokens(const Tensor& level, int t) {
    const int c = level.dim(1), h = level.dim(2), w = level.dim(3);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const double* base = level.data().data() + static_cast<std::size_t>(t) * c * plane;
    std::vector<double> out(plane * c);
    for (int ch = 0; ch < c; ++ch) {
        for (std::size_t p = 0; p < plane; ++p) out[p * c + ch] = base[ch * plane + p];
    }
    return ag::Var::constant(static_cast<int>(plane), c, std::move(out));
}

Tensor tokens_to_tchw(const std::vector<ag::Var>& frames, int height, int width) {
    if (frames.empty()) throw ShapeError("tokens_to_tchw: no frames");
    const int c = frames[0].cols();
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    Tensor out({static_cast<int>(frames.size()), c, height, width});
    for (std::size_t t = 0; t < frames.size(); ++t) {
        if (frames[t].rows() != static_cast<int>(plane) || frames[t].cols() != c) {
            throw ShapeError("tokens_to_tchw: inconsistent frame shape");
        }
        double* dst = out.data().data() + t * c * plane;
        const auto v = frames[t].value();
        for (std::size_t p = 0; p < plane; ++p) {
            for (int ch = 0; ch < c; ++ch) dst[ch * plane + p] = v[p * c + ch];
        }
    }
    return out;
}

ToyVisualBackbone::ToyVisualBackbone(std::uint64_t seed, std::array<int, 4> channels)
    : channels_(channels) {
    nn::Rng rng(seed);
    int in = 3;
    const std::array<int, 4> kernels{4, 2, 2, 2};
    for (std::size_t s = 0; s < 4; ++s) {
        convs_[s] = nn::Conv2d(in, channels_[s], kernels[s], kernels[s], 0, rng);
        in = channels_[s];
    }
    auto params = parameters();
    nn::set_frozen(params, true);
}

std::array<ag::Var, 4> ToyVisualBackbone::stages(const ag::Var& pixels, int height, int width) const {
    std::array<ag::Var, 4> out;
    ag::Var x = pixels;
    int h = height, w = width;
    for (std::size_t s = 0; s < 4; ++s) {
        x = ag::relu(convs_[s].forward(x, h, w));
        h = convs_[s].output_size(h);
        w = convs_[s].output_size(w);
        out[s] = x;
    }
    return out;
}

nn::ParamList ToyVisualBackbone::parameters() const {
    nn::ParamList out;
    for (std::size_t s = 0; s < 4; ++s) convs_[s].collect("visual_backbone.stage" + std::to_string(s + 1), out);
    for (auto& p : out) p.frozen = true;
    return out;
}

ToyAudioBackbone::ToyAudioBackbone(std::uint64_t seed, int embedding_width) : width_(embedding_width) {
    nn::Rng rng(seed);
    convs_[0] = nn::Conv2d(1, 16, 3, 2, 1, rng);
    convs_[1] = nn::Conv2d(16, 32, 3, 2, 1, rng);
    convs_[2] = nn::Conv2d(32, width_, 3, 2, 1, rng);
    auto params = parameters();
    nn::set_frozen(params, true);
}

ag::Var ToyAudioBackbone::feature_map(const ag::Var& spectrogram, int time_bins, int mel_bands) const {
    std::vector<double> norm(spectrogram.value().begin(), spectrogram.value().end());
    for (double& v : norm) v = (v - kLogMelCenter) * kLogMelScale;
    ag::Var x = ag::Var::constant(spectrogram.rows(), spectrogram.cols(), std::move(norm));
    int h = time_bins, w = mel_bands;
    for (const auto& conv : convs_) {
        x = ag::relu(conv.forward(x, h, w));
        h = conv.output_size(h);
        w = conv.output_size(w);
    }
    return x;
}

nn::ParamList ToyAudioBackbone::parameters() const {
    nn::ParamList out;
    for (std::size_t s = 0; s < convs_.size(); ++s) convs_[s].collect("audio_backbone.block" + std::to_string(s + 1), out);
    for (auto& p : out) p.frozen = true;
    return out;
}

FeaturePyramid encode_visual(const FrameClip& clip, const VisualBackbone& backbone) {
    const int h0 = clip.height(), w0 = clip.width();
    if (h0 % 32 != 0 || w0 % 32 != 0) {
        throw ShapeError("frame size " + std::to_string(h0) + "x" + std::to_string(w0) +
                         " is not divisible by 32");
    }
    ag::NoGradGuard no_grad;
    std::array<std::vector<ag::Var>, 4> per_stage;
    for (int t = 0; t < clip.frames(); ++t) {
        const ag::Var pixels = ag::Var::constant(h0 * w0, 3, clip.frame_hwc(t));
        auto stages = backbone.stages(pixels, h0, w0);
        for (std::size_t s = 0; s < 4; ++s) per_stage[s].push_back(std::move(stages[s]));
    }
    FeaturePyramid pyr;
    const std::array<int, 4> strides{4, 8, 16, 32};
    pyr.fine = tokens_to_tchw(per_stage[0], h0 / strides[0], w0 / strides[0]);
    for (std::size_t l = 0; l < 3; ++l) {
        pyr.levels[l] = tokens_to_tchw(per_stage[l + 1], h0 / strides[l + 1], w0 / strides[l + 1]);
    }
    return pyr;
}

AudioEmbedding encode_audio(const AudioClip& spec, const AudioBackbone& backbone) {
    ag::NoGradGuard no_grad;
    const int t_count = spec.frames();
    const int c = backbone.embedding_width();
    Tensor vectors({t_count, c});
    for (int t = 0; t < t_count; ++t) {
        const Tensor frame = spec.spectrograms().slice_leading(t);
        const ag::Var input = ag::Var::constant(spec.time_bins() * spec.mel_bands(), 1, frame.storage());
        const ag::Var pooled = ag::mean_rows(backbone.feature_map(input, spec.time_bins(), spec.mel_bands()));
        std::copy(pooled.value().begin(), pooled.value().end(),
                  vectors.data().begin() + static_cast<std::ptrdiff_t>(t) * c);
    }
    return AudioEmbedding{std::move(vectors)};
}

}  // namespace avs::encoders
