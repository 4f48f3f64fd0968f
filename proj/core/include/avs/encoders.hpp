#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "avs/autograd.hpp"
#include "avs/core_types.hpp"
#include "avs/nn.hpp"
#include "avs/spectrogram.hpp"

namespace avs::encoders {

// Visual features at strides 8, 16 and 32, each [T, C, H, W]. `fine` carries
// the stride-4 stage the pixel decoder uses as its finest lateral input.
struct FeaturePyramid {
    std::array<Tensor, 3> levels;
    Tensor fine;

    int frames() const { return levels[0].dim(0); }
};

// One pooled audio vector per frame index: [T, C_a].
struct AudioEmbedding {
    Tensor vectors;

    int frames() const { return vectors.dim(0); }
    int width() const { return vectors.dim(1); }
};

// Channels-last view of frame t of a [T, C, H, W] tensor as a [H*W, C] constant.
ag::Var frame_tokens(const Tensor& level, int t);
// Inverse of frame_tokens for a whole clip.
Tensor tokens_to_tchw(const std::vector<ag::Var>& frames, int height, int width);

class VisualBackbone {
public:
    virtual ~VisualBackbone() = default;
    // Stage outputs for one frame given channels-last pixels [H*W, 3]:
    // four [h*w, c] maps at strides 4, 8, 16, 32.
    virtual std::array<ag::Var, 4> stages(const ag::Var& pixels, int height, int width) const = 0;
    virtual std::array<int, 4> channels() const = 0;
    virtual nn::ParamList parameters() const = 0;
};

class AudioBackbone {
public:
    virtual ~AudioBackbone() = default;
    // Final feature map [h*w, C_a] of one spectrogram given as [H_a*W_a, 1].
    virtual ag::Var feature_map(const ag::Var& spectrogram, int time_bins, int mel_bands) const = 0;
    virtual int embedding_width() const = 0;
    virtual nn::ParamList parameters() const = 0;
};

// Four strided patch-embedding stages (kernel = stride = 4, 2, 2, 2) with
// ReLU; stand-in for a pretrained hierarchical backbone.
class ToyVisualBackbone : public VisualBackbone {
public:
    explicit ToyVisualBackbone(std::uint64_t seed, std::array<int, 4> channels = {32, 64, 128, 256});
    std::array<ag::Var, 4> stages(const ag::Var& pixels, int height, int width) const override;
    std::array<int, 4> channels() const override { return channels_; }
    nn::ParamList parameters() const override;

private:
    std::array<int, 4> channels_;
    std::array<nn::Conv2d, 4> convs_;
};

// Three stride-2 3x3 conv blocks over a fixed-normalized log-mel input.
class ToyAudioBackbone : public AudioBackbone {
public:
    explicit ToyAudioBackbone(std::uint64_t seed, int embedding_width = 128);
    ag::Var feature_map(const ag::Var& spectrogram, int time_bins, int mel_bands) const override;
    int embedding_width() const override { return width_; }
    nn::ParamList parameters() const override;

private:
    int width_;
    std::array<nn::Conv2d, 3> convs_;
};

// Throws ShapeError unless H0 and W0 are divisible by 32.
FeaturePyramid encode_visual(const FrameClip& clip, const VisualBackbone& backbone);
AudioEmbedding encode_audio(const AudioClip& spec, const AudioBackbone& backbone);

}  // namespace avs::encoders
