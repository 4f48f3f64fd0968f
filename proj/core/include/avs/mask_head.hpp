#pragma once

#include <utility>
#include <vector>

#include "avs/autograd.hpp"
#include "avs/core_types.hpp"
#include "avs/encoders.hpp"
#include "avs/fusion.hpp"
#include "avs/nn.hpp"

namespace avs::mask_head {

// Per-frame mask feature maps [H_m*W_m, C_m] at stride 4.
struct MaskFeatures {
    std::vector<ag::Var> maps;
    int height = 0;
    int width = 0;

    int frames() const { return static_cast<int>(maps.size()); }
    int channels() const { return maps.front().cols(); }
};

// One 1x1 dynamic kernel and bias per query.
struct KernelBank {
    ag::Var kernels;  // [N_q, C_m]
    ag::Var biases;   // [1, N_q]
};

struct MaskLogits {
    ag::Var logits;           // [N_q, T*H*W], frame-major then row-major pixels
    ag::Var sounding_scores;  // [N_q, 1], pre-sigmoid
    int frames = 0;
    int height = 0;
    int width = 0;

    int queries() const { return logits.rows(); }
    std::size_t pixels_per_frame() const { return static_cast<std::size_t>(height) * width; }
    // Logits of query i as [T, H, W] row-major.
    std::vector<double> query_logits(int i) const;
    Tensor as_tensor() const;  // [N_q, T, H, W]
};

// FPN-style top-down pathway over the encoder output with lateral 1x1
// projections of the backbone features, upsampled to stride 4, followed by
// one audio cross-attention on the finest map and a 3x3 output conv.
class PixelDecoder {
public:
    PixelDecoder() = default;
    PixelDecoder(std::array<int, 4> visual_channels, int fused_width, int audio_width,
                 int mask_channels, int heads, nn::Rng& rng);

    MaskFeatures forward(const encoders::FeaturePyramid& pyramid,
                         const encoders::AudioEmbedding& audio,
                         const fusion::FusedPyramid& fused) const;
    void collect(const std::string& prefix, nn::ParamList& out) const;

    nn::MultiHeadAttention& audio_attention() { return audio_attn_; }
    void set_audio_injection(bool on) { audio_injection_ = on; }

private:
    std::array<nn::Linear, 4> lateral_;  // fine, level1, level2, level3
    nn::MultiHeadAttention audio_attn_;
    nn::Conv2d output_;
    bool audio_injection_ = true;
};

// Two-layer MLP from query embeddings [N_q, D] to [N_q, C_m + 1].
class KernelGenerator {
public:
    KernelGenerator() = default;
    KernelGenerator(int query_width, int mask_channels, nn::Rng& rng);

    KernelBank forward(const ag::Var& queries) const;
    void collect(const std::string& prefix, nn::ParamList& out) const;
    nn::Mlp& mlp() { return mlp_; }

private:
    int mask_channels_ = 0;
    nn::Mlp mlp_;
};

// logits[i, t, y, x] = sum_c kernels[i, c] * features[t, y, x, c] + biases[i].
// Fills only `logits` and the geometry of the result.
MaskLogits dynamic_convolve(const MaskFeatures& features, const KernelBank& kernels);

class SoundingHead {
public:
    SoundingHead() = default;
    SoundingHead(int query_width, nn::Rng& rng);
    ag::Var forward(const ag::Var& queries) const;  // [N_q, 1]
    void collect(const std::string& prefix, nn::ParamList& out) const;
    nn::Linear& linear() { return linear_; }

private:
    nn::Linear linear_;
};

struct Selection {
    std::vector<BinaryMask> masks;  // one per frame, at (h0, w0)
    int winner = 0;
};

// Highest sounding score wins (ties -> lowest index); its logits are
// bilinearly upsampled, passed through a sigmoid and thresholded.
Selection select_and_upsample(const MaskLogits& pred, int h0, int w0, double threshold = 0.5);
int argmax_lowest(std::span<const double> values);

}  // namespace avs::mask_head
