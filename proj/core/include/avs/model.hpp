#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "avs/core_types.hpp"
#include "avs/encoders.hpp"
#include "avs/fusion.hpp"
#include "avs/mask_head.hpp"
#include "avs/nn.hpp"

namespace avs {

struct ModelConfig {
    int fused_width = 256;   // C_av
    int model_width = 256;   // D
    int queries = 16;        // N_q
    int heads = 8;
    int encoder_layers = 3;  // L_enc
    int decoder_layers = 3;  // L_dec
    int ffn_width = 512;
    int mask_channels = 64;  // C_m
    fusion::QueryInit query_init = fusion::QueryInit::kAudio;
    bool temporal_encoding = true;
    bool audio_injection = true;
    std::array<int, 4> visual_channels{32, 64, 128, 256};
    int audio_width = 128;  // C_a
    std::uint64_t backbone_seed = 7;
    double threshold = 0.5;

    void validate() const;
};

// Frozen backbone outputs for one clip; the trainable part of the model
// only ever sees these.
struct EncodedInputs {
    encoders::FeaturePyramid pyramid;
    encoders::AudioEmbedding audio;
};

// Frozen toy backbones, seeded independently of the trainable heads so that
// differently initialized models share identical encoder features.
struct Backbones {
    std::shared_ptr<const encoders::VisualBackbone> visual;
    std::shared_ptr<const encoders::AudioBackbone> audio;
};
Backbones make_toy_backbones(const ModelConfig& cfg);

class AutrModel {
public:
    AutrModel(const ModelConfig& cfg, std::uint64_t seed);
    AutrModel(const ModelConfig& cfg, std::uint64_t seed, Backbones backbones);

    EncodedInputs encode(const FrameClip& frames, const AudioClip& audio) const;
    mask_head::MaskLogits forward(const EncodedInputs& inputs) const;
    mask_head::MaskLogits forward(const FrameClip& frames, const AudioClip& audio) const;
    // Inference: the highest-scoring query's mask at the input resolution.
    mask_head::Selection predict(const EncodedInputs& inputs, int h0, int w0) const;

    // Every parameter, backbones included (flagged frozen).
    nn::ParamList parameters() const;
    nn::ParamList trainable_parameters() const;
    nn::ParamList frozen_parameters() const;
    std::size_t trainable_count() const;

    const ModelConfig& config() const { return cfg_; }
    const Backbones& backbones() const { return backbones_; }
    fusion::Avff& avff() { return avff_; }
    fusion::MultimodalEncoder& encoder() { return encoder_; }
    fusion::QueryBank& query_bank() { return queries_; }
    fusion::QueryDecoder& decoder() { return decoder_; }
    mask_head::PixelDecoder& pixel_decoder() { return pixel_decoder_; }
    mask_head::KernelGenerator& kernel_generator() { return kernels_; }
    mask_head::SoundingHead& sounding_head() { return sounding_; }

private:
    ModelConfig cfg_;
    Backbones backbones_;
    fusion::Avff avff_;
    fusion::MultimodalEncoder encoder_;
    fusion::QueryBank queries_;
    fusion::QueryDecoder decoder_;
    mask_head::PixelDecoder pixel_decoder_;
    mask_head::KernelGenerator kernels_;
    mask_head::SoundingHead sounding_;
};

// Rounds every value to the nearest binary32, the checkpoint precision.
void round_to_float32(std::span<double> values);
// FNV-1a over the raw bytes of the listed parameters.
std::uint64_t parameter_checksum(const nn::ParamList& params);

}  // namespace avs
