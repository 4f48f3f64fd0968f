#include "avs/model.hpp"

#include <cstring>

#include "avs/errors.hpp"

namespace avs {

void ModelConfig::validate() const {
    auto positive = [](int v, const char* name) {
        if (v < 1) throw ConfigError(std::string("model.") + name + " must be positive");
    };
    positive(fused_width, "fused_width");
    positive(model_width, "model_width");
    positive(queries, "queries");
    positive(heads, "heads");
    positive(ffn_width, "ffn_width");
    positive(mask_channels, "mask_channels");
    positive(audio_width, "audio_width");
    if (encoder_layers < 0 || decoder_layers < 0) throw ConfigError("layer counts must be >= 0");
    if (fused_width % heads != 0 || model_width % heads != 0) {
        throw ConfigError("model.heads must divide fused_width and model_width");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("model.threshold must lie in (0, 1)");
}

Backbones make_toy_backbones(const ModelConfig& cfg) {
    return {std::make_shared<encoders::ToyVisualBackbone>(cfg.backbone_seed, cfg.visual_channels),
            std::make_shared<encoders::ToyAudioBackbone>(cfg.backbone_seed + 1, cfg.audio_width)};
}

AutrModel::AutrModel(const ModelConfig& cfg, std::uint64_t seed)
    : AutrModel(cfg, seed, make_toy_backbones(cfg)) {}

AutrModel::AutrModel(const ModelConfig& cfg, std::uint64_t seed, Backbones backbones)
    : cfg_(cfg), backbones_(std::move(backbones)) {
    cfg_.validate();
    const auto vc = backbones_.visual->channels();
    const int ca = backbones_.audio->embedding_width();
    nn::Rng rng(seed);
    avff_ = fusion::Avff({vc[1], vc[2], vc[3]}, ca, cfg_.fused_width, cfg_.heads, rng);
    encoder_ = fusion::MultimodalEncoder(cfg_.fused_width, cfg_.heads, cfg_.ffn_width,
                                         cfg_.encoder_layers, cfg_.temporal_encoding, rng);
    queries_ = fusion::QueryBank(cfg_.queries, ca, cfg_.model_width, cfg_.query_init, rng);
    decoder_ = fusion::QueryDecoder(cfg_.model_width, cfg_.fused_width, cfg_.heads, cfg_.ffn_width,
                                    cfg_.decoder_layers, rng);
    pixel_decoder_ = mask_head::PixelDecoder(vc, cfg_.fused_width, ca, cfg_.mask_channels, cfg_.heads, rng);
    pixel_decoder_.set_audio_injection(cfg_.audio_injection);
    kernels_ = mask_head::KernelGenerator(cfg_.model_width, cfg_.mask_channels, rng);
    sounding_ = mask_head::SoundingHead(cfg_.model_width, rng);
    for (auto& p : trainable_parameters()) round_to_float32(p.var.mutable_value());
}

EncodedInputs AutrModel::encode(const FrameClip& frames, const AudioClip& audio) const {
    return {encoders::encode_visual(frames, *backbones_.visual),
            encoders::encode_audio(audio, *backbones_.audio)};
}

mask_head::MaskLogits AutrModel::forward(const EncodedInputs& in) const {
    const fusion::FusedPyramid fused = avff_.forward(in.pyramid, in.audio);
    const fusion::FusedPyramid encoded = encoder_.forward(fused);
    const ag::Var q = decoder_.forward(encoded, queries_.initial_queries(in.audio));
    const mask_head::MaskFeatures features = pixel_decoder_.forward(in.pyramid, in.audio, encoded);
    mask_head::MaskLogits out = mask_head::dynamic_convolve(features, kernels_.forward(q));
    out.sounding_scores = sounding_.forward(q);
    return out;
}

mask_head::MaskLogits AutrModel::forward(const FrameClip& frames, const AudioClip& audio) const {
    return forward(encode(frames, audio));
}

mask_head::Selection AutrModel::predict(const EncodedInputs& inputs, int h0, int w0) const {
    ag::NoGradGuard no_grad;
    return mask_head::select_and_upsample(forward(inputs), h0, w0, cfg_.threshold);
}

nn::ParamList AutrModel::parameters() const {
    nn::ParamList out = frozen_parameters();
    auto trainable = trainable_parameters();
    out.insert(out.end(), trainable.begin(), trainable.end());
    return out;
}

nn::ParamList AutrModel::trainable_parameters() const {
    nn::ParamList out;
    avff_.collect("avff", out);
    encoder_.collect("encoder", out);
    queries_.collect("queries", out);
    decoder_.collect("decoder", out);
    pixel_decoder_.collect("pixel_decoder", out);
    kernels_.collect("kernel_generator", out);
    sounding_.collect("sounding_head", out);
    return out;
}

nn::ParamList AutrModel::frozen_parameters() const {
    nn::ParamList out = backbones_.visual->parameters();
    auto audio = backbones_.audio->parameters();
    out.insert(out.end(), audio.begin(), audio.end());
    for (auto& p : out) p.frozen = true;
    return out;
}

std::size_t AutrModel::trainable_count() const {
    std::size_t n = 0;
    for (const auto& p : trainable_parameters()) n += p.var.size();
    return n;
}

void round_to_float32(std::span<double> values) {
    for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

std::uint64_t parameter_checksum(const nn::ParamList& params) {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& p : params) {
        feed(p.name.data(), p.name.size());
        const auto v = p.var.value();
        feed(v.data(), v.size() * sizeof(double));
    }
    return h;
}

}  // namespace avs
