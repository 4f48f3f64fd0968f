#include "avs/mask_head.hpp"

#include <cmath>

#include "avs/errors.hpp"
#include "avs/resample.hpp"

namespace avs::mask_head {

std::vector<double> MaskLogits::query_logits(int i) const {
    const std::size_t n = static_cast<std::size_t>(logits.cols());
    const auto v = logits.value();
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(i * n),
                               v.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
}

Tensor MaskLogits::as_tensor() const {
    return Tensor({queries(), frames, height, width},
                  std::vector<double>(logits.value().begin(), logits.value().end()));
}

PixelDecoder::PixelDecoder(std::array<int, 4> visual_channels, int fused_width, int audio_width,
                           int mask_channels, int heads, nn::Rng& rng)
    : audio_attn_(fused_width, audio_width, fused_width, heads, rng),
      output_(fused_width, mask_channels, 3, 1, 1, rng) {
    for (std::size_t i = 0; i < 4; ++i) lateral_[i] = nn::Linear(visual_channels[i], fused_width, rng);
}

MaskFeatures PixelDecoder::forward(const encoders::FeaturePyramid& pyramid,
                                   const encoders::AudioEmbedding& audio,
                                   const fusion::FusedPyramid& fused) const {
    MaskFeatures out;
    out.height = pyramid.fine.dim(2);
    out.width = pyramid.fine.dim(3);
    for (int t = 0; t < pyramid.frames(); ++t) {
        ag::Var top;
        int th = 0, tw = 0;
        for (int l = 2; l >= 0; --l) {
            const auto [h, w] = fused.sizes[l];
            ag::Var p = ag::add(lateral_[l + 1].forward(encoders::frame_tokens(pyramid.levels[l], t)),
                                fused.levels[l][t]);
            if (top.defined()) p = ag::add(p, ag::resize_bilinear(top, th, tw, h, w));
            top = p;
            th = h;
            tw = w;
        }
        ag::Var fine = ag::add(lateral_[0].forward(encoders::frame_tokens(pyramid.fine, t)),
                               ag::resize_bilinear(top, th, tw, out.height, out.width));
        if (audio_injection_) {
            const ag::Var a = ag::Var::constant(
                1, audio.width(),
                std::vector<double>(audio.vectors.data().begin() + static_cast<std::ptrdiff_t>(t) * audio.width(),
                                    audio.vectors.data().begin() + static_cast<std::ptrdiff_t>(t + 1) * audio.width()));
            fine = ag::add(fine, audio_attn_.forward(fine, a));
        }
        out.maps.push_back(output_.forward(ag::relu(fine), out.height, out.width));
    }
    return out;
}

void PixelDecoder::collect(const std::string& prefix, nn::ParamList& out) const {
    const char* names[4] = {"lateral_fine", "lateral1", "lateral2", "lateral3"};
    for (std::size_t i = 0; i < 4; ++i) lateral_[i].collect(prefix + "." + names[i], out);
    audio_attn_.collect(prefix + ".audio_attn", out);
    output_.collect(prefix + ".output", out);
}

KernelGenerator::KernelGenerator(int query_width, int mask_channels, nn::Rng& rng)
    : mask_channels_(mask_channels), mlp_(query_width, query_width, mask_channels + 1, rng) {}

KernelBank KernelGenerator::forward(const ag::Var& queries) const {
    const ag::Var g = mlp_.forward(queries);
    return {ag::slice_cols(g, 0, mask_channels_), ag::transpose(ag::slice_cols(g, mask_channels_, 1))};
}

void KernelGenerator::collect(const std::string& prefix, nn::ParamList& out) const {
    mlp_.collect(prefix + ".mlp", out);
}

MaskLogits dynamic_convolve(const MaskFeatures& features, const KernelBank& bank) {
    if (features.maps.empty()) throw ShapeError("dynamic_convolve: no frames");
    if (bank.kernels.cols() != features.channels()) {
        throw ShapeError("dynamic_convolve: kernel width " + std::to_string(bank.kernels.cols()) +
                         " != feature channels " + std::to_string(features.channels()));
    }
    if (bank.biases.rows() != 1 || bank.biases.cols() != bank.kernels.rows()) {
        throw ShapeError("dynamic_convolve: one bias per kernel required");
    }
    std::vector<ag::Var> per_frame;
    for (const auto& map : features.maps) {
        // [HW, N_q] then transposed so each row is one query's map.
        per_frame.push_back(ag::transpose(ag::add_row(ag::matmul_nt(map, bank.kernels), bank.biases)));
    }
    MaskLogits out;
    out.logits = per_frame.size() == 1 ? per_frame[0] : ag::concat_cols(per_frame);
    out.frames = features.frames();
    out.height = features.height;
    out.width = features.width;
    return out;
}

SoundingHead::SoundingHead(int query_width, nn::Rng& rng) : linear_(query_width, 1, rng) {}

ag::Var SoundingHead::forward(const ag::Var& queries) const { return linear_.forward(queries); }

void SoundingHead::collect(const std::string& prefix, nn::ParamList& out) const {
    linear_.collect(prefix + ".linear", out);
}

int argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw ShapeError("argmax over empty range");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

Selection select_and_upsample(const MaskLogits& pred, int h0, int w0, double threshold) {
    Selection sel;
    sel.winner = argmax_lowest(pred.sounding_scores.value());
    const auto logits = pred.query_logits(sel.winner);
    const std::size_t plane = pred.pixels_per_frame();
    for (int t = 0; t < pred.frames; ++t) {
        const std::span<const double> frame(logits.data() + t * plane, plane);
        const auto up = resize_bilinear(frame, pred.height, pred.width, 1, h0, w0);
        std::vector<std::uint8_t> bits(up.size());
        for (std::size_t i = 0; i < up.size(); ++i) {
            bits[i] = 1.0 / (1.0 + std::exp(-up[i])) > threshold ? 1 : 0;
        }
        sel.masks.emplace_back(h0, w0, std::move(bits));
    }
    return sel;
}

}  // namespace avs::mask_head
