#include "avs/fusion.hpp"

#include <cmath>
#include <numbers>

#include "avs/errors.hpp"

namespace avs::fusion {

std::size_t FusedPyramid::token_count() const {
    std::size_t n = 0;
    for (const auto& level : levels) {
        for (const auto& f : level) n += static_cast<std::size_t>(f.rows());
    }
    return n;
}

ag::Var FusedPyramid::flatten() const {
    std::vector<ag::Var> parts;
    for (const auto& level : levels) parts.insert(parts.end(), level.begin(), level.end());
    return ag::concat_rows(parts);
}

Avff::Avff(std::array<int, 3> visual_channels, int audio_width, int fused_width, int heads,
           nn::Rng& rng)
    : audio_mlp_(audio_width, fused_width, fused_width, rng) {
    for (std::size_t l = 0; l < 3; ++l) {
        visual_proj_[l] = nn::Linear(visual_channels[l], fused_width, rng);
        attention_[l] = nn::MultiHeadAttention(fused_width, fused_width, fused_width, heads, rng);
    }
}

ag::Var Avff::project_visual(const encoders::FeaturePyramid& pyramid, int level, int frame) const {
    return visual_proj_[level].forward(encoders::frame_tokens(pyramid.levels[level], frame));
}

FusedPyramid Avff::forward(const encoders::FeaturePyramid& pyramid,
                           const encoders::AudioEmbedding& audio) const {
    const int frames = pyramid.frames();
    if (audio.frames() != frames) {
        throw ShapeError("avff: audio has " + std::to_string(audio.frames()) + " frames, video " +
                         std::to_string(frames));
    }
    FusedPyramid out;
    for (int t = 0; t < frames; ++t) {
        const ag::Var a_raw = ag::Var::constant(
            1, audio.width(),
            std::vector<double>(audio.vectors.data().begin() + static_cast<std::ptrdiff_t>(t) * audio.width(),
                                audio.vectors.data().begin() + static_cast<std::ptrdiff_t>(t + 1) * audio.width()));
        const ag::Var a = audio_mlp_.forward(a_raw);
        for (int l = 0; l < 3; ++l) {
            const ag::Var v = project_visual(pyramid, l, t);
            out.levels[l].push_back(ag::add(v, attention_[l].forward(v, a)));
        }
    }
    for (int l = 0; l < 3; ++l) out.sizes[l] = {pyramid.levels[l].dim(2), pyramid.levels[l].dim(3)};
    return out;
}

void Avff::collect(const std::string& prefix, nn::ParamList& out) const {
    audio_mlp_.collect(prefix + ".audio_mlp", out);
    for (std::size_t l = 0; l < 3; ++l) {
        visual_proj_[l].collect(prefix + ".visual_proj" + std::to_string(l + 1), out);
        attention_[l].collect(prefix + ".attn" + std::to_string(l + 1), out);
    }
}

std::vector<double> sinusoid_features(int t, double y, double x, int per_axis, bool temporal) {
    std::vector<double> out(static_cast<std::size_t>(3 * per_axis), 0.0);
    const int half = per_axis / 2;
    auto encode = [&](double pos, std::size_t offset) {
        for (int i = 0; i < half; ++i) {
            const double freq = std::pow(10000.0, -2.0 * i / per_axis);
            out[offset + 2 * i] = std::sin(pos * freq);
            out[offset + 2 * i + 1] = std::cos(pos * freq);
        }
    };
    if (temporal) encode(static_cast<double>(t), 0);
    encode(2.0 * std::numbers::pi * y, static_cast<std::size_t>(per_axis));
    encode(2.0 * std::numbers::pi * x, static_cast<std::size_t>(2 * per_axis));
    return out;
}

EncoderLayer::EncoderLayer(int width, int heads, int ffn_width, nn::Rng& rng)
    : self_attn_(width, width, width, heads, rng),
      norm1_(width),
      ffn_(width, ffn_width, width, rng),
      norm2_(width) {}

ag::Var EncoderLayer::forward(const ag::Var& tokens) const {
    const ag::Var x = norm1_.forward(ag::add(tokens, self_attn_.forward(tokens, tokens)));
    return norm2_.forward(ag::add(x, ffn_.forward(x)));
}

void EncoderLayer::collect(const std::string& prefix, nn::ParamList& out) const {
    self_attn_.collect(prefix + ".self_attn", out);
    norm1_.collect(prefix + ".norm1", out);
    ffn_.collect(prefix + ".ffn", out);
    norm2_.collect(prefix + ".norm2", out);
}

MultimodalEncoder::MultimodalEncoder(int width, int heads, int ffn_width, int layers,
                                     bool temporal_encoding, nn::Rng& rng)
    : per_axis_(2 * ((width + 3) / 4)), temporal_(temporal_encoding) {
    pos_proj_ = nn::Linear(3 * per_axis_, width, rng, false);
    for (int i = 0; i < layers; ++i) layers_.emplace_back(width, heads, ffn_width, rng);
}

ag::Var MultimodalEncoder::positional_encoding(const FusedPyramid& fused) const {
    const int frames = fused.frames();
    std::vector<double> raw;
    raw.reserve(fused.token_count() * static_cast<std::size_t>(3 * per_axis_));
    for (int l = 0; l < 3; ++l) {
        const auto [h, w] = fused.sizes[l];
        for (int t = 0; t < frames; ++t) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const auto f = sinusoid_features(t, (y + 0.5) / h, (x + 0.5) / w, per_axis_, temporal_);
                    raw.insert(raw.end(), f.begin(), f.end());
                }
            }
        }
    }
    const int n = static_cast<int>(fused.token_count());
    return pos_proj_.forward(ag::Var::constant(n, 3 * per_axis_, std::move(raw)));
}

FusedPyramid MultimodalEncoder::forward(const FusedPyramid& fused) const {
    ag::Var tokens = ag::add(fused.flatten(), positional_encoding(fused));
    for (const auto& layer : layers_) tokens = layer.forward(tokens);

    FusedPyramid out;
    out.sizes = fused.sizes;
    int row = 0;
    for (int l = 0; l < 3; ++l) {
        for (const auto& f : fused.levels[l]) {
            out.levels[l].push_back(ag::slice_rows(tokens, row, f.rows()));
            row += f.rows();
        }
    }
    return out;
}

void MultimodalEncoder::collect(const std::string& prefix, nn::ParamList& out) const {
    pos_proj_.collect(prefix + ".pos_proj", out);
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(prefix + ".layer" + std::to_string(i), out);
}

QueryBank::QueryBank(int count, int audio_width, int model_width, QueryInit init, nn::Rng& rng)
    : init_(init) {
    if (count < 1) throw ConfigError("query count must be at least 1");
    if (init_ == QueryInit::kAudio) {
        content_ = nn::Linear(audio_width, model_width, rng);
    } else {
        std::vector<double> c(static_cast<std::size_t>(model_width));
        for (double& v : c) v = rng.normal();
        constant_ = ag::Var::parameter(1, model_width, std::move(c));
    }
    std::vector<double> pos(static_cast<std::size_t>(count) * model_width);
    for (double& v : pos) v = rng.normal();
    position_ = ag::Var::parameter(count, model_width, std::move(pos));
}

ag::Var QueryBank::initial_queries(const encoders::AudioEmbedding& audio) const {
    ag::Var content;
    if (init_ == QueryInit::kAudio) {
        const ag::Var clip = ag::mean_rows(
            ag::Var::constant(audio.frames(), audio.width(), audio.vectors.storage()));
        content = content_.forward(clip);
    } else {
        content = constant_;
    }
    return ag::add(ag::broadcast_rows(content, position_.rows()), position_);
}

void QueryBank::collect(const std::string& prefix, nn::ParamList& out) const {
    if (init_ == QueryInit::kAudio) content_.collect(prefix + ".content", out);
    else out.push_back({prefix + ".constant", constant_, false});
    out.push_back({prefix + ".position", position_, false});
}

DecoderLayer::DecoderLayer(int width, int memory_width, int heads, int ffn_width, nn::Rng& rng)
    : self_attn_(width, width, width, heads, rng),
      norm1_(width),
      cross_attn_(width, memory_width, width, heads, rng),
      norm2_(width),
      ffn_(width, ffn_width, width, rng),
      norm3_(width) {}

ag::Var DecoderLayer::forward(const ag::Var& queries, const ag::Var& memory) const {
    ag::Var q = norm1_.forward(ag::add(queries, self_attn_.forward(queries, queries)));
    q = norm2_.forward(ag::add(q, cross_attn_.forward(q, memory)));
    return norm3_.forward(ag::add(q, ffn_.forward(q)));
}

void DecoderLayer::collect(const std::string& prefix, nn::ParamList& out) const {
    self_attn_.collect(prefix + ".self_attn", out);
    norm1_.collect(prefix + ".norm1", out);
    cross_attn_.collect(prefix + ".cross_attn", out);
    norm2_.collect(prefix + ".norm2", out);
    ffn_.collect(prefix + ".ffn", out);
    norm3_.collect(prefix + ".norm3", out);
}

QueryDecoder::QueryDecoder(int width, int memory_width, int heads, int ffn_width, int layers,
                           nn::Rng& rng) {
    for (int i = 0; i < layers; ++i) layers_.emplace_back(width, memory_width, heads, ffn_width, rng);
}

ag::Var QueryDecoder::forward(const FusedPyramid& fused, const ag::Var& queries) const {
    if (layers_.empty()) return queries;
    const ag::Var memory = fused.flatten();
    ag::Var q = queries;
    for (const auto& layer : layers_) q = layer.forward(q, memory);
    return q;
}

void QueryDecoder::collect(const std::string& prefix, nn::ParamList& out) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(prefix + ".layer" + std::to_string(i), out);
}

}  // namespace avs::fusion
