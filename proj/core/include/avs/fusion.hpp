#pragma once

#include <array>
#include <utility>
#include <vector>

#include "avs/autograd.hpp"
#include "avs/encoders.hpp"
#include "avs/nn.hpp"

namespace avs::fusion {

// Three fused levels; each holds one [H_l*W_l, C_av] token map per frame.
struct FusedPyramid {
    std::array<std::vector<ag::Var>, 3> levels;
    std::array<std::pair<int, int>, 3> sizes;  // (H_l, W_l)

    int frames() const { return static_cast<int>(levels[0].size()); }
    int width() const { return levels[0].front().cols(); }
    std::size_t token_count() const;
    // All tokens, level-major then frame-major: [N_tokens, C_av].
    ag::Var flatten() const;
};

// Audio-visual feature fusion: per scale, 1x1-projected visual tokens attend
// to the MLP-projected audio vector of the same frame, with a residual.
class Avff {
public:
    Avff() = default;
    Avff(std::array<int, 3> visual_channels, int audio_width, int fused_width, int heads, nn::Rng& rng);

    FusedPyramid forward(const encoders::FeaturePyramid& pyramid,
                         const encoders::AudioEmbedding& audio) const;
    // Visual tokens after the 1x1 projection only (no audio contribution).
    ag::Var project_visual(const encoders::FeaturePyramid& pyramid, int level, int frame) const;
    void collect(const std::string& prefix, nn::ParamList& out) const;

    nn::MultiHeadAttention& attention(int level) { return attention_[level]; }

private:
    nn::Mlp audio_mlp_;
    std::array<nn::Linear, 3> visual_proj_;
    std::array<nn::MultiHeadAttention, 3> attention_;
};

// Fixed sinusoidal features for (t, y, x); y and x are normalized to the
// level's grid so all scales share one coordinate frame.
std::vector<double> sinusoid_features(int t, double y, double x, int per_axis, bool temporal);

class EncoderLayer {
public:
    EncoderLayer() = default;
    EncoderLayer(int width, int heads, int ffn_width, nn::Rng& rng);
    ag::Var forward(const ag::Var& tokens) const;
    void collect(const std::string& prefix, nn::ParamList& out) const;

private:
    nn::MultiHeadAttention self_attn_;
    nn::LayerNorm norm1_;
    nn::Mlp ffn_;
    nn::LayerNorm norm2_;
};

// Flattens all levels and frames into one sequence, adds projected
// spatial-temporal encodings, runs the self-attention stack, and reshapes back.
class MultimodalEncoder {
public:
    MultimodalEncoder() = default;
    MultimodalEncoder(int width, int heads, int ffn_width, int layers, bool temporal_encoding,
                      nn::Rng& rng);

    FusedPyramid forward(const FusedPyramid& fused) const;
    ag::Var positional_encoding(const FusedPyramid& fused) const;  // [N_tokens, width]
    void collect(const std::string& prefix, nn::ParamList& out) const;

private:
    int per_axis_ = 0;
    bool temporal_ = true;
    nn::Linear pos_proj_;
    std::vector<EncoderLayer> layers_;
};

enum class QueryInit { kAudio, kConstant };

// N_q decoder queries: shared content (a linear map of the clip-mean audio
// embedding, or a learned constant for the ablation) plus learned per-query
// position embeddings.
class QueryBank {
public:
    QueryBank() = default;
    QueryBank(int count, int audio_width, int model_width, QueryInit init, nn::Rng& rng);

    ag::Var initial_queries(const encoders::AudioEmbedding& audio) const;  // [N_q, D]
    int count() const { return position_.rows(); }
    QueryInit init_mode() const { return init_; }
    void collect(const std::string& prefix, nn::ParamList& out) const;

    ag::Var& position_embeddings() { return position_; }

private:
    QueryInit init_ = QueryInit::kAudio;
    nn::Linear content_;
    ag::Var constant_;  // [1, D], only for QueryInit::kConstant
    ag::Var position_;  // [N_q, D]
};

class DecoderLayer {
public:
    DecoderLayer() = default;
    DecoderLayer(int width, int memory_width, int heads, int ffn_width, nn::Rng& rng);
    ag::Var forward(const ag::Var& queries, const ag::Var& memory) const;
    void collect(const std::string& prefix, nn::ParamList& out) const;

private:
    nn::MultiHeadAttention self_attn_;
    nn::LayerNorm norm1_;
    nn::MultiHeadAttention cross_attn_;
    nn::LayerNorm norm2_;
    nn::Mlp ffn_;
    nn::LayerNorm norm3_;
};

class QueryDecoder {
public:
    QueryDecoder() = default;
    QueryDecoder(int width, int memory_width, int heads, int ffn_width, int layers, nn::Rng& rng);

    // Returns the query embeddings [N_q, D].
    ag::Var forward(const FusedPyramid& fused, const ag::Var& queries) const;
    void collect(const std::string& prefix, nn::ParamList& out) const;

private:
    std::vector<DecoderLayer> layers_;
};

}  // namespace avs::fusion
