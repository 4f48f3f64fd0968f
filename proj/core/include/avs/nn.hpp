#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "avs/autograd.hpp"

namespace avs::nn {

// Portable deterministic generator; distributions are implemented here rather
// than through <random>'s implementation-defined adaptors.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();
    std::uint64_t next() { return engine_(); }
    // Uniform integer in [0, n).
    std::size_t index(std::size_t n);

private:
    std::mt19937_64 engine_;
};

struct NamedParam {
    std::string name;
    ag::Var var;
    bool frozen = false;
};

using ParamList = std::vector<NamedParam>;

class Linear {
public:
    Linear() = default;
    Linear(int in, int out, Rng& rng, bool with_bias = true);

    ag::Var forward(const ag::Var& x) const;
    void collect(const std::string& prefix, ParamList& out) const;

    int in_features() const { return weight_.rows(); }
    int out_features() const { return weight_.cols(); }
    ag::Var& weight() { return weight_; }
    ag::Var& bias() { return bias_; }

private:
    ag::Var weight_;  // [in, out]
    ag::Var bias_;    // [1, out]
};

class LayerNorm {
public:
    LayerNorm() = default;
    explicit LayerNorm(int width);
    ag::Var forward(const ag::Var& x) const;
    void collect(const std::string& prefix, ParamList& out) const;

private:
    ag::Var gamma_;
    ag::Var beta_;
};

// Two linear layers with a ReLU between them.
class Mlp {
public:
    Mlp() = default;
    Mlp(int in, int hidden, int out, Rng& rng);
    ag::Var forward(const ag::Var& x) const;
    void collect(const std::string& prefix, ParamList& out) const;

    Linear& first() { return first_; }
    Linear& second() { return second_; }

private:
    Linear first_;
    Linear second_;
};

// Multi-head scaled dot-product attention. Queries come from `query`
// [n_q, query_dim], keys and values from `context` [n_k, context_dim].
class MultiHeadAttention {
public:
    MultiHeadAttention() = default;
    MultiHeadAttention(int query_dim, int context_dim, int model_dim, int heads, Rng& rng);

    ag::Var forward(const ag::Var& query, const ag::Var& context) const;
    // Attention weights of the last head-averaged forward, for inspection.
    std::vector<double> attention_weights(const ag::Var& query, const ag::Var& context) const;
    void collect(const std::string& prefix, ParamList& out) const;

    Linear& output_projection() { return out_; }
    int heads() const { return heads_; }

private:
    int heads_ = 1;
    int head_dim_ = 1;
    Linear q_;
    Linear k_;
    Linear v_;
    Linear out_;
};

// 2-d convolution layer over channels-last [h*w, c] maps.
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, Rng& rng);

    ag::Var forward(const ag::Var& x, int h, int w) const;
    int output_size(int in) const { return ag::conv_output_size(in, kernel_, stride_, pad_); }
    void collect(const std::string& prefix, ParamList& out) const;

private:
    int kernel_ = 1;
    int stride_ = 1;
    int pad_ = 0;
    ag::Var weight_;
    ag::Var bias_;
};

void set_frozen(ParamList& params, bool frozen);

}  // namespace avs::nn
