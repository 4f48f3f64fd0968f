#include "avs/nn.hpp"

#include <cmath>
#include <numbers>

#include "avs/errors.hpp"

namespace avs::nn {

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    // Box-Muller; the second variate is discarded to keep the stream simple.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw Error("Rng::index on empty range");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

namespace {

std::vector<double> xavier(int in, int out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (in + out));
    std::vector<double> w(static_cast<std::size_t>(in) * out);
    for (double& v : w) v = rng.uniform(-limit, limit);
    return w;
}

}  // namespace

Linear::Linear(int in, int out, Rng& rng, bool with_bias)
    : weight_(ag::Var::parameter(in, out, xavier(in, out, rng))) {
    if (with_bias) bias_ = ag::Var::parameter(1, out, std::vector<double>(out, 0.0));
}

ag::Var Linear::forward(const ag::Var& x) const {
    ag::Var y = ag::matmul(x, weight_);
    return bias_.defined() ? ag::add_row(y, bias_) : y;
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".weight", weight_, false});
    if (bias_.defined()) out.push_back({prefix + ".bias", bias_, false});
}

LayerNorm::LayerNorm(int width)
    : gamma_(ag::Var::parameter(1, width, std::vector<double>(width, 1.0))),
      beta_(ag::Var::parameter(1, width, std::vector<double>(width, 0.0))) {}

ag::Var LayerNorm::forward(const ag::Var& x) const { return ag::layer_norm_rows(x, gamma_, beta_); }

void LayerNorm::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".gamma", gamma_, false});
    out.push_back({prefix + ".beta", beta_, false});
}

Mlp::Mlp(int in, int hidden, int out, Rng& rng) : first_(in, hidden, rng), second_(hidden, out, rng) {}

ag::Var Mlp::forward(const ag::Var& x) const { return second_.forward(ag::relu(first_.forward(x))); }

void Mlp::collect(const std::string& prefix, ParamList& out) const {
    first_.collect(prefix + ".0", out);
    second_.collect(prefix + ".1", out);
}

MultiHeadAttention::MultiHeadAttention(int query_dim, int context_dim, int model_dim, int heads,
                                       Rng& rng)
    : heads_(heads),
      head_dim_(model_dim / heads),
      q_(query_dim, model_dim, rng),
      k_(context_dim, model_dim, rng),
      v_(context_dim, model_dim, rng),
      out_(model_dim, query_dim, rng) {
    if (heads <= 0 || model_dim % heads != 0) {
        throw ConfigError("attention width " + std::to_string(model_dim) +
                          " not divisible by heads " + std::to_string(heads));
    }
}

ag::Var MultiHeadAttention::forward(const ag::Var& query, const ag::Var& context) const {
    const ag::Var q = q_.forward(query);
    const ag::Var k = k_.forward(context);
    const ag::Var v = v_.forward(context);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim_));
    std::vector<ag::Var> heads;
    heads.reserve(static_cast<std::size_t>(heads_));
    for (int h = 0; h < heads_; ++h) {
        const int c0 = h * head_dim_;
        ag::Var qh = heads_ == 1 ? q : ag::slice_cols(q, c0, head_dim_);
        ag::Var kh = heads_ == 1 ? k : ag::slice_cols(k, c0, head_dim_);
        ag::Var vh = heads_ == 1 ? v : ag::slice_cols(v, c0, head_dim_);
        ag::Var weights = ag::softmax_rows(ag::scale(ag::matmul_nt(qh, kh), inv_sqrt));
        heads.push_back(ag::matmul(weights, vh));
    }
    ag::Var merged = heads_ == 1 ? heads[0] : ag::concat_cols(heads);
    return out_.forward(merged);
}

std::vector<double> MultiHeadAttention::attention_weights(const ag::Var& query,
                                                          const ag::Var& context) const {
    ag::NoGradGuard guard;
    const ag::Var q = q_.forward(query);
    const ag::Var k = k_.forward(context);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim_));
    std::vector<double> mean(static_cast<std::size_t>(query.rows()) * context.rows(), 0.0);
    for (int h = 0; h < heads_; ++h) {
        const int c0 = h * head_dim_;
        ag::Var w = ag::softmax_rows(ag::scale(
            ag::matmul_nt(ag::slice_cols(q, c0, head_dim_), ag::slice_cols(k, c0, head_dim_)),
            inv_sqrt));
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += w.value()[i] / heads_;
    }
    return mean;
}

void MultiHeadAttention::collect(const std::string& prefix, ParamList& out) const {
    q_.collect(prefix + ".q", out);
    k_.collect(prefix + ".k", out);
    v_.collect(prefix + ".v", out);
    out_.collect(prefix + ".out", out);
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, Rng& rng)
    : kernel_(kernel), stride_(stride), pad_(pad) {
    // He-uniform, suited to the ReLU that follows every conv here.
    const int fan_in = kernel * kernel * in_channels;
    const double limit = std::sqrt(6.0 / fan_in);
    std::vector<double> w(static_cast<std::size_t>(fan_in) * out_channels);
    for (double& v : w) v = rng.uniform(-limit, limit);
    weight_ = ag::Var::parameter(fan_in, out_channels, std::move(w));
    bias_ = ag::Var::parameter(1, out_channels, std::vector<double>(out_channels, 0.0));
}

ag::Var Conv2d::forward(const ag::Var& x, int h, int w) const {
    return ag::conv2d(x, h, w, weight_, bias_, kernel_, stride_, pad_);
}

void Conv2d::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".weight", weight_, false});
    out.push_back({prefix + ".bias", bias_, false});
}

void set_frozen(ParamList& params, bool frozen) {
    for (auto& p : params) {
        p.frozen = frozen;
        p.var.set_requires_grad(!frozen);
    }
}

}  // namespace avs::nn
