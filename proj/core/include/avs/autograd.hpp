#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

// Minimal reverse-mode automatic differentiation over row-major 2-d matrices.
// Every value is a [rows, cols] matrix of doubles; feature maps are stored
// channels-last as [height * width, channels].
namespace avs::ag {

struct Node {
    int rows = 0;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;
    bool requires_grad = false;

    void ensure_grad();
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Var constant(int rows, int cols, std::vector<double> value);
    static Var zeros(int rows, int cols);
    static Var parameter(int rows, int cols, std::vector<double> value);

    int rows() const { return node_->rows; }
    int cols() const { return node_->cols; }
    std::size_t size() const { return node_->value.size(); }
    bool defined() const { return static_cast<bool>(node_); }
    bool requires_grad() const { return node_ && node_->requires_grad; }

    std::span<const double> value() const { return node_->value; }
    std::span<double> mutable_value() { return node_->value; }
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad();
    double item() const;
    double at(int r, int c) const { return node_->value[static_cast<std::size_t>(r) * cols() + c]; }

    void zero_grad();
    void set_requires_grad(bool on) { node_->requires_grad = on; }

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& shared() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

// Seeds d(root)/d(root) = 1 for a 1x1 root and propagates to every leaf that
// requires a gradient. Gradients accumulate into leaves.
void backward(const Var& root);

bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// Builds a node from a forward value; `backward` is only attached when one of
// `parents` requires a gradient and grad mode is on.
Var make_result(int rows, int cols, std::vector<double> value, std::vector<Var> parents,
                std::function<void(Node&)> backward);

Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_row(const Var& a, const Var& row);  // row is [1, cols], broadcast over rows

Var relu(const Var& a);
Var softmax_rows(const Var& a);
Var layer_norm_rows(const Var& a, const Var& gamma, const Var& beta, double eps = 1e-5);

Var slice_rows(const Var& a, int start, int count);
Var slice_cols(const Var& a, int start, int count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var mean_rows(const Var& a);                   // [1, cols]
Var broadcast_rows(const Var& row, int count);  // [1, c] -> [count, c]
Var sum(const Var& a);                          // [1, 1]

// Bilinear resize of a [h*w, c] channels-last map.
Var resize_bilinear(const Var& a, int h, int w, int out_h, int out_w);

// 2-d convolution of a [h*w, c_in] channels-last map. `weight` is
// [k*k*c_in, c_out] ordered (ky, kx, c_in); `bias` is [1, c_out] or undefined.
Var conv2d(const Var& a, int h, int w, const Var& weight, const Var& bias, int kernel,
           int stride, int pad);
int conv_output_size(int in, int kernel, int stride, int pad);

}  // namespace avs::ag
