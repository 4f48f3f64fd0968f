#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "avs/autograd.hpp"
#include "avs/errors.hpp"
#include "avs/resample.hpp"

using namespace avs;

namespace {

std::vector<double> randn(std::mt19937& gen, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = d(gen);
    return v;
}

using Fn = std::function<ag::Var(const std::vector<ag::Var>&)>;

// Reduces f's output to a scalar with fixed random weights, then compares
// every input gradient with a central difference.
void check_gradients(const Fn& f, std::vector<std::pair<int, int>> shapes, unsigned seed,
                     double tol = 1e-6) {
    std::mt19937 gen(seed);
    std::vector<ag::Var> inputs;
    for (auto [r, c] : shapes) inputs.push_back(ag::Var::parameter(r, c, randn(gen, r * c)));
    const ag::Var probe = f(inputs);
    const ag::Var weights = ag::Var::constant(probe.rows(), probe.cols(), randn(gen, probe.size()));
    auto scalar = [&] { return ag::sum(ag::mul(f(inputs), weights)); };

    for (auto& v : inputs) v.zero_grad();
    ag::backward(scalar());
    const double h = 1e-6;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto values = inputs[k].mutable_value();
        const auto grad = inputs[k].grad();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double keep = values[i];
            values[i] = keep + h;
            const double up = scalar().item();
            values[i] = keep - h;
            const double down = scalar().item();
            values[i] = keep;
            const double numeric = (up - down) / (2 * h);
            ASSERT_NEAR(grad[i], numeric, tol * std::max(1.0, std::abs(numeric)))
                << "input " << k << " index " << i;
        }
    }
}

}  // namespace

TEST(Autograd, MatmulFamily) {
    check_gradients([](auto& in) { return ag::matmul(in[0], in[1]); }, {{3, 4}, {4, 2}}, 1);
    check_gradients([](auto& in) { return ag::matmul_nt(in[0], in[1]); }, {{3, 4}, {5, 4}}, 2);
    check_gradients([](auto& in) { return ag::transpose(in[0]); }, {{3, 2}}, 3);
}

TEST(Autograd, Elementwise) {
    check_gradients([](auto& in) { return ag::add(in[0], in[1]); }, {{2, 3}, {2, 3}}, 4);
    check_gradients([](auto& in) { return ag::sub(in[0], in[1]); }, {{2, 3}, {2, 3}}, 5);
    check_gradients([](auto& in) { return ag::mul(in[0], in[1]); }, {{2, 3}, {2, 3}}, 6);
    check_gradients([](auto& in) { return ag::scale(in[0], -2.5); }, {{2, 3}}, 7);
    check_gradients([](auto& in) { return ag::add_row(in[0], in[1]); }, {{4, 3}, {1, 3}}, 8);
    check_gradients([](auto& in) { return ag::relu(in[0]); }, {{4, 4}}, 9);
}

TEST(Autograd, Normalizations) {
    check_gradients([](auto& in) { return ag::softmax_rows(in[0]); }, {{3, 5}}, 10);
    check_gradients([](auto& in) { return ag::layer_norm_rows(in[0], in[1], in[2]); },
                    {{4, 6}, {1, 6}, {1, 6}}, 11, 1e-5);
}

TEST(Autograd, Reshaping) {
    check_gradients([](auto& in) { return ag::slice_rows(in[0], 1, 2); }, {{4, 3}}, 12);
    check_gradients([](auto& in) { return ag::slice_cols(in[0], 1, 2); }, {{3, 4}}, 13);
    check_gradients([](auto& in) { return ag::concat_rows(std::vector<ag::Var>{in[0], in[1]}); },
                    {{2, 3}, {1, 3}}, 14);
    check_gradients([](auto& in) { return ag::concat_cols(std::vector<ag::Var>{in[0], in[1]}); },
                    {{2, 3}, {2, 1}}, 15);
    check_gradients([](auto& in) { return ag::mean_rows(in[0]); }, {{5, 3}}, 16);
    check_gradients([](auto& in) { return ag::broadcast_rows(in[0], 4); }, {{1, 3}}, 17);
}

TEST(Autograd, SpatialOps) {
    check_gradients([](auto& in) { return ag::resize_bilinear(in[0], 3, 3, 7, 5); }, {{9, 2}}, 18);
    check_gradients([](auto& in) { return ag::resize_bilinear(in[0], 4, 4, 2, 2); }, {{16, 1}}, 19);
    check_gradients(
        [](auto& in) { return ag::conv2d(in[0], 4, 4, in[1], in[2], 3, 1, 1); },
        {{16, 2}, {18, 3}, {1, 3}}, 20);
    check_gradients(
        [](auto& in) { return ag::conv2d(in[0], 4, 4, in[1], in[2], 2, 2, 0); },
        {{16, 3}, {12, 2}, {1, 2}}, 21);
}

TEST(Autograd, ConvMatchesNestedLoops) {
    std::mt19937 gen(22);
    const int h = 5, w = 4, cin = 2, cout = 3, k = 3, stride = 2, pad = 1;
    const auto x = randn(gen, h * w * cin);
    const auto wt = randn(gen, k * k * cin * cout);
    const auto b = randn(gen, cout);
    const auto y = ag::conv2d(ag::Var::constant(h * w, cin, x), h, w, ag::Var::constant(k * k * cin, cout, wt),
                              ag::Var::constant(1, cout, b), k, stride, pad);
    const int oh = ag::conv_output_size(h, k, stride, pad), ow = ag::conv_output_size(w, k, stride, pad);
    ASSERT_EQ(y.rows(), oh * ow);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            for (int co = 0; co < cout; ++co) {
                double acc = b[co];
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const int iy = oy * stride + ky - pad, ix = ox * stride + kx - pad;
                        if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                        for (int ci = 0; ci < cin; ++ci) {
                            acc += x[(iy * w + ix) * cin + ci] * wt[((ky * k + kx) * cin + ci) * cout + co];
                        }
                    }
                }
                EXPECT_NEAR(y.at(oy * ow + ox, co), acc, 1e-12);
            }
        }
    }
}

TEST(Resample, AdjointIdentity) {
    // <resize(a), g> == <a, adjoint(g)> for any a, g.
    std::mt19937 gen(23);
    const int h = 4, w = 3, c = 2, oh = 9, ow = 7;
    const auto a = randn(gen, h * w * c);
    const auto g = randn(gen, oh * ow * c);
    const auto up = resize_bilinear(a, h, w, c, oh, ow);
    const auto back = resize_bilinear_adjoint(g, h, w, c, oh, ow);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < up.size(); ++i) lhs += up[i] * g[i];
    for (std::size_t i = 0; i < a.size(); ++i) rhs += a[i] * back[i];
    EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Resample, HalfPixelCentres) {
    const auto taps = linear_taps(2, 4);
    // Output centres map to source -0.25 (clamped), 0.25, 0.75, 1.25.
    EXPECT_EQ(taps[0].lo, 0);
    EXPECT_EQ(taps[0].frac, 0.0);
    EXPECT_EQ(taps[1].lo, 0);
    EXPECT_DOUBLE_EQ(taps[1].frac, 0.25);
    EXPECT_DOUBLE_EQ(taps[2].frac, 0.75);
    EXPECT_EQ(taps[3].lo, 1);
    EXPECT_EQ(taps[3].hi, 1);
}

TEST(Autograd, NoGradGuardDetaches) {
    auto p = ag::Var::parameter(2, 2, {1, 2, 3, 4});
    {
        ag::NoGradGuard guard;
        EXPECT_FALSE(ag::grad_enabled());
        const auto y = ag::scale(p, 2.0);
        EXPECT_FALSE(y.requires_grad());
    }
    EXPECT_TRUE(ag::grad_enabled());
    EXPECT_TRUE(ag::scale(p, 2.0).requires_grad());
}

TEST(Autograd, GradientsAccumulateAcrossBackwardCalls) {
    auto p = ag::Var::parameter(1, 1, {3.0});
    ag::backward(ag::sum(ag::mul(p, p)));
    ag::backward(ag::sum(ag::mul(p, p)));
    EXPECT_DOUBLE_EQ(p.grad()[0], 12.0);
    p.zero_grad();
    EXPECT_DOUBLE_EQ(p.grad()[0], 0.0);
}

TEST(Autograd, ShapeErrors) {
    const auto a = ag::Var::constant(2, 3, std::vector<double>(6));
    const auto b = ag::Var::constant(2, 3, std::vector<double>(6));
    EXPECT_THROW(ag::matmul(a, b), ShapeError);
    EXPECT_THROW(ag::add(a, ag::transpose(b)), ShapeError);
}
