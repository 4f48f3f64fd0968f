#include "avs/resample.hpp"

#include <algorithm>
#include <cmath>

#include "avs/errors.hpp"

namespace avs {

std::vector<LinearTap> linear_taps(int in, int out) {
    if (in <= 0 || out <= 0) throw ShapeError("linear_taps: sizes must be positive");
    std::vector<LinearTap> taps(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        double src = (o + 0.5) * ratio - 0.5;
        if (src < 0.0) src = 0.0;
        int lo = static_cast<int>(std::floor(src));
        if (lo > in - 1) lo = in - 1;
        const int hi = std::min(lo + 1, in - 1);
        taps[o] = {lo, hi, hi == lo ? 0.0 : src - lo};
    }
    return taps;
}

std::vector<double> resize_bilinear(std::span<const double> src, int h, int w, int c, int out_h,
                                    int out_w) {
    if (src.size() != static_cast<std::size_t>(h) * w * c) {
        throw ShapeError("resize_bilinear: source size does not match [h, w, c]");
    }
    std::vector<double> out(static_cast<std::size_t>(out_h) * out_w * c);
    const auto ty = linear_taps(h, out_h);
    const auto tx = linear_taps(w, out_w);
    for (int oy = 0; oy < out_h; ++oy) {
        const auto& yy = ty[oy];
        for (int ox = 0; ox < out_w; ++ox) {
            const auto& xx = tx[ox];
            const double* s00 = src.data() + (static_cast<std::size_t>(yy.lo) * w + xx.lo) * c;
            const double* s01 = src.data() + (static_cast<std::size_t>(yy.lo) * w + xx.hi) * c;
            const double* s10 = src.data() + (static_cast<std::size_t>(yy.hi) * w + xx.lo) * c;
            const double* s11 = src.data() + (static_cast<std::size_t>(yy.hi) * w + xx.hi) * c;
            double* d = out.data() + (static_cast<std::size_t>(oy) * out_w + ox) * c;
            for (int k = 0; k < c; ++k) {
                const double top = s00[k] + xx.frac * (s01[k] - s00[k]);
                const double bottom = s10[k] + xx.frac * (s11[k] - s10[k]);
                d[k] = top + yy.frac * (bottom - top);
            }
        }
    }
    return out;
}

std::vector<double> resize_bilinear_adjoint(std::span<const double> grad, int h, int w, int c,
                                            int out_h, int out_w) {
    if (grad.size() != static_cast<std::size_t>(out_h) * out_w * c) {
        throw ShapeError("resize_bilinear_adjoint: gradient size does not match [out_h, out_w, c]");
    }
    std::vector<double> out(static_cast<std::size_t>(h) * w * c, 0.0);
    const auto ty = linear_taps(h, out_h);
    const auto tx = linear_taps(w, out_w);
    for (int oy = 0; oy < out_h; ++oy) {
        const auto& yy = ty[oy];
        for (int ox = 0; ox < out_w; ++ox) {
            const auto& xx = tx[ox];
            const double* g = grad.data() + (static_cast<std::size_t>(oy) * out_w + ox) * c;
            const double w00 = (1 - yy.frac) * (1 - xx.frac);
            const double w01 = (1 - yy.frac) * xx.frac;
            const double w10 = yy.frac * (1 - xx.frac);
            const double w11 = yy.frac * xx.frac;
            double* d00 = out.data() + (static_cast<std::size_t>(yy.lo) * w + xx.lo) * c;
            double* d01 = out.data() + (static_cast<std::size_t>(yy.lo) * w + xx.hi) * c;
            double* d10 = out.data() + (static_cast<std::size_t>(yy.hi) * w + xx.lo) * c;
            double* d11 = out.data() + (static_cast<std::size_t>(yy.hi) * w + xx.hi) * c;
            for (int k = 0; k < c; ++k) {
                d00[k] += w00 * g[k];
                d01[k] += w01 * g[k];
                d10[k] += w10 * g[k];
                d11[k] += w11 * g[k];
            }
        }
    }
    return out;
}

}  // namespace avs
