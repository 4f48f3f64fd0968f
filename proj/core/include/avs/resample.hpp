#pragma once

#include <span>
#include <vector>

namespace avs {

// One output coordinate of a half-pixel-centred linear resample.
struct LinearTap {
    int lo = 0;
    int hi = 0;
    double frac = 0.0;  // weight of `hi`; `lo` gets 1 - frac
};

// Source taps for resampling an axis of length `in` to length `out`
// (align_corners = false, source index clamped at 0 and in - 1).
std::vector<LinearTap> linear_taps(int in, int out);

// Bilinear resize of a channels-last map [h, w, c] to [out_h, out_w, c].
std::vector<double> resize_bilinear(std::span<const double> src, int h, int w, int c,
                                    int out_h, int out_w);

// Adjoint of resize_bilinear: scatters a gradient over the [out_h, out_w, c]
// output back onto the [h, w, c] source grid.
std::vector<double> resize_bilinear_adjoint(std::span<const double> grad, int h, int w, int c,
                                            int out_h, int out_w);

}  // namespace avs
