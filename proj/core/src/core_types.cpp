#include "avs/core_types.hpp"

#include <numeric>
#include <string>

#include "avs/errors.hpp"
#include "avs/resample.hpp"

namespace avs {

FrameClip::FrameClip(int frames, int height, int width, std::vector<double> pixels)
    : FrameClip(Tensor({frames, 3, height, width}, std::move(pixels))) {}

FrameClip::FrameClip(Tensor pixels) : pixels_(std::move(pixels)) {
    if (pixels_.rank() != 4 || pixels_.dim(1) != 3) {
        throw ShapeError("FrameClip expects [T, 3, H, W]");
    }
    if (pixels_.dim(0) < 1 || pixels_.dim(2) <= 0 || pixels_.dim(3) <= 0) {
        throw ShapeError("FrameClip requires T >= 1 and positive spatial size");
    }
}

std::vector<double> FrameClip::frame_hwc(int t) const {
    const int h = height(), w = width();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const double* base = pixels_.data().data() + static_cast<std::size_t>(t) * 3 * plane;
    std::vector<double> out(plane * 3);
    for (std::size_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) out[p * 3 + c] = base[c * plane + p];
    }
    return out;
}

AudioClip::AudioClip(Tensor spectrograms, int sample_rate_hz)
    : spectrograms_(std::move(spectrograms)), sample_rate_hz_(sample_rate_hz) {
    if (spectrograms_.rank() != 3 || spectrograms_.dim(0) < 1 || spectrograms_.dim(1) <= 0 ||
        spectrograms_.dim(2) <= 0) {
        throw ShapeError("AudioClip expects [T >= 1, H_a, W_a]");
    }
    if (sample_rate_hz_ <= 0) throw ShapeError("AudioClip sample rate must be positive");
}

BinaryMask::BinaryMask(int height, int width)
    : height_(height), width_(width), bits_(static_cast<std::size_t>(height) * width, 0) {
    if (height < 0 || width < 0) throw ShapeError("BinaryMask: negative size");
}

BinaryMask::BinaryMask(int height, int width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
    if (height < 0 || width < 0 || bits_.size() != static_cast<std::size_t>(height) * width) {
        throw ShapeError("BinaryMask: bit count does not match " + std::to_string(height) + "x" +
                         std::to_string(width));
    }
    for (auto b : bits_) {
        if (b > 1) throw ShapeError("BinaryMask: values must be 0 or 1");
    }
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::accumulate(bits_.begin(), bits_.end(), std::size_t{0}));
}

MaskRLE rle_encode(const BinaryMask& mask) {
    MaskRLE rle{mask.height(), mask.width(), {}};
    std::uint8_t current = 0;
    std::uint32_t run = 0;
    for (int x = 0; x < mask.width(); ++x) {
        for (int y = 0; y < mask.height(); ++y) {
            const std::uint8_t v = mask.at(y, x);
            if (v != current) {
                rle.counts.push_back(run);
                run = 0;
                current = v;
            }
            ++run;
        }
    }
    rle.counts.push_back(run);
    return rle;
}

BinaryMask rle_decode(const MaskRLE& rle) {
    if (rle.height < 0 || rle.width < 0) throw ShapeError("rle_decode: negative size");
    const std::uint64_t area = static_cast<std::uint64_t>(rle.height) * rle.width;
    const std::uint64_t total =
        std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
    if (total != area) {
        throw LengthMismatch("rle counts sum to " + std::to_string(total) + ", expected " +
                             std::to_string(area));
    }
    BinaryMask mask(rle.height, rle.width);
    std::uint64_t pos = 0;
    bool on = false;
    for (std::uint32_t run : rle.counts) {
        if (on) {
            for (std::uint64_t i = pos; i < pos + run; ++i) {
                const int x = static_cast<int>(i / rle.height);
                const int y = static_cast<int>(i % rle.height);
                mask.set(y, x, true);
            }
        }
        pos += run;
        on = !on;
    }
    return mask;
}

BinaryMask resize_mask(const BinaryMask& mask, int height, int width, double threshold) {
    if (height <= 0 || width <= 0) throw ShapeError("resize_mask: target size must be positive");
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error("resize_mask: threshold must be in (0, 1)");
    if (height == mask.height() && width == mask.width()) return mask;
    std::vector<double> field(mask.bits().begin(), mask.bits().end());
    const auto resized = resize_bilinear(field, mask.height(), mask.width(), 1, height, width);
    std::vector<std::uint8_t> bits(resized.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = resized[i] > threshold ? 1 : 0;
    return BinaryMask(height, width, std::move(bits));
}

}  // namespace avs
