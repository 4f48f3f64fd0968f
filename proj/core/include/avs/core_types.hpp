#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avs/tensor.hpp"

namespace avs {

// Video frames [T, 3, H0, W0] of normalized pixel values. Still images are T = 1.
class FrameClip {
public:
    FrameClip(int frames, int height, int width, std::vector<double> pixels);
    explicit FrameClip(Tensor pixels);

    int frames() const { return pixels_.dim(0); }
    int height() const { return pixels_.dim(2); }
    int width() const { return pixels_.dim(3); }
    const Tensor& pixels() const { return pixels_; }
    // Channels-last copy of frame t: [H0 * W0, 3].
    std::vector<double> frame_hwc(int t) const;

private:
    Tensor pixels_;
};

// Per-frame log-mel spectrograms [T, H_a, W_a] (H_a time frames, W_a mel bands).
class AudioClip {
public:
    AudioClip(Tensor spectrograms, int sample_rate_hz);

    int frames() const { return spectrograms_.dim(0); }
    int time_bins() const { return spectrograms_.dim(1); }
    int mel_bands() const { return spectrograms_.dim(2); }
    int sample_rate_hz() const { return sample_rate_hz_; }
    const Tensor& spectrograms() const { return spectrograms_; }

private:
    Tensor spectrograms_;
    int sample_rate_hz_;
};

class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int height, int width);  // all zeros
    BinaryMask(int height, int width, std::vector<std::uint8_t> bits);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t area() const { return bits_.size(); }
    std::size_t count() const;

    std::uint8_t at(int y, int x) const { return bits_[static_cast<std::size_t>(y) * width_ + x]; }
    void set(int y, int x, bool on) { bits_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0; }
    std::span<const std::uint8_t> bits() const { return bits_; }

    bool operator==(const BinaryMask&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> bits_;  // row-major, values in {0, 1}
};

// Uncompressed COCO-style run lengths: column-major scan, first run counts zeros.
struct MaskRLE {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> counts;

    bool operator==(const MaskRLE&) const = default;
};

MaskRLE rle_encode(const BinaryMask& mask);
// Throws LengthMismatch when the counts do not cover height * width exactly.
BinaryMask rle_decode(const MaskRLE& rle);

// Bilinear resample of the {0,1} field, then keep pixels strictly above `threshold`.
BinaryMask resize_mask(const BinaryMask& mask, int height, int width, double threshold = 0.5);

}  // namespace avs
