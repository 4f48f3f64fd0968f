#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "avs/core_types.hpp"

// Raw media used by the fixture corpus: binary PPM images, PGM masks and
// 16-bit PCM mono WAV audio.
namespace avs::media {

struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> rgb;  // row-major, interleaved
};

void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);

// Mask files: binary PGM (P5), any nonzero value is foreground.
void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask_pgm(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
               int sample_rate_hz);
// Samples scaled to [-1, 1); multi-channel input is averaged to mono.
std::vector<double> read_wav(const std::filesystem::path& path, int* sample_rate_hz);

// Normalizes 8-bit RGB into a single-frame clip with values in [-1, 1].
FrameClip to_frame_clip(const RgbImage& image);

}  // namespace avs::media
