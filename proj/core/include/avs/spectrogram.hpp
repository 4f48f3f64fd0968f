#pragma once

#include <vector>

#include "avs/core_types.hpp"

namespace avs::encoders {

// VGGish-style log-mel framing. Each segment of `segment_seconds` yields
// `frames_per_segment` STFT frames of `n_mels` bands; segments start every
// `hop_seconds`.
struct SpectrogramConfig {
    int sample_rate_hz = 16000;
    int n_mels = 64;
    int frames_per_segment = 96;
    double segment_seconds = 0.96;
    double hop_seconds = 1.0;
    double eps = 1e-6;
    double window_seconds = 0.025;
    double frame_hop_seconds = 0.010;
    int fft_size = 512;
    double fmin_hz = 125.0;
    double fmax_hz = 7500.0;
    // Inputs shorter than this are rejected; longer inputs below one segment
    // are zero-padded.
    double min_seconds = 0.1;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// [n_fft/2 + 1, n_mels] triangular weights, row-major.
std::vector<double> mel_filterbank(const SpectrogramConfig& cfg);

// Throws TooShort under cfg.min_seconds.
AudioClip log_mel_spectrogram(const std::vector<double>& waveform, int sample_rate_hz,
                              const SpectrogramConfig& cfg = {});

// Number of segments a waveform of `n_samples` produces.
int segment_count(std::size_t n_samples, const SpectrogramConfig& cfg);

}  // namespace avs::encoders
