#include "avs/spectrogram.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <type_traits>

#include "avs/errors.hpp"

namespace avs::encoders {

double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

std::vector<double> mel_filterbank(const SpectrogramConfig& cfg) {
    const int bins = cfg.fft_size / 2 + 1;
    const double lo = hz_to_mel(cfg.fmin_hz);
    const double hi = hz_to_mel(cfg.fmax_hz);
    std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels) + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / (cfg.n_mels + 1);
    }
    std::vector<double> weights(static_cast<std::size_t>(bins) * cfg.n_mels, 0.0);
    for (int k = 1; k < bins; ++k) {  // DC carries no mel weight
        const double mel = hz_to_mel(static_cast<double>(k) * cfg.sample_rate_hz / cfg.fft_size);
        for (int m = 0; m < cfg.n_mels; ++m) {
            const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
            double w = 0.0;
            if (mel > left && mel <= center) w = (mel - left) / (center - left);
            else if (mel > center && mel < right) w = (right - mel) / (right - center);
            weights[static_cast<std::size_t>(k) * cfg.n_mels + m] = w;
        }
    }
    return weights;
}

int segment_count(std::size_t n_samples, const SpectrogramConfig& cfg) {
    const auto seg = static_cast<std::size_t>(std::lround(cfg.segment_seconds * cfg.sample_rate_hz));
    const auto hop = static_cast<std::size_t>(std::lround(cfg.hop_seconds * cfg.sample_rate_hz));
    if (n_samples < seg) return 1;
    return static_cast<int>((n_samples - seg) / hop) + 1;
}

AudioClip log_mel_spectrogram(const std::vector<double>& waveform, int sample_rate_hz,
                              const SpectrogramConfig& cfg) {
    if (sample_rate_hz != cfg.sample_rate_hz) {
        throw Error("sample rate " + std::to_string(sample_rate_hz) + " differs from configured " +
                    std::to_string(cfg.sample_rate_hz));
    }
    const double seconds = static_cast<double>(waveform.size()) / sample_rate_hz;
    if (waveform.empty() || seconds < cfg.min_seconds) {
        throw TooShort("waveform of " + std::to_string(seconds) + " s is shorter than " +
                       std::to_string(cfg.min_seconds) + " s");
    }
    const int window = static_cast<int>(std::lround(cfg.window_seconds * sample_rate_hz));
    const int frame_hop = static_cast<int>(std::lround(cfg.frame_hop_seconds * sample_rate_hz));
    const auto seg_hop = static_cast<std::size_t>(std::lround(cfg.hop_seconds * sample_rate_hz));
    const int n_fft = cfg.fft_size;
    const int bins = n_fft / 2 + 1;
    if (window > n_fft) throw Error("analysis window longer than the FFT");

    const int segments = segment_count(waveform.size(), cfg);
    const auto filters = mel_filterbank(cfg);
    std::vector<double> hann(static_cast<std::size_t>(window));
    for (int i = 0; i < window; ++i) {
        hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / window);  // periodic
    }

    double* in = fftw_alloc_real(static_cast<std::size_t>(n_fft));
    fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(bins));
    std::unique_ptr<double, decltype(&fftw_free)> in_guard(in, &fftw_free);
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> spec_guard(spec, &fftw_free);
    fftw_plan plan = fftw_plan_dft_r2c_1d(n_fft, in, spec, FFTW_ESTIMATE);
    std::unique_ptr<std::remove_pointer_t<fftw_plan>, decltype(&fftw_destroy_plan)> plan_guard(
        plan, &fftw_destroy_plan);

    Tensor out({segments, cfg.frames_per_segment, cfg.n_mels});
    std::vector<double> magnitude(static_cast<std::size_t>(bins));
    for (int s = 0; s < segments; ++s) {
        for (int f = 0; f < cfg.frames_per_segment; ++f) {
            const std::size_t start = s * seg_hop + static_cast<std::size_t>(f) * frame_hop;
            for (int i = 0; i < n_fft; ++i) {
                const std::size_t idx = start + static_cast<std::size_t>(i);
                in[i] = (i < window && idx < waveform.size()) ? waveform[idx] * hann[i] : 0.0;
            }
            fftw_execute(plan);
            for (int k = 0; k < bins; ++k) magnitude[k] = std::hypot(spec[k][0], spec[k][1]);
            for (int m = 0; m < cfg.n_mels; ++m) {
                double acc = 0.0;
                for (int k = 0; k < bins; ++k) {
                    acc += magnitude[k] * filters[static_cast<std::size_t>(k) * cfg.n_mels + m];
                }
                out.at({s, f, m}) = std::log(acc + cfg.eps);
            }
        }
    }
    return AudioClip(std::move(out), sample_rate_hz);
}

}  // namespace avs::encoders
