#include "avs/dataset.hpp"

#include "avs/errors.hpp"
#include "avs/media_io.hpp"
#include "avs/objective.hpp"

namespace avs::data {

FrameClip load_frames(const std::string& image_uri) {
    return media::to_frame_clip(media::read_ppm(image_uri));
}

AudioClip load_audio(const std::string& audio_uri, const encoders::SpectrogramConfig& cfg) {
    int rate = 0;
    const auto wave = media::read_wav(audio_uri, &rate);
    return encoders::log_mel_spectrogram(wave, rate, cfg);
}

encoders::AudioEmbedding align_audio(const encoders::AudioEmbedding& audio, int frames) {
    const int segs = audio.frames();
    const int c = audio.width();
    if (segs == frames) return audio;
    Tensor out({frames, c});
    const auto src = audio.vectors.data();
    if (frames == 1) {
        for (int s = 0; s < segs; ++s) {
            for (int k = 0; k < c; ++k) out[k] += src[static_cast<std::size_t>(s) * c + k] / segs;
        }
    } else {
        for (int t = 0; t < frames; ++t) {
            const int s = std::min(t, segs - 1);
            for (int k = 0; k < c; ++k) out[static_cast<std::size_t>(t) * c + k] = src[static_cast<std::size_t>(s) * c + k];
        }
    }
    return {std::move(out)};
}

const encoders::FeaturePyramid& FeatureCache::visual(const std::string& image_uri,
                                                     const encoders::VisualBackbone& backbone) {
    auto it = visual_.find(image_uri);
    if (it == visual_.end()) {
        it = visual_.emplace(image_uri, encoders::encode_visual(load_frames(image_uri), backbone)).first;
    }
    return it->second;
}

const encoders::AudioEmbedding& FeatureCache::audio(const std::string& audio_uri,
                                                    const encoders::AudioBackbone& backbone,
                                                    const encoders::SpectrogramConfig& cfg) {
    auto it = audio_.find(audio_uri);
    if (it == audio_.end()) {
        it = audio_.emplace(audio_uri, encoders::encode_audio(load_audio(audio_uri, cfg), backbone)).first;
    }
    return it->second;
}

Sample load_sample(const synthesis::TripletSample& triplet, const Backbones& backbones,
                   const encoders::SpectrogramConfig& audio_cfg, FeatureCache* cache) {
    Sample s;
    s.id = triplet.id;
    s.image_uri = triplet.image_uri;
    s.cls = triplet.canonical_class;
    const BinaryMask gt = rle_decode(triplet.mask);
    s.height = gt.height();
    s.width = gt.width();

    FeatureCache local;
    FeatureCache& features = cache ? *cache : local;
    s.inputs.pyramid = features.visual(triplet.image_uri, *backbones.visual);
    const int frames = s.inputs.pyramid.frames();
    if (s.inputs.pyramid.fine.dim(2) * 4 != gt.height() || s.inputs.pyramid.fine.dim(3) * 4 != gt.width()) {
        throw ShapeError("mask of " + triplet.id + " does not match its image size");
    }
    s.inputs.audio = align_audio(features.audio(triplet.audio_uri, *backbones.audio, audio_cfg), frames);
    s.masks.assign(static_cast<std::size_t>(s.inputs.pyramid.frames()), gt);
    for (const auto& m : s.masks) s.full_target.insert(s.full_target.end(), m.bits().begin(), m.bits().end());
    s.target = objective::prepare_targets(s.masks, s.inputs.pyramid.fine.dim(2), s.inputs.pyramid.fine.dim(3));
    return s;
}

std::vector<Sample> load_samples(const std::vector<synthesis::TripletSample>& triplets,
                                 const Backbones& backbones,
                                 const encoders::SpectrogramConfig& audio_cfg, FeatureCache* cache) {
    std::vector<Sample> out;
    out.reserve(triplets.size());
    for (const auto& t : triplets) out.push_back(load_sample(t, backbones, audio_cfg, cache));
    return out;
}

}  // namespace avs::data
