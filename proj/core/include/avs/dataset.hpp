#pragma once

#include <map>
#include <string>
#include <vector>

#include "avs/model.hpp"
#include "avs/spectrogram.hpp"
#include "avs/synthesis.hpp"

namespace avs::data {

// One triplet ready for the trainable part of the model.
struct Sample {
    std::string id;
    std::string image_uri;
    std::string cls;
    EncodedInputs inputs;
    std::vector<BinaryMask> masks;     // ground truth per frame at input resolution
    std::vector<std::uint8_t> target;  // masks resized to the logit grid, [T, H/4, W/4]
    std::vector<std::uint8_t> full_target;  // masks flattened, [T, H, W]
    int height = 0;
    int width = 0;
};

FrameClip load_frames(const std::string& image_uri);
AudioClip load_audio(const std::string& audio_uri, const encoders::SpectrogramConfig& cfg);

// Visual features are per frame; audio features per segment. A still image
// gets the mean over segments, and longer audio is cut or padded with its
// last segment to the frame count.
encoders::AudioEmbedding align_audio(const encoders::AudioEmbedding& audio, int frames);

// Encoded features keyed by media URI; valid for one backbone set.
class FeatureCache {
public:
    const encoders::FeaturePyramid& visual(const std::string& image_uri, const encoders::VisualBackbone& backbone);
    const encoders::AudioEmbedding& audio(const std::string& audio_uri, const encoders::AudioBackbone& backbone,
                                          const encoders::SpectrogramConfig& cfg);
    std::size_t size() const { return visual_.size() + audio_.size(); }

private:
    std::map<std::string, encoders::FeaturePyramid> visual_;
    std::map<std::string, encoders::AudioEmbedding> audio_;
};

Sample load_sample(const synthesis::TripletSample& triplet, const Backbones& backbones,
                   const encoders::SpectrogramConfig& audio_cfg, FeatureCache* cache = nullptr);
std::vector<Sample> load_samples(const std::vector<synthesis::TripletSample>& triplets,
                                 const Backbones& backbones,
                                 const encoders::SpectrogramConfig& audio_cfg,
                                 FeatureCache* cache = nullptr);

}  // namespace avs::data
