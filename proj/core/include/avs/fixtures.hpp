#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "avs/core_types.hpp"
#include "avs/nn.hpp"

// Procedural stand-in corpus: colored shapes on a canvas with exact masks,
// and one synthetic sound signature per shape class.
namespace avs::fixtures {

enum class Shape { kDisk, kSquare, kTriangle, kCross, kRing };
enum class SignatureKind { kTone, kBuzz, kPulse, kNoise, kChirp };
// kSynthetic: flat colors on a plain background. kReal: shaded objects on a
// textured, noisier background; used as the "real" domain.
enum class RenderStyle { kSynthetic, kReal };

struct AudioSignature {
    SignatureKind kind = SignatureKind::kTone;
    double base_hz = 440.0;
};

struct FixtureClass {
    std::string name;
    Shape shape = Shape::kDisk;
    double hue = -1.0;  // in [0, 1); negative draws a random hue per object
};

struct FixtureSpec {
    int canvas = 64;
    std::vector<FixtureClass> classes;
    std::map<std::string, AudioSignature> signatures;  // class name -> signature
    int min_instances = 1;
    int max_instances = 3;
    // Object radius range as a fraction of the canvas side.
    double min_radius = 0.14;
    double max_radius = 0.24;
    // Objects of a class with a fixed hue vary within +/- this much.
    double hue_jitter = 0.04;
    RenderStyle style = RenderStyle::kSynthetic;
    int clips_per_class = 4;
    double clip_seconds = 1.0;
    int sample_rate_hz = 16000;
    std::string visual_dataset = "shapes";
    std::string audio_dataset = "tones";

    // Throws ConfigError unless every class has exactly one signature, no two
    // classes share a signature, and the instance range is satisfiable.
    void validate() const;
};

// Four classes (disk, square, triangle, cross) with distinct signatures and
// one hue each.
FixtureSpec default_spec();
// Clears every class hue so object colors are drawn at random.
void randomize_colors(FixtureSpec& spec);
// Every image holds exactly two objects of different classes.
FixtureSpec two_object_spec();

Shape parse_shape(const std::string& s);
SignatureKind parse_signature_kind(const std::string& s);
RenderStyle parse_style(const std::string& s);
const char* style_name(RenderStyle s);

struct FixtureOutput {
    std::filesystem::path visual_annotations;  // COCO JSON
    std::filesystem::path audio_annotations;   // audio CSV
    std::filesystem::path alias_table;         // TSV
    std::size_t images = 0;
    std::size_t instances = 0;
    std::size_t clips = 0;
};

// Writes images/, audio/, instances.json, audio.csv and aliases.tsv under
// `out_dir`. Output is a pure function of (spec, n, seed).
FixtureOutput generate_fixtures(const FixtureSpec& spec, int n, std::uint64_t seed,
                                const std::filesystem::path& out_dir);

// Whether the pixel center (x + 0.5, y + 0.5) lies inside a shape of
// radius r centered at (cx, cy).
bool inside_shape(Shape shape, double cx, double cy, double r, int x, int y);
std::vector<double> synthesize_signature(const AudioSignature& sig, double seconds, int sample_rate_hz,
                                         nn::Rng& rng);

}  // namespace avs::fixtures
