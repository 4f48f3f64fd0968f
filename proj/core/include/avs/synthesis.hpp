#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avs/core_types.hpp"
#include "avs/ontology.hpp"

namespace avs::synthesis {

// One object instance as produced by a visual source adapter, before label
// resolution. `malformed` entries are skipped and counted by collect_visual.
struct RawVisualAnnotation {
    std::string instance_id;
    std::string image_uri;
    std::string label;
    int height = 0;
    int width = 0;
    std::optional<MaskRLE> mask;
    bool malformed = false;
    std::string problem;
};

struct RawAudioAnnotation {
    std::string audio_uri;
    std::string label;
    double duration_s = 0.0;
    bool malformed = false;
    std::string problem;
};

struct ImageMaskRecord {
    std::string instance_id;
    std::string image_uri;
    MaskRLE mask;
    std::string source_dataset;
    std::string source_label;
    std::string canonical_class;
    int height = 0;
    int width = 0;
};

struct AudioClipRecord {
    std::string audio_uri;
    std::string source_dataset;
    std::string source_label;
    std::string canonical_class;
    double duration_s = 0.0;
};

enum class Split { kTrain, kTest };
const char* split_name(Split s);
Split parse_split(const std::string& s);

struct TripletSample {
    std::string id;
    std::string image_uri;
    MaskRLE mask;
    std::string audio_uri;
    std::string canonical_class;
    Split split = Split::kTrain;

    bool operator==(const TripletSample&) const = default;
};

struct DatasetManifest {
    std::vector<TripletSample> samples;
    std::map<std::string, std::size_t> class_counts;
    std::uint64_t seed = 0;

    std::vector<TripletSample> subset(Split split) const;
    std::size_t count(Split split) const;
};

struct CollectStats {
    std::size_t seen = 0;
    std::size_t kept = 0;
    std::size_t unresolved = 0;
    std::size_t malformed = 0;
};

// Source adapters. Relative media URIs are resolved against the annotation
// file's directory.
// COCO/LVIS instance JSON with uncompressed RLE segmentations; polygon
// segmentations are reported malformed.
std::vector<RawVisualAnnotation> read_coco_instances(const std::filesystem::path& path);
// Open Images style CSV (columns MaskPath, ImageID, LabelName, optional
// ImagePath) with one PGM mask file per instance.
std::vector<RawVisualAnnotation> read_openimages_csv(const std::filesystem::path& path);
// Audio CSV with header (audio_uri, label, duration_s), or headerless
// VGGSound rows (ytid, start_seconds, label, split) mapped to 10 s clips.
std::vector<RawAudioAnnotation> read_audio_csv(const std::filesystem::path& path);
// Picks an adapter by extension: .json -> COCO, .csv -> Open Images.
std::vector<RawVisualAnnotation> read_visual_source(const std::filesystem::path& path);

// Keeps one record per resolvable, well-formed instance.
std::vector<ImageMaskRecord> collect_visual(const std::vector<RawVisualAnnotation>& raw,
                                            const std::string& dataset,
                                            const ontology::AliasTable& table,
                                            CollectStats* stats = nullptr);
std::vector<AudioClipRecord> collect_audio(const std::vector<RawAudioAnnotation>& raw,
                                           const std::string& dataset,
                                           const ontology::AliasTable& table,
                                           CollectStats* stats = nullptr);

// One triplet per visual record whose class has audio; the audio partner is
// drawn uniformly (with replacement) from same-class clips. Throws EmptyJoin
// when no class is shared.
std::vector<TripletSample> compose_triplets(std::vector<ImageMaskRecord> visual,
                                            std::vector<AudioClipRecord> audio,
                                            std::uint64_t seed);

// Per-class stratified split; a class never loses its last train sample.
DatasetManifest split_manifest(std::vector<TripletSample> samples, double test_fraction,
                               std::uint64_t seed);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
// URIs come back resolved against the manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& path);

struct SourceSpec {
    std::string dataset;
    std::filesystem::path path;
};
// "name=path" or a bare path (dataset name = file stem).
SourceSpec parse_source_spec(const std::string& arg);

struct SynthesisReport {
    DatasetManifest manifest;
    CollectStats visual;
    CollectStats audio;
};

SynthesisReport synthesize(const std::vector<SourceSpec>& visual_sources,
                           const std::vector<SourceSpec>& audio_sources,
                           const ontology::AliasTable& table, double test_fraction,
                           std::uint64_t seed);

}  // namespace avs::synthesis
