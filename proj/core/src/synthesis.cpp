#include "avs/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "avs/errors.hpp"
#include "avs/media_io.hpp"
#include "avs/nn.hpp"

namespace avs::synthesis {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

bool is_remote(const std::string& uri) { return uri.find("://") != std::string::npos; }

std::string resolve_uri(const fs::path& base_dir, const std::string& uri) {
    if (uri.empty() || is_remote(uri)) return uri;
    fs::path p(uri);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (base_dir / p).lexically_normal().string();
}

std::string relativize_uri(const fs::path& base_dir, const std::string& uri) {
    if (uri.empty() || is_remote(uri)) return uri;
    fs::path p(uri);
    if (!p.is_absolute()) p = fs::absolute(p);
    const fs::path rel = p.lexically_normal().lexically_relative(fs::absolute(base_dir).lexically_normal());
    return rel.empty() ? p.string() : rel.generic_string();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::optional<MaskRLE> rle_from_json(const json& seg, int height, int width, std::string* problem) {
    if (seg.is_array()) {
        *problem = "polygon segmentation is not supported";
        return std::nullopt;
    }
    if (!seg.is_object() || !seg.contains("counts") || !seg.contains("size")) {
        *problem = "segmentation lacks size/counts";
        return std::nullopt;
    }
    if (seg["counts"].is_string()) {
        *problem = "compressed RLE strings are not supported";
        return std::nullopt;
    }
    MaskRLE rle;
    const auto& size = seg["size"];
    if (!size.is_array() || size.size() != 2) {
        *problem = "segmentation size must be [H, W]";
        return std::nullopt;
    }
    rle.height = size[0].get<int>();
    rle.width = size[1].get<int>();
    if ((height > 0 && rle.height != height) || (width > 0 && rle.width != width)) {
        *problem = "mask size differs from image size";
        return std::nullopt;
    }
    std::uint64_t total = 0;
    for (const auto& c : seg["counts"]) {
        if (!c.is_number_integer() || c.get<long long>() < 0) {
            *problem = "rle counts must be non-negative integers";
            return std::nullopt;
        }
        rle.counts.push_back(c.get<std::uint32_t>());
        total += rle.counts.back();
    }
    if (total != static_cast<std::uint64_t>(rle.height) * rle.width) {
        *problem = "rle counts do not cover the mask";
        return std::nullopt;
    }
    return rle;
}

}  // namespace

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& s) {
    if (s == "train") return Split::kTrain;
    if (s == "test") return Split::kTest;
    throw Error("unknown split '" + s + "'");
}

std::vector<TripletSample> DatasetManifest::subset(Split split) const {
    std::vector<TripletSample> out;
    for (const auto& s : samples) {
        if (s.split == split) out.push_back(s);
    }
    return out;
}

std::size_t DatasetManifest::count(Split split) const {
    return static_cast<std::size_t>(std::count_if(
        samples.begin(), samples.end(), [split](const TripletSample& s) { return s.split == split; }));
}

std::vector<RawVisualAnnotation> read_coco_instances(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
    const fs::path base = path.parent_path();
    struct ImageInfo {
        std::string uri;
        int height = 0;
        int width = 0;
    };
    std::map<long long, ImageInfo> images;
    std::map<long long, std::string> categories;
    for (const auto& im : doc.value("images", json::array())) {
        if (!im.contains("id")) continue;
        ImageInfo info;
        info.uri = resolve_uri(base, im.value("file_name", im.value("coco_url", std::string{})));
        info.height = im.value("height", 0);
        info.width = im.value("width", 0);
        images[im["id"].get<long long>()] = info;
    }
    for (const auto& c : doc.value("categories", json::array())) {
        if (c.contains("id")) categories[c["id"].get<long long>()] = c.value("name", std::string{});
    }
    std::vector<RawVisualAnnotation> out;
    for (const auto& ann : doc.value("annotations", json::array())) {
        RawVisualAnnotation raw;
        raw.instance_id = ann.contains("id") ? ann["id"].dump() : std::to_string(out.size());
        try {
            const auto img = images.find(ann.at("image_id").get<long long>());
            const auto cat = categories.find(ann.at("category_id").get<long long>());
            if (img == images.end()) {
                raw.malformed = true;
                raw.problem = "unknown image_id";
            } else if (cat == categories.end()) {
                raw.malformed = true;
                raw.problem = "unknown category_id";
            } else {
                raw.image_uri = img->second.uri;
                raw.height = img->second.height;
                raw.width = img->second.width;
                raw.label = cat->second;
                raw.mask = rle_from_json(ann.value("segmentation", json()), raw.height, raw.width,
                                         &raw.problem);
                if (!raw.mask) {
                    raw.malformed = true;
                } else {
                    raw.height = raw.mask->height;
                    raw.width = raw.mask->width;
                }
            }
        } catch (const json::exception& e) {
            raw.malformed = true;
            raw.problem = e.what();
        }
        out.push_back(std::move(raw));
    }
    return out;
}

std::vector<RawVisualAnnotation> read_openimages_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const fs::path base = path.parent_path();
    std::string line;
    if (!std::getline(in, line)) return {};
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) -> int {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };
    const int mask_col = column("MaskPath");
    const int image_col = column("ImageID");
    const int label_col = column("LabelName");
    const int path_col = column("ImagePath");
    if (mask_col < 0 || image_col < 0 || label_col < 0) {
        throw ParseError("Open Images CSV needs MaskPath, ImageID and LabelName columns", 1);
    }
    std::vector<RawVisualAnnotation> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        RawVisualAnnotation raw;
        raw.instance_id = std::to_string(lineno);
        const int needed = std::max({mask_col, image_col, label_col, path_col});
        if (static_cast<int>(f.size()) <= needed) {
            raw.malformed = true;
            raw.problem = "short row";
            out.push_back(std::move(raw));
            continue;
        }
        raw.label = f[label_col];
        raw.instance_id = f[mask_col];
        raw.image_uri = resolve_uri(base, path_col >= 0 && !f[path_col].empty()
                                              ? f[path_col]
                                              : f[image_col] + ".ppm");
        try {
            const BinaryMask m = media::read_mask_pgm(resolve_uri(base, f[mask_col]));
            raw.mask = rle_encode(m);
            raw.height = m.height();
            raw.width = m.width();
        } catch (const Error& e) {
            raw.malformed = true;
            raw.problem = e.what();
        }
        out.push_back(std::move(raw));
    }
    return out;
}

std::vector<RawAudioAnnotation> read_audio_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const fs::path base = path.parent_path();
    std::vector<RawAudioAnnotation> out;
    std::string line;
    std::size_t lineno = 0;
    int uri_col = -1, label_col = -1, dur_col = -1;
    bool headerless = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (uri_col < 0 && !headerless) {
            for (int i = 0; i < static_cast<int>(f.size()); ++i) {
                if (f[i] == "audio_uri" || f[i] == "path") uri_col = i;
                if (f[i] == "label") label_col = i;
                if (f[i] == "duration_s") dur_col = i;
            }
            if (uri_col >= 0 && label_col >= 0 && dur_col >= 0) continue;
            if (f.size() == 4) {
                headerless = true;
            } else {
                throw ParseError("audio CSV needs an audio_uri,label,duration_s header", lineno);
            }
        }
        RawAudioAnnotation raw;
        try {
            if (headerless) {
                if (f.size() != 4) throw std::invalid_argument("expected 4 VGGSound fields");
                std::ostringstream uri;
                uri << f[0] << '_' << std::setw(6) << std::setfill('0') << std::stoi(f[1]) << ".wav";
                raw.audio_uri = resolve_uri(base, uri.str());
                raw.label = f[2];
                raw.duration_s = 10.0;
            } else {
                const int needed = std::max({uri_col, label_col, dur_col});
                if (static_cast<int>(f.size()) <= needed) throw std::invalid_argument("short row");
                raw.audio_uri = resolve_uri(base, f[uri_col]);
                raw.label = f[label_col];
                raw.duration_s = std::stod(f[dur_col]);
            }
        } catch (const std::exception& e) {
            raw.malformed = true;
            raw.problem = e.what();
        }
        out.push_back(std::move(raw));
    }
    return out;
}

std::vector<RawVisualAnnotation> read_visual_source(const fs::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".json") return read_coco_instances(path);
    if (ext == ".csv") return read_openimages_csv(path);
    throw Error("no visual adapter for '" + ext + "' files: " + path.string());
}

std::vector<ImageMaskRecord> collect_visual(const std::vector<RawVisualAnnotation>& raw,
                                            const std::string& dataset,
                                            const ontology::AliasTable& table,
                                            CollectStats* stats) {
    CollectStats local;
    std::vector<ImageMaskRecord> out;
    for (const auto& r : raw) {
        ++local.seen;
        if (r.malformed || !r.mask || r.mask->height <= 0 || r.mask->width <= 0) {
            ++local.malformed;
            continue;
        }
        const auto canonical = table.resolve(dataset, r.label);
        if (!canonical) {
            ++local.unresolved;
            continue;
        }
        out.push_back({dataset + ":" + r.instance_id, r.image_uri, *r.mask, dataset, r.label,
                       *canonical, r.mask->height, r.mask->width});
        ++local.kept;
    }
    if (stats) *stats = local;
    return out;
}

std::vector<AudioClipRecord> collect_audio(const std::vector<RawAudioAnnotation>& raw,
                                           const std::string& dataset,
                                           const ontology::AliasTable& table,
                                           CollectStats* stats) {
    CollectStats local;
    std::vector<AudioClipRecord> out;
    for (const auto& r : raw) {
        ++local.seen;
        if (r.malformed || !(r.duration_s > 0.0) || !std::isfinite(r.duration_s)) {
            ++local.malformed;
            continue;
        }
        const auto canonical = table.resolve(dataset, r.label);
        if (!canonical) {
            ++local.unresolved;
            continue;
        }
        out.push_back({r.audio_uri, dataset, r.label, *canonical, r.duration_s});
        ++local.kept;
    }
    if (stats) *stats = local;
    return out;
}

std::vector<TripletSample> compose_triplets(std::vector<ImageMaskRecord> visual,
                                            std::vector<AudioClipRecord> audio,
                                            std::uint64_t seed) {
    // Sorting makes the result independent of collection order.
    std::sort(visual.begin(), visual.end(), [](const auto& a, const auto& b) {
        return a.instance_id < b.instance_id;
    });
    std::sort(audio.begin(), audio.end(), [](const auto& a, const auto& b) {
        return std::tie(a.canonical_class, a.audio_uri, a.source_dataset) <
               std::tie(b.canonical_class, b.audio_uri, b.source_dataset);
    });
    std::map<std::string, std::vector<const AudioClipRecord*>> by_class;
    for (const auto& a : audio) by_class[a.canonical_class].push_back(&a);

    nn::Rng rng(seed);
    std::vector<TripletSample> out;
    for (const auto& v : visual) {
        const auto it = by_class.find(v.canonical_class);
        if (it == by_class.end()) continue;
        const auto* partner = it->second[rng.index(it->second.size())];
        out.push_back({v.instance_id, v.image_uri, v.mask, partner->audio_uri, v.canonical_class,
                       Split::kTrain});
    }
    if (out.empty()) throw EmptyJoin("no canonical class has both visual and audio records");
    return out;
}

DatasetManifest split_manifest(std::vector<TripletSample> samples, double test_fraction,
                               std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error("test fraction must lie in (0, 1)");
    }
    DatasetManifest manifest;
    manifest.seed = seed;
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].canonical_class].push_back(i);

    nn::Rng rng(seed);
    for (auto& [cls, idx] : by_class) {
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return samples[a].id < samples[b].id; });
        for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
        const std::size_t n = idx.size();
        std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
        n_test = std::min(n_test, n - 1);
        for (std::size_t k = 0; k < n; ++k) {
            samples[idx[k]].split = k < n_test ? Split::kTest : Split::kTrain;
        }
        manifest.class_counts[cls] = n;
    }
    manifest.samples = std::move(samples);
    return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest " + path.string());
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    ojson header;
    header["version"] = 1;
    header["seed"] = manifest.seed;
    header["class_counts"] = ojson::object();
    for (const auto& [cls, n] : manifest.class_counts) header["class_counts"][cls] = n;
    out << header.dump() << '\n';
    std::set<std::string> ids;
    for (const auto& s : manifest.samples) {
        if (!ids.insert(s.id).second) throw Error("duplicate sample id '" + s.id + "'");
        ojson rec;
        rec["id"] = s.id;
        rec["image_uri"] = relativize_uri(base, s.image_uri);
        rec["mask"] = {{"size", {s.mask.height, s.mask.width}}, {"counts", s.mask.counts}};
        rec["audio_uri"] = relativize_uri(base, s.audio_uri);
        rec["class"] = s.canonical_class;
        rec["split"] = split_name(s.split);
        out << rec.dump() << '\n';
    }
}

DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    DatasetManifest manifest;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
            if (!have_header) {
                if (obj.value("version", 0) != 1) throw ParseError("unsupported manifest version", lineno);
                manifest.seed = obj.value("seed", std::uint64_t{0});
                const json counts = obj.value("class_counts", json::object());
                for (const auto& [cls, n] : counts.items()) {
                    manifest.class_counts[cls] = n.get<std::size_t>();
                }
                have_header = true;
                continue;
            }
            TripletSample s;
            s.id = obj.at("id").get<std::string>();
            s.image_uri = resolve_uri(base, obj.at("image_uri").get<std::string>());
            s.audio_uri = resolve_uri(base, obj.at("audio_uri").get<std::string>());
            s.canonical_class = obj.at("class").get<std::string>();
            s.split = parse_split(obj.at("split").get<std::string>());
            const auto& m = obj.at("mask");
            s.mask.height = m.at("size").at(0).get<int>();
            s.mask.width = m.at("size").at(1).get<int>();
            s.mask.counts = m.at("counts").get<std::vector<std::uint32_t>>();
            manifest.samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ": " + e.what(), lineno);
        }
    }
    if (!have_header) throw ParseError("manifest has no header line: " + path.string(), 0);
    return manifest;
}

SourceSpec parse_source_spec(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq != std::string::npos && eq > 0) return {arg.substr(0, eq), fs::path(arg.substr(eq + 1))};
    fs::path p(arg);
    return {p.stem().string(), p};
}

SynthesisReport synthesize(const std::vector<SourceSpec>& visual_sources,
                           const std::vector<SourceSpec>& audio_sources,
                           const ontology::AliasTable& table, double test_fraction,
                           std::uint64_t seed) {
    SynthesisReport report;
    std::vector<ImageMaskRecord> visual;
    for (const auto& src : visual_sources) {
        CollectStats st;
        auto recs = collect_visual(read_visual_source(src.path), src.dataset, table, &st);
        visual.insert(visual.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
        report.visual.seen += st.seen;
        report.visual.kept += st.kept;
        report.visual.unresolved += st.unresolved;
        report.visual.malformed += st.malformed;
    }
    std::vector<AudioClipRecord> audio;
    for (const auto& src : audio_sources) {
        CollectStats st;
        auto recs = collect_audio(read_audio_csv(src.path), src.dataset, table, &st);
        audio.insert(audio.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
        report.audio.seen += st.seen;
        report.audio.kept += st.kept;
        report.audio.unresolved += st.unresolved;
        report.audio.malformed += st.malformed;
    }
    report.manifest = split_manifest(compose_triplets(std::move(visual), std::move(audio), seed),
                                     test_fraction, seed);
    return report;
}

}  // namespace avs::synthesis
