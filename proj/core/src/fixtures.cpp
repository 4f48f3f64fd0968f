#include "avs/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <set>

#include "avs/errors.hpp"
#include "avs/media_io.hpp"

namespace avs::fixtures {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Placed {
    std::size_t cls = 0;
    double cx = 0.0, cy = 0.0, r = 0.0;
};

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    std::array<double, 3> rgb{};
    switch (static_cast<int>(hp) % 6) {
        case 0: rgb = {c, x, 0}; break;
        case 1: rgb = {x, c, 0}; break;
        case 2: rgb = {0, c, x}; break;
        case 3: rgb = {0, x, c}; break;
        case 4: rgb = {x, 0, c}; break;
        default: rgb = {c, 0, x}; break;
    }
    for (double& ch : rgb) ch = 255.0 * (ch + v - c);
    return rgb;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

std::string audio_label(const std::string& cls) { return cls + "-sound"; }

std::vector<Placed> place_objects(const FixtureSpec& spec, nn::Rng& rng) {
    const int want = spec.min_instances +
                     static_cast<int>(rng.index(static_cast<std::size_t>(spec.max_instances - spec.min_instances + 1)));
    std::vector<std::size_t> order(spec.classes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    const double side = spec.canvas;
    std::vector<Placed> placed;
    for (int k = 0; k < want; ++k) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            Placed p;
            p.cls = order[static_cast<std::size_t>(k)];
            p.r = side * rng.uniform(spec.min_radius, spec.max_radius);
            p.cx = rng.uniform(p.r + 1.0, side - p.r - 1.0);
            p.cy = rng.uniform(p.r + 1.0, side - p.r - 1.0);
            const bool clear = std::all_of(placed.begin(), placed.end(), [&](const Placed& q) {
                return std::hypot(p.cx - q.cx, p.cy - q.cy) > p.r + q.r + 2.0;
            });
            if (clear) {
                placed.push_back(p);
                break;
            }
        }
    }
    if (static_cast<int>(placed.size()) < spec.min_instances) {
        throw ConfigError("fixture canvas too small to place " + std::to_string(spec.min_instances) + " objects");
    }
    return placed;
}

struct Rendered {
    media::RgbImage image;
    std::vector<BinaryMask> masks;
};

Rendered render(const FixtureSpec& spec, const std::vector<Placed>& objects, nn::Rng& rng) {
    const int n = spec.canvas;
    std::vector<double> px(static_cast<std::size_t>(n) * n * 3);
    const bool real = spec.style == RenderStyle::kReal;
    if (real) {
        const auto c0 = hsv_to_rgb(rng.uniform(), rng.uniform(0.2, 0.5), rng.uniform(0.3, 0.6));
        const auto c1 = hsv_to_rgb(rng.uniform(), rng.uniform(0.2, 0.5), rng.uniform(0.3, 0.6));
        const double angle = rng.uniform(0.0, 2.0 * kPi);
        const double freq = rng.uniform(0.15, 0.45);
        const double phase = rng.uniform(0.0, 2.0 * kPi);
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                const double u = (x * std::cos(angle) + y * std::sin(angle)) / n;
                const double tex = 18.0 * std::sin(freq * (x - y) + phase) * std::cos(0.6 * freq * (x + y));
                for (int ch = 0; ch < 3; ++ch) {
                    px[(static_cast<std::size_t>(y) * n + x) * 3 + ch] =
                        (1.0 - u) * c0[ch] + u * c1[ch] + tex + 10.0 * rng.normal();
                }
            }
        }
    } else {
        const double base = rng.uniform(30.0, 90.0);
        for (double& v : px) v = base + 3.0 * rng.normal();
    }

    Rendered out;
    for (const auto& o : objects) {
        const FixtureClass& cls = spec.classes[o.cls];
        const Shape shape = cls.shape;
        double hue = rng.uniform();
        if (cls.hue >= 0.0) hue = std::fmod(cls.hue + spec.hue_jitter * (2.0 * hue - 1.0) + 1.0, 1.0);
        const auto color = hsv_to_rgb(hue, rng.uniform(0.5, 1.0), rng.uniform(0.75, 1.0));
        const double shade_angle = rng.uniform(0.0, 2.0 * kPi);
        BinaryMask mask(n, n);
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                if (!inside_shape(shape, o.cx, o.cy, o.r, x, y)) continue;
                mask.set(y, x, true);
                double gain = 1.0;
                if (real) {
                    const double d = ((x + 0.5 - o.cx) * std::cos(shade_angle) + (y + 0.5 - o.cy) * std::sin(shade_angle)) / o.r;
                    gain = 1.0 + 0.3 * d;
                }
                for (int ch = 0; ch < 3; ++ch) {
                    px[(static_cast<std::size_t>(y) * n + x) * 3 + ch] =
                        gain * color[ch] + (real ? 8.0 : 2.0) * rng.normal();
                }
            }
        }
        out.masks.push_back(std::move(mask));
    }
    out.image.height = n;
    out.image.width = n;
    out.image.rgb.resize(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) out.image.rgb[i] = to_byte(px[i]);
    return out;
}

const char* shape_name(Shape s) {
    switch (s) {
        case Shape::kDisk: return "disk";
        case Shape::kSquare: return "square";
        case Shape::kTriangle: return "triangle";
        case Shape::kCross: return "cross";
        case Shape::kRing: return "ring";
    }
    return "?";
}

}  // namespace

void FixtureSpec::validate() const {
    if (canvas < 32 || canvas % 32 != 0) throw ConfigError("fixture canvas must be a positive multiple of 32");
    if (classes.empty()) throw ConfigError("fixture spec has no classes");
    std::set<std::string> names;
    std::set<std::pair<int, long long>> used;
    for (const auto& c : classes) {
        if (!names.insert(c.name).second) throw ConfigError("duplicate fixture class '" + c.name + "'");
        if (!(c.hue < 1.0)) throw ConfigError("fixture class '" + c.name + "' hue must be below 1");
        const auto it = signatures.find(c.name);
        if (it == signatures.end()) throw ConfigError("fixture class '" + c.name + "' has no audio signature");
        const auto key = std::make_pair(static_cast<int>(it->second.kind), std::llround(it->second.base_hz * 1000.0));
        if (!used.insert(key).second) throw ConfigError("fixture class '" + c.name + "' reuses another class's signature");
    }
    for (const auto& [name, sig] : signatures) {
        if (!names.count(name)) throw ConfigError("audio signature for unknown class '" + name + "'");
        if (!(sig.base_hz > 0.0)) throw ConfigError("signature frequency must be positive");
    }
    if (min_instances < 1 || max_instances < min_instances) throw ConfigError("bad instance range");
    if (!(hue_jitter >= 0.0 && hue_jitter < 0.5)) throw ConfigError("hue jitter must be in [0, 0.5)");
    if (max_instances > static_cast<int>(classes.size())) {
        throw ConfigError("instances per image cannot exceed the number of classes");
    }
    if (!(min_radius > 0.0 && max_radius >= min_radius && max_radius < 0.5)) throw ConfigError("bad radius range");
    if (clips_per_class < 1 || !(clip_seconds >= 0.1) || sample_rate_hz < 8000) {
        throw ConfigError("bad audio fixture settings");
    }
}

FixtureSpec default_spec() {
    FixtureSpec s;
    s.classes = {{"disk", Shape::kDisk, 0.0}, {"square", Shape::kSquare, 0.33},
                 {"triangle", Shape::kTriangle, 0.62}, {"cross", Shape::kCross, 0.15}};
    s.signatures = {{"disk", {SignatureKind::kTone, 660.0}},
                    {"square", {SignatureKind::kBuzz, 180.0}},
                    {"triangle", {SignatureKind::kPulse, 1200.0}},
                    {"cross", {SignatureKind::kNoise, 1.0}}};
    return s;
}

void randomize_colors(FixtureSpec& spec) {
    for (auto& c : spec.classes) c.hue = -1.0;
}

FixtureSpec two_object_spec() {
    FixtureSpec s = default_spec();
    s.min_instances = 2;
    s.max_instances = 2;
    return s;
}

Shape parse_shape(const std::string& s) {
    for (Shape v : {Shape::kDisk, Shape::kSquare, Shape::kTriangle, Shape::kCross, Shape::kRing}) {
        if (s == shape_name(v)) return v;
    }
    throw ConfigError("unknown shape '" + s + "'");
}

SignatureKind parse_signature_kind(const std::string& s) {
    if (s == "tone") return SignatureKind::kTone;
    if (s == "buzz") return SignatureKind::kBuzz;
    if (s == "pulse") return SignatureKind::kPulse;
    if (s == "noise") return SignatureKind::kNoise;
    if (s == "chirp") return SignatureKind::kChirp;
    throw ConfigError("unknown signature kind '" + s + "'");
}

RenderStyle parse_style(const std::string& s) {
    if (s == "synthetic") return RenderStyle::kSynthetic;
    if (s == "real") return RenderStyle::kReal;
    throw ConfigError("unknown render style '" + s + "'");
}

const char* style_name(RenderStyle s) { return s == RenderStyle::kReal ? "real" : "synthetic"; }

bool inside_shape(Shape shape, double cx, double cy, double r, int x, int y) {
    const double dx = x + 0.5 - cx;
    const double dy = y + 0.5 - cy;
    switch (shape) {
        case Shape::kDisk:
            return dx * dx + dy * dy <= r * r;
        case Shape::kSquare: {
            const double h = 0.8 * r;
            return std::fabs(dx) <= h && std::fabs(dy) <= h;
        }
        case Shape::kTriangle: {
            // Upward equilateral triangle with circumradius r.
            const double top = -r, bottom = 0.5 * r;
            if (dy < top || dy > bottom) return false;
            const double half_width = (dy - top) / (bottom - top) * r * std::sqrt(3.0) / 2.0;
            return std::fabs(dx) <= half_width;
        }
        case Shape::kCross: {
            const double arm = r / 3.0;
            return (std::fabs(dx) <= r && std::fabs(dy) <= arm) || (std::fabs(dx) <= arm && std::fabs(dy) <= r);
        }
        case Shape::kRing: {
            const double d2 = dx * dx + dy * dy;
            return d2 <= r * r && d2 >= 0.25 * r * r;
        }
    }
    return false;
}

std::vector<double> synthesize_signature(const AudioSignature& sig, double seconds, int sample_rate_hz,
                                         nn::Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(std::llround(seconds * sample_rate_hz));
    const double f = sig.base_hz * rng.uniform(0.97, 1.03);
    const double amp = rng.uniform(0.4, 0.7);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    std::vector<double> out(n);
    double acc = phase;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate_hz;
        double v = 0.0;
        switch (sig.kind) {
            case SignatureKind::kTone:
                v = std::sin(2.0 * kPi * f * t + phase);
                break;
            case SignatureKind::kBuzz:
                for (int k = 1; k <= 8; ++k) v += std::sin(2.0 * kPi * k * f * t + k * phase) / k;
                v *= 0.6;
                break;
            case SignatureKind::kPulse:
                v = std::fmod(t * 6.0, 1.0) < 0.5 ? std::sin(2.0 * kPi * f * t + phase) : 0.0;
                break;
            case SignatureKind::kNoise:
                v = 0.5 * rng.normal();
                break;
            case SignatureKind::kChirp: {
                const double inst = f * (1.0 + 3.0 * t / seconds);
                acc += 2.0 * kPi * inst / sample_rate_hz;
                v = std::sin(acc);
                break;
            }
        }
        out[i] = std::clamp(amp * v + 0.01 * rng.normal(), -1.0, 1.0);
    }
    return out;
}

FixtureOutput generate_fixtures(const FixtureSpec& spec, int n, std::uint64_t seed, const fs::path& out_dir) {
    spec.validate();
    if (n < 1) throw ConfigError("fixture count must be at least 1");
    fs::create_directories(out_dir / "images");
    fs::create_directories(out_dir / "audio");
    nn::Rng rng(seed);

    using ojson = nlohmann::ordered_json;
    ojson coco;
    coco["images"] = ojson::array();
    coco["annotations"] = ojson::array();
    coco["categories"] = ojson::array();
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        coco["categories"].push_back({{"id", c + 1}, {"name", spec.classes[c].name}});
    }

    FixtureOutput out;
    long long ann_id = 1;
    for (int i = 0; i < n; ++i) {
        const auto objects = place_objects(spec, rng);
        const Rendered r = render(spec, objects, rng);
        char name[32];
        std::snprintf(name, sizeof name, "img_%05d.ppm", i);
        media::write_ppm(out_dir / "images" / name, r.image);
        coco["images"].push_back({{"id", i + 1},
                                  {"file_name", std::string("images/") + name},
                                  {"height", spec.canvas},
                                  {"width", spec.canvas}});
        for (std::size_t k = 0; k < objects.size(); ++k) {
            const MaskRLE rle = rle_encode(r.masks[k]);
            coco["annotations"].push_back({{"id", ann_id++},
                                           {"image_id", i + 1},
                                           {"category_id", objects[k].cls + 1},
                                           {"segmentation", {{"size", {rle.height, rle.width}}, {"counts", rle.counts}}},
                                           {"iscrowd", 0}});
            ++out.instances;
        }
        ++out.images;
    }
    out.visual_annotations = out_dir / "instances.json";
    {
        std::ofstream f(out.visual_annotations);
        f << coco.dump(1) << '\n';
        if (!f) throw IoError("cannot write " + out.visual_annotations.string());
    }

    out.audio_annotations = out_dir / "audio.csv";
    {
        std::ofstream f(out.audio_annotations);
        f << "audio_uri,label,duration_s\n";
        for (const auto& c : spec.classes) {
            const AudioSignature& sig = spec.signatures.at(c.name);
            for (int k = 0; k < spec.clips_per_class; ++k) {
                const auto wave = synthesize_signature(sig, spec.clip_seconds, spec.sample_rate_hz, rng);
                char name[96];
                std::snprintf(name, sizeof name, "%s_%02d.wav", c.name.c_str(), k);
                media::write_wav(out_dir / "audio" / name, wave, spec.sample_rate_hz);
                f << "audio/" << name << ',' << audio_label(c.name) << ',' << spec.clip_seconds << '\n';
                ++out.clips;
            }
        }
        if (!f) throw IoError("cannot write " + out.audio_annotations.string());
    }

    out.alias_table = out_dir / "aliases.tsv";
    {
        std::ofstream f(out.alias_table);
        f << "# canonical\tdataset\tlabel\n";
        for (const auto& c : spec.classes) {
            f << c.name << '\t' << spec.visual_dataset << '\t' << c.name << '\n';
            f << c.name << '\t' << spec.audio_dataset << '\t' << audio_label(c.name) << '\n';
        }
    }
    return out;
}

}  // namespace avs::fixtures
