#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <json.hpp>

#include "avs/errors.hpp"
#include "avs/fixtures.hpp"
#include "avs/media_io.hpp"
#include "avs/synthesis.hpp"

using namespace avs;
using namespace avs::fixtures;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::path(testing::TempDir()) / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return out;
}

}  // namespace

TEST(Fixtures, ByteIdenticalForSameSeed) {
    const auto spec = default_spec();
    const auto a = fresh_dir("fx_a"), b = fresh_dir("fx_b"), c = fresh_dir("fx_c");
    generate_fixtures(spec, 6, 42, a);
    generate_fixtures(spec, 6, 42, b);
    generate_fixtures(spec, 6, 43, c);
    const auto ta = tree(a);
    EXPECT_EQ(ta, tree(b));
    EXPECT_NE(ta.at("images/img_00000.ppm"), tree(c).at("images/img_00000.ppm"));
}

TEST(Fixtures, CountsAndAnnotations) {
    auto spec = default_spec();
    spec.clips_per_class = 2;
    const auto dir = fresh_dir("fx_counts");
    const auto out = generate_fixtures(spec, 10, 1, dir);
    EXPECT_EQ(out.images, 10u);
    EXPECT_EQ(out.clips, 8u);
    EXPECT_GE(out.instances, 10u);
    EXPECT_LE(out.instances, 30u);

    const auto coco = nlohmann::json::parse(slurp(out.visual_annotations));
    EXPECT_EQ(coco["images"].size(), 10u);
    EXPECT_EQ(coco["annotations"].size(), out.instances);
    const auto raw = synthesis::read_visual_source(out.visual_annotations);
    for (const auto& r : raw) {
        ASSERT_FALSE(r.malformed) << r.problem;
        EXPECT_GT(rle_decode(*r.mask).count(), 0u);
        EXPECT_TRUE(fs::exists(r.image_uri));
    }
    const auto img = media::read_ppm(raw.front().image_uri);
    EXPECT_EQ(img.height, spec.canvas);
    EXPECT_EQ(img.width, spec.canvas);
}

TEST(Fixtures, ObjectsDoNotOverlap) {
    auto spec = two_object_spec();
    const auto dir = fresh_dir("fx_two");
    const auto out = generate_fixtures(spec, 8, 2, dir);
    EXPECT_EQ(out.instances, 16u);
    const auto raw = synthesis::read_visual_source(out.visual_annotations);
    for (std::size_t i = 0; i + 1 < raw.size(); i += 2) {
        ASSERT_EQ(raw[i].image_uri, raw[i + 1].image_uri);
        EXPECT_NE(raw[i].label, raw[i + 1].label);
        const auto a = rle_decode(*raw[i].mask), b = rle_decode(*raw[i + 1].mask);
        for (std::size_t k = 0; k < a.area(); ++k) ASSERT_FALSE(a.bits()[k] && b.bits()[k]);
    }
}

TEST(Fixtures, SynthesizeEndToEnd) {
    const auto dir = fresh_dir("fx_synth");
    const auto out = generate_fixtures(default_spec(), 12, 3, dir);
    const auto table = ontology::load_alias_table(out.alias_table);
    const auto rep = synthesis::synthesize({{"shapes", out.visual_annotations}}, {{"tones", out.audio_annotations}},
                                           table, 0.25, 3);
    EXPECT_EQ(rep.manifest.samples.size(), out.instances);
    EXPECT_EQ(rep.visual.unresolved + rep.visual.malformed, 0u);
    EXPECT_EQ(rep.audio.kept, out.clips);
    for (const auto& s : rep.manifest.samples) {
        EXPECT_NE(s.audio_uri.find(s.canonical_class + "_"), std::string::npos) << s.audio_uri;
    }
}

TEST(Fixtures, SpecValidation) {
    auto missing = default_spec();
    missing.signatures.erase("cross");
    EXPECT_THROW(missing.validate(), ConfigError);

    auto shared = default_spec();
    shared.signatures["cross"] = shared.signatures["disk"];
    EXPECT_THROW(shared.validate(), ConfigError);

    auto stray = default_spec();
    stray.signatures["ring"] = {SignatureKind::kChirp, 300.0};
    EXPECT_THROW(stray.validate(), ConfigError);

    auto canvas = default_spec();
    canvas.canvas = 48;
    EXPECT_THROW(canvas.validate(), ConfigError);

    auto hue = default_spec();
    hue.classes[0].hue = 1.0;
    EXPECT_THROW(hue.validate(), ConfigError);

    auto crowd = default_spec();
    crowd.max_instances = 5;
    EXPECT_THROW(crowd.validate(), ConfigError);

    EXPECT_NO_THROW(default_spec().validate());
    EXPECT_THROW(generate_fixtures(default_spec(), 0, 0, fresh_dir("fx_zero")), ConfigError);
}

TEST(Fixtures, RandomColorsClearHues) {
    auto spec = default_spec();
    randomize_colors(spec);
    for (const auto& c : spec.classes) EXPECT_LT(c.hue, 0.0);
    EXPECT_NO_THROW(spec.validate());
}

TEST(Shapes, InsideTests) {
    EXPECT_TRUE(inside_shape(Shape::kDisk, 10, 10, 5, 9, 9));
    EXPECT_FALSE(inside_shape(Shape::kDisk, 10, 10, 5, 14, 14));
    EXPECT_TRUE(inside_shape(Shape::kSquare, 10, 10, 5, 13, 13));
    EXPECT_FALSE(inside_shape(Shape::kRing, 10, 10, 5, 9, 9));
    EXPECT_TRUE(inside_shape(Shape::kRing, 10, 10, 5, 13, 9));
    EXPECT_TRUE(inside_shape(Shape::kCross, 10, 10, 6, 14, 9));
    EXPECT_FALSE(inside_shape(Shape::kCross, 10, 10, 6, 14, 14));
    EXPECT_FALSE(inside_shape(Shape::kTriangle, 10, 10, 6, 5, 5));
    EXPECT_EQ(parse_shape("triangle"), Shape::kTriangle);
    EXPECT_THROW(parse_shape("hexagon"), ConfigError);
    EXPECT_EQ(parse_style("real"), RenderStyle::kReal);
    EXPECT_STREQ(style_name(RenderStyle::kSynthetic), "synthetic");
}

TEST(Media, RoundTrips) {
    const auto dir = fresh_dir("media");
    fs::create_directories(dir);
    media::RgbImage img{2, 3, {0, 1, 2, 3, 4, 5, 250, 251, 252, 9, 8, 7, 100, 101, 102, 255, 0, 128}};
    media::write_ppm(dir / "x.ppm", img);
    const auto back = media::read_ppm(dir / "x.ppm");
    EXPECT_EQ(back.rgb, img.rgb);
    EXPECT_EQ(back.width, 3);

    const BinaryMask m(2, 3, {1, 0, 1, 0, 1, 1});
    media::write_mask_pgm(dir / "m.pgm", m);
    EXPECT_EQ(media::read_mask_pgm(dir / "m.pgm"), m);

    const std::vector<double> wave{0.0, 0.5, -0.5, 0.999, -1.0};
    media::write_wav(dir / "w.wav", wave, 16000);
    int rate = 0;
    const auto w = media::read_wav(dir / "w.wav", &rate);
    EXPECT_EQ(rate, 16000);
    ASSERT_EQ(w.size(), wave.size());
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], wave[i], 2.0 / 32768);  // write scale 32767, read scale 32768

    const auto clip = media::to_frame_clip(img);
    EXPECT_EQ(clip.frames(), 1);
    for (double v : clip.pixels().data()) {
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_THROW(media::read_ppm(dir / "missing.ppm"), IoError);
}

TEST(Signatures, ClassesAreSpectrallyDistinct) {
    const auto spec = default_spec();
    nn::Rng rng(1);
    for (const auto& [name, sig] : spec.signatures) {
        const auto w = synthesize_signature(sig, 0.5, 16000, rng);
        EXPECT_EQ(w.size(), 8000u) << name;
        for (double v : w) ASSERT_LE(std::abs(v), 1.0);
    }
}
