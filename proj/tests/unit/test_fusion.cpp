#include <gtest/gtest.h>

#include <random>
#include <set>

#include "avs/encoders.hpp"
#include "avs/errors.hpp"
#include "avs/fusion.hpp"

using namespace avs;
using namespace avs::fusion;

namespace {

std::vector<double> randn(std::mt19937& gen, std::size_t n) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(gen);
    return v;
}

// Pyramid of random features with the given spatial sizes per level.
encoders::FeaturePyramid random_pyramid(std::mt19937& gen, int frames, std::array<int, 3> channels,
                                        std::array<int, 3> sides) {
    encoders::FeaturePyramid p;
    for (int l = 0; l < 3; ++l) {
        std::vector<int> shape{frames, channels[l], sides[l], sides[l]};
        p.levels[l] = Tensor(shape, randn(gen, shape_volume(shape)));
    }
    return p;
}

encoders::AudioEmbedding random_audio(std::mt19937& gen, int frames, int width) {
    return {Tensor({frames, width}, randn(gen, static_cast<std::size_t>(frames) * width))};
}

void zero(ag::Var& v) {
    for (auto& x : v.mutable_value()) x = 0.0;
}

std::vector<double> values(const ag::Var& v) { return {v.value().begin(), v.value().end()}; }

}  // namespace

TEST(Avff, ZeroOutputProjectionIsResidualIdentity) {
    std::mt19937 gen(1);
    nn::Rng rng(1);
    Avff avff({4, 6, 8}, 5, 12, 2, rng);
    for (int l = 0; l < 3; ++l) {
        zero(avff.attention(l).output_projection().weight());
        zero(avff.attention(l).output_projection().bias());
    }
    const auto pyr = random_pyramid(gen, 2, {4, 6, 8}, {4, 2, 1});
    const auto fused = avff.forward(pyr, random_audio(gen, 2, 5));
    for (int l = 0; l < 3; ++l) {
        for (int t = 0; t < 2; ++t) {
            EXPECT_EQ(values(fused.levels[l][t]), values(avff.project_visual(pyr, l, t)));
        }
    }
}

TEST(Avff, SingleAudioTokenGetsFullAttention) {
    std::mt19937 gen(2);
    nn::Rng rng(2);
    nn::MultiHeadAttention attn(8, 8, 8, 2, rng);
    const auto w = attn.attention_weights(ag::Var::constant(5, 8, randn(gen, 40)),
                                          ag::Var::constant(1, 8, randn(gen, 8)));
    ASSERT_EQ(w.size(), 5u);
    for (double x : w) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(Avff, AudioChangesOutputAndShapesHold) {
    std::mt19937 gen(3);
    nn::Rng rng(3);
    Avff avff({4, 6, 8}, 5, 12, 2, rng);
    const auto pyr = random_pyramid(gen, 2, {4, 6, 8}, {4, 2, 1});
    const auto a = avff.forward(pyr, random_audio(gen, 2, 5));
    const auto b = avff.forward(pyr, random_audio(gen, 2, 5));
    EXPECT_EQ(a.frames(), 2);
    EXPECT_EQ(a.width(), 12);
    EXPECT_EQ(a.token_count(), 2u * (16 + 4 + 1));
    EXPECT_EQ(a.sizes[1], std::make_pair(2, 2));
    EXPECT_NE(values(a.levels[0][0]), values(b.levels[0][0]));
    EXPECT_THROW(avff.forward(pyr, random_audio(gen, 3, 5)), ShapeError);
}

TEST(Sinusoid, BoundedAndTemporalSwitch) {
    const auto on = sinusoid_features(3, 0.25, 0.75, 8, true);
    const auto off = sinusoid_features(3, 0.25, 0.75, 8, false);
    ASSERT_EQ(on.size(), 24u);
    for (double v : on) {
        EXPECT_LE(v, 1.0);
        EXPECT_GE(v, -1.0);
    }
    for (int i = 0; i < 8; ++i) EXPECT_EQ(off[i], 0.0);
    for (int i = 8; i < 24; ++i) EXPECT_EQ(off[i], on[i]);
    EXPECT_NE(sinusoid_features(0, 0.1, 0.2, 8, true), sinusoid_features(0, 0.2, 0.1, 8, true));
}

TEST(Encoder, NoLayersAddsOnlyPositions) {
    std::mt19937 gen(4);
    nn::Rng rng(4);
    Avff avff({4, 6, 8}, 5, 12, 2, rng);
    const auto fused = avff.forward(random_pyramid(gen, 2, {4, 6, 8}, {4, 2, 1}), random_audio(gen, 2, 5));
    MultimodalEncoder enc(12, 2, 24, 0, true, rng);
    const auto out = enc.forward(fused);
    const auto pos = enc.positional_encoding(fused);
    const auto flat = fused.flatten();
    const auto got = out.flatten();
    ASSERT_EQ(got.rows(), static_cast<int>(fused.token_count()));
    for (int r = 0; r < got.rows(); ++r)
        for (int c = 0; c < 12; ++c) ASSERT_NEAR(got.at(r, c), flat.at(r, c) + pos.at(r, c), 1e-12);
}

TEST(Encoder, PreservesLayoutAndMixesTokens) {
    std::mt19937 gen(5);
    nn::Rng rng(5);
    Avff avff({4, 6, 8}, 5, 12, 2, rng);
    const auto fused = avff.forward(random_pyramid(gen, 2, {4, 6, 8}, {4, 2, 1}), random_audio(gen, 2, 5));
    MultimodalEncoder enc(12, 2, 24, 1, true, rng);
    const auto out = enc.forward(fused);
    for (int l = 0; l < 3; ++l) {
        ASSERT_EQ(out.levels[l].size(), 2u);
        EXPECT_EQ(out.levels[l][0].rows(), fused.levels[l][0].rows());
    }
    // Perturbing one coarse token moves a fine token of the other frame.
    auto moved = fused;
    moved.levels[2][1] = ag::scale(fused.levels[2][1], 3.0);
    EXPECT_NE(values(enc.forward(moved).levels[0][0]), values(out.levels[0][0]));
}

TEST(Encoder, TokenCountAt224) {
    const FrameClip clip(1, 224, 224, std::vector<double>(3 * 224 * 224, 0.1));
    const encoders::ToyVisualBackbone backbone(1, {4, 4, 4, 4});
    const auto pyr = encoders::encode_visual(clip, backbone);
    EXPECT_EQ(pyr.levels[0].dim(2), 28);
    EXPECT_EQ(pyr.levels[1].dim(2), 14);
    EXPECT_EQ(pyr.levels[2].dim(2), 7);
    nn::Rng rng(6);
    Avff avff({4, 4, 4}, 3, 8, 2, rng);
    std::mt19937 gen(6);
    const auto fused = avff.forward(pyr, random_audio(gen, 1, 3));
    EXPECT_EQ(fused.token_count(), 1029u);
    MultimodalEncoder enc(8, 2, 16, 1, true, rng);
    EXPECT_EQ(enc.forward(fused).token_count(), 1029u);
}

TEST(QueryBank, AudioInitDependsOnAudio) {
    std::mt19937 gen(7);
    nn::Rng rng(7);
    QueryBank bank(4, 5, 8, QueryInit::kAudio, rng);
    const auto a = bank.initial_queries(random_audio(gen, 2, 5));
    const auto b = bank.initial_queries(random_audio(gen, 2, 5));
    EXPECT_EQ(a.rows(), 4);
    EXPECT_EQ(a.cols(), 8);
    EXPECT_NE(values(a), values(b));
    // Queries differ only through their position embeddings.
    for (int c = 0; c < 8; ++c) {
        EXPECT_NEAR(a.at(1, c) - a.at(0, c),
                    bank.position_embeddings().at(1, c) - bank.position_embeddings().at(0, c), 1e-12);
    }
}

TEST(QueryBank, ConstantInitIgnoresAudio) {
    std::mt19937 gen(8);
    nn::Rng rng(8);
    QueryBank bank(3, 5, 8, QueryInit::kConstant, rng);
    EXPECT_EQ(values(bank.initial_queries(random_audio(gen, 1, 5))),
              values(bank.initial_queries(random_audio(gen, 1, 5))));
    nn::Rng rng2(8);
    EXPECT_THROW(QueryBank(0, 5, 8, QueryInit::kAudio, rng2), ConfigError);
}

TEST(Decoder, NoLayersIsIdentityAndLayersUseMemory) {
    std::mt19937 gen(9);
    nn::Rng rng(9);
    Avff avff({4, 6, 8}, 5, 12, 2, rng);
    const auto pyr = random_pyramid(gen, 1, {4, 6, 8}, {4, 2, 1});
    const auto f1 = avff.forward(pyr, random_audio(gen, 1, 5));
    const auto f2 = avff.forward(pyr, random_audio(gen, 1, 5));
    const auto q = ag::Var::constant(3, 12, randn(gen, 36));
    EXPECT_EQ(values(QueryDecoder(12, 12, 2, 24, 0, rng).forward(f1, q)), values(q));
    QueryDecoder dec(12, 12, 2, 24, 2, rng);
    const auto o1 = dec.forward(f1, q);
    EXPECT_EQ(o1.rows(), 3);
    EXPECT_EQ(o1.cols(), 12);
    EXPECT_NE(values(o1), values(dec.forward(f2, q)));
}

TEST(Fusion, ParameterNamesAreUnique) {
    nn::Rng rng(10);
    Avff avff({4, 6, 8}, 5, 12, 2, rng);
    MultimodalEncoder enc(12, 2, 24, 2, true, rng);
    nn::ParamList params;
    avff.collect("avff", params);
    enc.collect("encoder", params);
    std::set<std::string> names;
    for (const auto& p : params) EXPECT_TRUE(names.insert(p.name).second) << p.name;
}
