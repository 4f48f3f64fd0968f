#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "avs/errors.hpp"
#include "avs/fixtures.hpp"
#include "avs/synthesis.hpp"
#include "avs/training.hpp"

using namespace avs;
namespace fs = std::filesystem;

namespace {

RunConfig small_run() {
    RunConfig cfg;
    cfg.model.fused_width = 16;
    cfg.model.model_width = 16;
    cfg.model.queries = 4;
    cfg.model.heads = 2;
    cfg.model.encoder_layers = 1;
    cfg.model.decoder_layers = 1;
    cfg.model.ffn_width = 32;
    cfg.model.mask_channels = 8;
    cfg.optim.lr = 1e-3;
    cfg.optim.batch_size = 2;
    cfg.seed = 3;
    return cfg;
}

class TrainingTest : public testing::Test {
protected:
    static void SetUpTestSuite() {
        const auto dir = fs::path(testing::TempDir()) / "training_fixtures";
        fs::remove_all(dir);
        const auto fx = fixtures::generate_fixtures(fixtures::default_spec(), 4, 9, dir);
        const auto rep = synthesis::synthesize({{"shapes", fx.visual_annotations}}, {{"tones", fx.audio_annotations}},
                                               ontology::load_alias_table(fx.alias_table), 0.2, 9);
        const auto cfg = small_run();
        samples_ = new std::vector<data::Sample>(
            data::load_samples(rep.manifest.samples, make_toy_backbones(cfg.model), cfg.audio));
    }
    static void TearDownTestSuite() {
        delete samples_;
        samples_ = nullptr;
    }
    static const std::vector<data::Sample>& samples() { return *samples_; }

private:
    static std::vector<data::Sample>* samples_;
};

std::vector<data::Sample>* TrainingTest::samples_ = nullptr;

std::vector<std::vector<double>> snapshot(const AutrModel& model) {
    std::vector<std::vector<double>> out;
    for (const auto& p : model.trainable_parameters()) out.emplace_back(p.var.value().begin(), p.var.value().end());
    return out;
}

}  // namespace

TEST(EpochOrder, PermutationAndDeterminism) {
    const auto a = training::epoch_order(20, 5, 0);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> iota(20);
    std::iota(iota.begin(), iota.end(), 0);
    EXPECT_EQ(sorted, iota);
    EXPECT_EQ(training::epoch_order(20, 5, 0), a);
    EXPECT_NE(training::epoch_order(20, 5, 1), a);
    EXPECT_NE(training::epoch_order(20, 6, 0), a);
}

TEST_F(TrainingTest, ZeroLearningRateLeavesWeightsBitIdentical) {
    auto cfg = small_run();
    cfg.optim.lr = 0.0;
    AutrModel model(cfg.model, cfg.seed);
    const auto before = snapshot(model);
    training::Trainer trainer(model, cfg);
    const auto res = trainer.run(samples(), 3);
    EXPECT_EQ(res.log.size(), 3u);
    EXPECT_EQ(snapshot(model), before);
}

TEST_F(TrainingTest, FrozenBackbonesNeverChange) {
    auto cfg = small_run();
    AutrModel model(cfg.model, cfg.seed);
    const auto before = snapshot(model);
    training::Trainer trainer(model, cfg);
    const auto res = trainer.run(samples(), 3);
    EXPECT_EQ(res.frozen_checksum_before, res.frozen_checksum_after);
    EXPECT_EQ(res.frozen_checksum_after, parameter_checksum(model.frozen_parameters()));
    EXPECT_NE(snapshot(model), before);
}

TEST_F(TrainingTest, ResumeMatchesUninterruptedRun) {
    const auto cfg = small_run();
    AutrModel straight(cfg.model, cfg.seed);
    training::Trainer t1(straight, cfg);
    const auto full = t1.run(samples(), 6);

    AutrModel first(cfg.model, cfg.seed);
    training::Trainer t2(first, cfg);
    t2.run(samples(), 3);
    const auto path = fs::path(testing::TempDir()) / "resume.ckpt";
    save_checkpoint(path, t2.checkpoint());

    const auto ckpt = load_checkpoint(path);
    RunConfig restored_cfg;
    AutrModel resumed = training::model_from_checkpoint(ckpt, &restored_cfg);
    training::Trainer t3(resumed, restored_cfg);
    t3.restore(ckpt);
    EXPECT_EQ(t3.step(), 3u);
    const auto tail = t3.run(samples(), 6);
    ASSERT_EQ(tail.log.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(tail.log[i].step, full.log[i + 3].step);
        EXPECT_NEAR(tail.log[i].loss, full.log[i + 3].loss, 1e-6);
    }
    const auto a = snapshot(straight), b = snapshot(resumed);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) ASSERT_NEAR(a[i][j], b[i][j], 1e-6);
}

TEST_F(TrainingTest, SingleSampleLossFalls) {
    auto cfg = small_run();
    cfg.optim.batch_size = 1;
    AutrModel model(cfg.model, cfg.seed);
    training::Trainer trainer(model, cfg);
    const std::vector<data::Sample> one{samples().front()};
    const auto res = trainer.run(one, 60);
    auto window = [&](std::size_t from) {
        double s = 0.0;
        for (std::size_t i = from; i < from + 10; ++i) s += res.log[i].loss;
        return s / 10.0;
    };
    EXPECT_LT(window(50), 0.5 * window(0));
    EXPECT_LT(window(50), window(25));
}

TEST_F(TrainingTest, ScheduleAndErrors) {
    auto cfg = small_run();
    cfg.optim.epochs = 3;
    cfg.optim.batch_size = 4;
    AutrModel model(cfg.model, cfg.seed);
    training::Trainer trainer(model, cfg);
    EXPECT_EQ(trainer.scheduled_steps(10), 9u);
    cfg.optim.max_steps = 5;
    training::Trainer capped(model, cfg);
    EXPECT_EQ(capped.scheduled_steps(10), 5u);
    EXPECT_THROW(trainer.run({}, 1), Error);
}

TEST_F(TrainingTest, DivergenceIsReported) {
    auto cfg = small_run();
    cfg.optim.lr = 1e30;
    cfg.optim.weight_decay = 0.0;
    AutrModel model(cfg.model, cfg.seed);
    training::Trainer trainer(model, cfg);
    EXPECT_THROW(trainer.run(samples(), 20), DivergenceError);
}

TEST_F(TrainingTest, SamplesCarryBothTargetResolutions) {
    for (const auto& s : samples()) {
        EXPECT_EQ(s.full_target.size(), static_cast<std::size_t>(s.height) * s.width);
        EXPECT_EQ(s.target.size(), static_cast<std::size_t>(s.height / 4) * (s.width / 4));
        ASSERT_EQ(s.masks.size(), 1u);
        EXPECT_EQ(std::accumulate(s.full_target.begin(), s.full_target.end(), std::size_t{0}), s.masks[0].count());
    }
}
