#include <gtest/gtest.h>

#include <set>

#include "avs/errors.hpp"
#include "avs/experiments.hpp"
#include "avs/fixtures.hpp"
#include "avs/training.hpp"

using namespace avs;
using namespace avs::experiments;
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
    cfg.optim.batch_size = 2;
    cfg.optim.max_steps = 2;
    cfg.seed = 4;
    return cfg;
}

data::Sample stub(std::string id, std::string cls) {
    data::Sample s;
    s.id = std::move(id);
    s.cls = std::move(cls);
    return s;
}

synthesis::DatasetManifest manifest_with(const std::vector<std::pair<std::string, int>>& classes) {
    synthesis::DatasetManifest m;
    for (const auto& [cls, n] : classes) {
        for (int i = 0; i < n; ++i) {
            m.samples.push_back({cls + std::to_string(i), "img", {}, "aud", cls, synthesis::Split::kTrain});
        }
        m.class_counts[cls] = static_cast<std::size_t>(n);
    }
    return m;
}

class ExperimentsTest : public testing::Test {
protected:
    static void SetUpTestSuite() {
        const auto dir = fs::path(testing::TempDir()) / "experiments_fixtures";
        fs::remove_all(dir);
        const auto fx = fixtures::generate_fixtures(fixtures::two_object_spec(), 4, 5, dir);
        rep_ = new synthesis::SynthesisReport(synthesis::synthesize(
            {{"shapes", fx.visual_annotations}}, {{"tones", fx.audio_annotations}},
            ontology::load_alias_table(fx.alias_table), 0.25, 5));
        samples_ = new std::vector<data::Sample>(
            data::load_samples(rep_->manifest.samples, make_toy_backbones(small_run().model), small_run().audio));
    }
    static void TearDownTestSuite() {
        delete samples_;
        delete rep_;
    }
    static synthesis::SynthesisReport* rep_;
    static std::vector<data::Sample>* samples_;
};

synthesis::SynthesisReport* ExperimentsTest::rep_ = nullptr;
std::vector<data::Sample>* ExperimentsTest::samples_ = nullptr;

}  // namespace

TEST(StratifiedSubset, PerClassRounding) {
    std::vector<data::Sample> s;
    for (int i = 0; i < 10; ++i) s.push_back(stub("a" + std::to_string(i), "a"));
    for (int i = 0; i < 3; ++i) s.push_back(stub("b" + std::to_string(i), "b"));
    const auto idx = stratified_subset(s, 0.2, 1);
    std::map<std::string, int> per;
    for (auto i : idx) ++per[s[i].cls];
    EXPECT_EQ(per, (std::map<std::string, int>{{"a", 2}, {"b", 1}}));  // b: round(0.6) = 1
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(stratified_subset(s, 0.2, 1), idx);
    EXPECT_TRUE(stratified_subset(s, 0.0, 1).empty());
    EXPECT_EQ(stratified_subset(s, 1.0, 1).size(), s.size());
    EXPECT_EQ(stratified_subset(s, 0.01, 1).size(), 2u);  // at least one per class
    EXPECT_THROW(stratified_subset(s, 1.5, 1), ConfigError);
}

TEST(OpenSet, DisjointAndComplete) {
    const auto m = manifest_with({{"a", 3}, {"b", 2}, {"c", 4}, {"d", 1}});
    std::set<std::set<std::string>> seen_sets;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto [seen, unseen] = make_openset_split(m, 2, seed);
        std::set<std::string> sc, uc;
        for (const auto& s : seen.samples) sc.insert(s.canonical_class);
        for (const auto& s : unseen.samples) uc.insert(s.canonical_class);
        EXPECT_EQ(sc.size(), 2u);
        EXPECT_EQ(uc.size(), 2u);
        for (const auto& c : sc) ASSERT_FALSE(uc.count(c));
        EXPECT_EQ(seen.samples.size() + unseen.samples.size(), m.samples.size());
        seen_sets.insert(sc);
    }
    EXPECT_GT(seen_sets.size(), 1u);
    const auto [a, b] = make_openset_split(m, 3, 7);
    EXPECT_EQ(make_openset_split(m, 3, 7).first.samples, a.samples);
}

TEST(OpenSet, Errors) {
    const auto m = manifest_with({{"a", 3}, {"b", 2}});
    EXPECT_THROW(make_openset_split(m, 0, 0), TooFewClasses);
    EXPECT_THROW(make_openset_split(m, 2, 0), TooFewClasses);
    EXPECT_THROW(make_openset_split(manifest_with({{"a", 5}}), 1, 0), TooFewClasses);
}

TEST_F(ExperimentsTest, ZeroShotVocabulary) {
    const auto cfg = small_run();
    const AutrModel model(cfg.model, cfg.seed);
    const auto all = run_zero_shot(model, {}, *samples_);
    EXPECT_EQ(all.evaluable, samples_->size());
    ASSERT_TRUE(all.report.has_value());
    EXPECT_EQ(all.report->samples, samples_->size());

    const auto none = run_zero_shot(model, {"zebra"}, *samples_);
    EXPECT_EQ(none.evaluable, 0u);
    EXPECT_EQ(none.skipped, samples_->size());
    EXPECT_FALSE(none.report.has_value());

    const auto disk = run_zero_shot(model, {"disk"}, *samples_);
    for (const auto& c : disk.skipped_classes) EXPECT_NE(c, "disk");
    EXPECT_EQ(disk.evaluable + disk.skipped, samples_->size());
}

TEST_F(ExperimentsTest, SweepFractionZeroIsDirectEvaluation) {
    auto cfg = small_run();
    AutrModel pre(cfg.model, cfg.seed);
    training::Trainer trainer(pre, cfg);
    trainer.run(*samples_, 2);
    const Checkpoint ckpt = trainer.checkpoint();

    SweepOptions opts;
    opts.fractions = {0.0, 0.5};
    opts.val_fraction = 0.0;
    const auto res = run_finetune_sweep(cfg, ckpt, *samples_, *samples_, opts);
    ASSERT_EQ(res.rows.size(), 4u);
    EXPECT_TRUE(res.rows[0].pretrained);
    EXPECT_FALSE(res.rows[1].pretrained);
    EXPECT_EQ(res.rows[0].steps, 0u);
    const auto direct = run_zero_shot(pre, {}, *samples_);
    EXPECT_EQ(res.rows[0].last.mean_iou, direct.report->mean_iou);
    EXPECT_EQ(res.rows[2].steps, 2u);
    EXPECT_GT(res.rows[2].train_samples, 0u);
    EXPECT_FALSE(res.rows[2].best_val.has_value());

    opts.fractions = {2.0};
    EXPECT_THROW(run_finetune_sweep(cfg, ckpt, *samples_, *samples_, opts), ConfigError);
}

TEST_F(ExperimentsTest, SelectivityCountsMultiObjectImages) {
    const auto cfg = small_run();
    const AutrModel model(cfg.model, cfg.seed);
    const auto r = audio_selectivity(model, *samples_, rep_->manifest.samples);
    EXPECT_EQ(r.samples, samples_->size());  // every image holds two objects
    EXPECT_EQ(r.sounding_iou.size(), r.samples);
    EXPECT_LE(r.wins, r.samples);
    EXPECT_GE(r.rate(), 0.0);
    EXPECT_LE(r.rate(), 1.0);
    EXPECT_EQ(audio_selectivity(model, *samples_, {}).samples, 0u);
    EXPECT_EQ(SelectivityResult{}.rate(), 0.0);
}
