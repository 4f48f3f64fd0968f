#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "avs/checkpoint.hpp"
#include "avs/config.hpp"
#include "avs/dataset.hpp"
#include "avs/metrics.hpp"
#include "avs/model.hpp"
#include "avs/synthesis.hpp"

namespace avs::experiments {

// Predicts every sample and scores the winner mask against its ground truth.
metrics::EvalAccumulator evaluate(const AutrModel& model, const std::vector<data::Sample>& samples,
                                  double beta2 = 1.0);

struct ZeroShotResult {
    std::size_t evaluable = 0;
    std::size_t skipped = 0;
    std::vector<std::string> skipped_classes;
    std::optional<metrics::EvalReport> report;  // empty when nothing was evaluable
};

// Evaluates only samples whose class is in `vocabulary` (all when empty).
ZeroShotResult run_zero_shot(const AutrModel& model, const std::vector<std::string>& vocabulary,
                             const std::vector<data::Sample>& eval, double beta2 = 1.0);

// Indices of a per-class stratified subsample: round(fraction * n_c) of each
// class, at least one when fraction > 0. Drawn from id-sorted groups with a
// seeded shuffle.
std::vector<std::size_t> stratified_subset(const std::vector<data::Sample>& samples, double fraction,
                                           std::uint64_t seed);

struct SweepOptions {
    std::vector<double> fractions{0.0, 0.1, 0.2, 0.3, 1.0};
    // Share of each class of the real training split held back for
    // checkpoint selection; 0 disables the best-val column.
    double val_fraction = 0.2;
    int val_checks = 4;
};

struct SweepRow {
    double fraction = 0.0;
    bool pretrained = false;
    std::size_t train_samples = 0;
    std::uint64_t steps = 0;
    metrics::EvalReport last;
    std::optional<metrics::EvalReport> best_val;
    std::uint64_t best_step = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t pool_samples = 0;
    std::size_t val_samples = 0;
    std::size_t test_samples = 0;
};

// For each fraction and for both arms (finetuned from `pretrained`, or from
// a fresh initialization) trains on a stratified share of `real_train` with
// `cfg.optim` and evaluates on `real_test`. Fraction 0 is direct evaluation.
SweepResult run_finetune_sweep(const RunConfig& cfg, const Checkpoint& pretrained,
                               const std::vector<data::Sample>& real_train,
                               const std::vector<data::Sample>& real_test, const SweepOptions& opts);

// Class-disjoint partition: a seeded shuffle of the sorted class list puts
// the first n_seen classes on the seen side. Throws TooFewClasses unless
// 1 <= n_seen < number of classes.
std::pair<synthesis::DatasetManifest, synthesis::DatasetManifest> make_openset_split(
    const synthesis::DatasetManifest& manifest, int n_seen, std::uint64_t seed);

struct SelectivityResult {
    std::size_t samples = 0;
    std::size_t wins = 0;  // IoU with the sounding mask beats IoU with the silent mask
    std::vector<double> sounding_iou;
    std::vector<double> silent_iou;

    double rate() const { return samples ? static_cast<double>(wins) / static_cast<double>(samples) : 0.0; }
};

// For samples whose image holds other annotated objects: the silent mask is
// the union of the other objects' masks in `instances` (same image URI).
// Samples without another object are not counted.
SelectivityResult audio_selectivity(const AutrModel& model, const std::vector<data::Sample>& eval,
                                    const std::vector<synthesis::TripletSample>& instances);

}  // namespace avs::experiments
