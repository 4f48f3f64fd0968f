#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "avs/checkpoint.hpp"
#include "avs/config.hpp"
#include "avs/dataset.hpp"
#include "avs/model.hpp"

namespace avs::training {

struct StepLog {
    std::uint64_t step = 0;  // 1-based count of completed updates
    int epoch = 0;
    double loss = 0.0;
    double dice = 0.0;
    double focal = 0.0;
    double sound = 0.0;
};

struct TrainResult {
    std::vector<StepLog> log;
    std::uint64_t frozen_checksum_before = 0;
    std::uint64_t frozen_checksum_after = 0;
};

// Batch i of an epoch is a slice of a permutation derived from (seed, epoch),
// so a run resumed at any step replays the same order.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

// AdamW over the model's trainable parameters. Parameters and moment
// estimates are rounded to binary32 after every update, which makes a saved
// checkpoint an exact snapshot of the optimizer state.
class Trainer {
public:
    Trainer(AutrModel& model, const RunConfig& cfg);

    // Runs updates until `total_steps` have been taken in all. Throws
    // DivergenceError on a non-finite loss.
    TrainResult run(const std::vector<data::Sample>& train, std::uint64_t total_steps,
                    const std::function<void(const StepLog&)>& on_step = {});
    // The number of steps the configured schedule asks for on `n` samples.
    std::uint64_t scheduled_steps(std::size_t n) const;

    std::uint64_t step() const { return step_; }
    Checkpoint checkpoint() const;
    // Restores weights, moments and step from a checkpoint of the same model.
    void restore(const Checkpoint& ckpt);

private:
    StepLog update(const std::vector<data::Sample>& train);

    AutrModel& model_;
    RunConfig cfg_;
    nn::ParamList params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::uint64_t step_ = 0;
};

// Builds the model described by a checkpoint's config and loads its weights.
AutrModel model_from_checkpoint(const Checkpoint& ckpt, RunConfig* cfg_out = nullptr);
RunConfig config_from_checkpoint(const Checkpoint& ckpt);

}  // namespace avs::training
