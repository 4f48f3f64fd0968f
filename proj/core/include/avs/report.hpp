#pragma once

#include <string>
#include <vector>

#include "avs/experiments.hpp"
#include "avs/synthesis.hpp"
#include "avs/training.hpp"

// JSON and plain-text renderings of harness results.
namespace avs::report {

std::string zero_shot_json(const experiments::ZeroShotResult& r);
std::string zero_shot_table(const experiments::ZeroShotResult& r);

// Rows are fractions; columns M_J / M_F for the from-scratch and the
// pretrained arm, last step and best-val side by side.
std::string sweep_json(const experiments::SweepResult& r);
std::string sweep_table(const experiments::SweepResult& r);

std::string selectivity_json(const experiments::SelectivityResult& r);

// step,epoch,loss,dice,focal,sound
std::string loss_log_csv(const std::vector<training::StepLog>& log);

std::string synthesis_json(const synthesis::SynthesisReport& r);
std::string synthesis_table(const synthesis::SynthesisReport& r);

}  // namespace avs::report
