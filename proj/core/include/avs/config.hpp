#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "avs/model.hpp"
#include "avs/objective.hpp"
#include "avs/spectrogram.hpp"

namespace avs {

struct OptimConfig {
    double lr = 1e-4;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 10;
    int batch_size = 8;
    int max_steps = 0;  // 0: run all epochs
};

struct DataConfig {
    std::filesystem::path train_manifest;
    std::filesystem::path eval_manifest;
    std::filesystem::path output_dir = "runs";
    double test_fraction = 0.2;
    // Comma-separated training vocabulary; written by train, empty means any.
    std::string classes;
};

struct EvalConfig {
    double beta2 = 1.0;  // F-measure weight
};

struct RunConfig {
    ModelConfig model;
    OptimConfig optim;
    objective::CostConfig loss;
    encoders::SpectrogramConfig audio;
    DataConfig data;
    EvalConfig eval;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ConfigKey {
    std::string key;
    std::string default_value;
    std::string help;
};

// Every accepted key with its default, in file order.
std::vector<ConfigKey> config_keys();

// "key = value" lines; "[section]" headers prefix the following keys with
// "section."; '#' and ';' start comments. Unknown keys are errors.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
// Applies one "dotted.key=value" assignment.
void apply_override(RunConfig& cfg, const std::string& assignment);
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

std::vector<std::string> split_classes(const std::string& list);
std::string join_classes(const std::vector<std::string>& classes);

// Canonical snapshot: every key, one per line, loadable by parse_config.
std::string config_text(const RunConfig& cfg);

}  // namespace avs
