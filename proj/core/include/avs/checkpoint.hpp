#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "avs/nn.hpp"
#include "avs/tensor.hpp"

namespace avs {

// Single-file archive: magic "AVSCKPT1", the config snapshot text, seed,
// step, then named tensors stored as little-endian binary32.
struct Checkpoint {
    std::string config_text;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Appends each parameter as "<prefix><name>" with shape [rows, cols].
void export_parameters(const nn::ParamList& params, Checkpoint& ckpt, const std::string& prefix = "");
// Copies matching tensors back; throws ShapeError on a shape mismatch and
// IoError when a parameter is missing.
void import_parameters(const Checkpoint& ckpt, nn::ParamList& params, const std::string& prefix = "");

}  // namespace avs
