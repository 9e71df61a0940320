#pragma once

#include <filesystem>

#include <torch/torch.h>

namespace eegdiff::data {

// Minimal NumPy .npy support (format versions 1-3, C order, little-endian
// numeric dtypes). Arrays load as tensors of the matching dtype.
torch::Tensor read_npy(const std::filesystem::path& path);
void write_npy(const torch::Tensor& array, const std::filesystem::path& path);

}  // namespace eegdiff::data
