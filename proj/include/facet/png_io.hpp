#pragma once

#include <filesystem>

#include "facet/tensor.hpp"

namespace facet {

// 8-bit PNG export; values are clamped to [0,1] and quantized. 1-channel
// tensors write grayscale, 3-channel tensors write RGB.
void write_png(const std::filesystem::path& path, const ImageTensor& img01);

// Decodes to a 3-channel [0,1] tensor (grayscale expands to RGB).
ImageTensor read_png(const std::filesystem::path& path);

}  // namespace facet
