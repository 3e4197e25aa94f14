#pragma once

#include <string>

#include "sketchid/tensor.hpp"

namespace sketchid {

// 8-bit PNG I/O. Values map linearly between byte 0..255 and double 0..1.
Tensor read_png(const std::string& path);             // 1xHxW or 3xHxW depending on the file
Tensor read_png_gray(const std::string& path);        // converts RGB via BT.601 luminance
Tensor read_png_rgb(const std::string& path);         // replicates grayscale input
void write_png(const Tensor& image, const std::string& path);  // C must be 1 or 3

bool file_exists(const std::string& path);

// BT.601 luminance of a 3-channel tensor (identity on 1-channel input).
Tensor to_luminance(const Tensor& image);

}  // namespace sketchid
