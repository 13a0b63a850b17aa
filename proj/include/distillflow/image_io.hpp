#pragma once

#include <filesystem>

#include "distillflow/image.hpp"

namespace distillflow {

// 8-bit PNG and binary PGM/PPM (P5/P6, maxval 255). Pixel values are
// mapped linearly between [0,255] and [0,1]; writes round and clamp.
// The format is chosen from the file extension (.png, .pgm, .ppm).
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

}  // namespace distillflow
