#pragma once

#include <filesystem>

#include "distillflow/flow.hpp"

namespace distillflow {

// Middlebury .flo: "PIEH", int32 width, int32 height, then row-major
// interleaved (u, v) float32, all little-endian. Values are stored as
// float32, so a field round-trips bit-exactly when its components are
// float-representable.
void write_flo(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flo(const std::filesystem::path& path);

// Masks as 8-bit PGM: 0 -> 0, 1 -> 255.
void write_mask_pgm(const std::filesystem::path& path, const MaskMap& mask);
MaskMap read_mask_pgm(const std::filesystem::path& path);

// Disparity as 16-bit PGM holding round(256 * d), saturated to 65535.
void write_disparity_pgm16(const std::filesystem::path& path, const ScalarMap& disparity);
ScalarMap read_disparity_pgm16(const std::filesystem::path& path);

}  // namespace distillflow
