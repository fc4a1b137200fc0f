#pragma once

#include <filesystem>
#include <vector>

#include "ramdepth/geometry.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

// Binary P6, maxval 255. Images are 1 x 3 x H x W in [0, 1].
void write_ppm(const std::filesystem::path& path, const Tensor& image);
Tensor read_ppm(const std::filesystem::path& path);

// Single-channel "Pf", little-endian (negative scale), rows stored bottom-up.
// Depth maps are 1 x 1 x H x W.
void write_pfm(const std::filesystem::path& path, const Tensor& depth);
Tensor read_pfm(const std::filesystem::path& path);

// ASCII PLY, one vertex per point with float x y z and uchar red green blue.
void write_ply(const std::filesystem::path& path, const std::vector<ColoredPoint>& points);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
