#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ramdepth/nn.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

inline constexpr char kCheckpointMagic[4] = {'R', 'A', 'M', 'D'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  Shape shape;
  std::vector<float> values;
};

// Layout: "RAMD", u32 version, then for every parameter in sorted name
// order: u32 name length, name bytes, u32 rank, u32 extents[rank], f32
// payload. All integers and floats little-endian.
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params);
std::map<std::string, CheckpointEntry> read_checkpoint(const std::filesystem::path& path);
// Loads into an existing store; names and shapes must match exactly.
void load_checkpoint(const std::filesystem::path& path, ParameterStore& params);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
