#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ramdepth/model.hpp"

namespace ramdepth::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitUsage = 2;

// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// `key = value` lines with '#' comments.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

// Model architecture from the config.txt written next to a checkpoint by
// `ramdepth train`; toy defaults when absent.
ModelConfig model_config_for_checkpoint(const std::filesystem::path& ckpt);

}  // namespace ramdepth::cli
