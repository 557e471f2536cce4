#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace capr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Entry point of the `capr` tool. Never throws; returns the exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// One prompt per line; blank lines are ignored.
std::vector<std::string> read_prompts(const std::filesystem::path& path);
void write_prompts(const std::filesystem::path& path, const std::vector<std::string>& prompts);

}  // namespace capr::cli
