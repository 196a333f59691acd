// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gazeforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// One configuration key. Every key is a `--key` flag on the commands listed and a
/// `key=value` line in a config file.
struct KeyInfo {
    std::string key;
    std::string type;  // shown in --help: INT, REAL, PATH, TEXT, LIST, BOOL
    std::string default_value;
    std::string help;
    std::vector<std::string> commands;
    bool is_flag = false;  // boolean; `--key` alone means true
};

const std::vector<std::string>& command_names();
const std::vector<KeyInfo>& config_keys();
std::vector<const KeyInfo*> keys_for(std::string_view command);

using Settings = std::map<std::string, std::string>;

/// Flat `key=value` lines; `#` starts a comment, blank lines are ignored. Throws
/// ConfigError on unknown or repeated keys and malformed lines.
Settings parse_config_text(std::string_view text, const std::string& origin = "<config>");
Settings read_config_file(const std::filesystem::path& path);

/// Defaults, overlaid by the config file (keys of other commands are ignored), overlaid
/// by explicit flags.
Settings resolve_settings(std::string_view command, const Settings& file, const Settings& flags);

/// Entry point shared by the executable and the tests. Returns the process exit code:
/// 0 success, 1 usage or configuration error, 2 runtime failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gazeforge::cli
