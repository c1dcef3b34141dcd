// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tabgen {

/// Parses and runs one command; returns the process exit code. Errors are
/// reported on stderr.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args[0] is the program name

/// Record of one command invocation with content hashes of its files.
struct RunManifest {
  std::string command;
  nlohmann::json arguments = nlohmann::json::object();
  std::uint64_t seed = 0;
  nlohmann::json config_hashes = nlohmann::json::object();
  std::vector<std::filesystem::path> inputs, outputs;
  double wall_time_s = 0.0;

  /// Hashes every input and output file.
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace tabgen
