#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stainkit::cli {

std::string sha256_hex(std::string_view bytes);

/// Provenance record written next to the outputs of every run. The command
/// arguments are stored in canonical form so reruns with the same inputs give
/// the same document apart from `started_at` and `duration_seconds`.
class RunManifest {
 public:
  RunManifest(std::string command, std::string arguments_json);

  void set_config(std::string_view canonical_config) { config_digest_ = sha256_hex(canonical_config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const std::filesystem::path& path) { inputs_.push_back(path.generic_string()); }
  void add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

  /// Output paths are stored relative to the manifest's directory.
  void write(const std::filesystem::path& manifest_path) const;

 private:
  std::string command_;
  std::string arguments_json_;
  std::string config_digest_;
  std::optional<std::uint64_t> seed_;
  std::vector<std::string> inputs_;
  std::vector<std::filesystem::path> outputs_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point clock_start_;
};

}  // namespace stainkit::cli
