#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

namespace dhmm::cli {

// Everything needed to rerun a command bit-for-bit: the subcommand, its
// effective settings, digests of the input files it consumed, and the
// paths it wrote. Saved atomically next to every output.
class RunManifest {
 public:
  RunManifest(std::string subcommand, std::uint64_t seed);

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void add_input(const std::string& role, const std::string& path);
  void add_output(const std::string& path) { outputs_.push_back(path); }

  // Writes <dir>/manifest.json (or an explicit file path) via a temp file
  // and rename so readers never observe a partial manifest.
  void write(const std::string& path) const;

 private:
  std::string subcommand_;
  std::uint64_t seed_;
  nlohmann::json config_;
  nlohmann::json inputs_ = nlohmann::json::object();
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point started_;
};

// FNV-1a 64-bit digest of a file's bytes, hex-encoded.
std::string file_digest(const std::string& path);

}  // namespace dhmm::cli
