#include "run_manifest.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "dhmm/errors.hpp"
#include "dhmm/version.hpp"

namespace dhmm::cli {

RunManifest::RunManifest(std::string subcommand, std::uint64_t seed)
    : subcommand_(std::move(subcommand)),
      seed_(seed),
      started_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::string& role, const std::string& path) {
  inputs_[role] = {{"path", path}, {"digest", file_digest(path)}};
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json doc;
  doc["format"] = "dhmm-manifest";
  doc["version"] = 1;
  doc["library_version"] = kLibraryVersion;
  doc["subcommand"] = subcommand_;
  doc["seed"] = seed_;
  doc["config"] = config_;
  doc["inputs"] = inputs_;
  doc["outputs"] = outputs_;
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                            started_);
  doc["wall_clock_ms"] = elapsed.count();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ParseError("cannot write manifest: " + tmp);
    out << doc.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file for digest: " + path);
  std::uint64_t hash = 14695981039346656037ull;
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof(buffer));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 1099511628211ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return std::string("fnv1a:") + hex;
}

}  // namespace dhmm::cli
