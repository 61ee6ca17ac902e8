#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace csgnn {

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);
std::string bytes_digest(std::string_view bytes);

/// Everything needed to reproduce a CLI run: command, resolved settings,
/// input digests, seeds. The timestamp is informational; reports themselves
/// carry no volatile fields.
struct RunManifest {
  std::string command;
  std::string artifact_version;
  std::map<std::string, std::string> settings;  // resolved flag -> value
  std::vector<std::pair<std::string, std::string>> inputs;  // path -> digest
  std::vector<std::uint64_t> seeds;
  std::string created_utc;

  std::string to_json() const;
};

RunManifest make_manifest(const std::string& command);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace csgnn
