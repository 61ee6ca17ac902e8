#include "csgnn/manifest.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "csgnn/version.hpp"
#include "json.hpp"

namespace csgnn {

std::string bytes_digest(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  return bytes_digest(read_text_file(path));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

RunManifest make_manifest(const std::string& command) {
  RunManifest m;
  m.command = command;
  m.artifact_version = kVersion;
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  m.created_utc = buf;
  return m;
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["artifact_version"] = artifact_version;
  j["settings"] = settings;
  nlohmann::json ji = nlohmann::json::array();
  for (const auto& [path, digest] : inputs) ji.push_back({{"path", path}, {"digest", digest}});
  j["inputs"] = ji;
  j["seeds"] = seeds;
  j["created_utc"] = created_utc;
  return j.dump(2) + "\n";
}

}  // namespace csgnn
