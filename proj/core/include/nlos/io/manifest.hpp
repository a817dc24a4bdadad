#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace nlos::io {

/// File-system failure (missing file, unwritable directory, failed rename).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::filesystem::path& path);

/// Writes to "<path>.tmp" then renames, so readers never see a torn file.
void write_text_file(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& data);

/// ISO-8601 UTC. Honours SOURCE_DATE_EPOCH so repeated runs are byte-identical.
std::string utc_timestamp();

enum class RunStatus { Incomplete, Complete, Failed };
std::string to_string(RunStatus status);

struct OutputRecord {
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct RunManifest {
  std::string tool_version;
  std::vector<std::string> command;
  std::string input_file;
  std::string input_sha256;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed{0};
  std::string started_at;
  std::string finished_at;
  RunStatus status{RunStatus::Incomplete};
  std::string error;
  std::vector<OutputRecord> outputs;

  nlohmann::json to_json() const;
  /// Serialises and writes atomically to `<dir>/manifest.json`.
  void write(const std::filesystem::path& dir) const;
};

}  // namespace nlos::io
