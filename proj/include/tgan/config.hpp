#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgan/trainer.hpp"

namespace tgan {

/// Configuration text problem; `line` is 1-based, 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
TrainConfig preset(const std::string& name);

/// Parses sectioned `key = value` text ([train], [model], [data]; `#` starts a
/// comment) on top of `base`. Without a base, `model` and `data` are required.
/// The result is validated.
TrainConfig parse_config_text(const std::string& text, const std::optional<TrainConfig>& base = std::nullopt);
TrainConfig parse_config(const std::filesystem::path& path, const std::optional<TrainConfig>& base = std::nullopt);

/// Canonical text form; parse_config_text(serialize_config(c)) == c and the
/// canonical text reproduces itself byte for byte.
std::string serialize_config(const TrainConfig& config);

/// Hex SHA-1 of the canonical text, hashed as a git blob.
std::string config_hash(const TrainConfig& config);

struct RunManifest {
  TrainConfig config;
  std::string hash;
  std::string started;   // UTC, ISO 8601
  std::string finished;  // empty while the run is in progress
  std::string status;    // running | ok | diverged
  std::vector<std::string> outputs;  // paths relative to the manifest
};

RunManifest make_manifest(const TrainConfig& config);
std::string serialize_manifest(const RunManifest& manifest);
RunManifest parse_manifest_text(const std::string& text);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

std::string utc_timestamp();

/// Reads a whole file; throws FormatError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

const char* model_name(ModelKind m);
const char* data_name(DataKind d);
const char* precision_name(Precision p);

}  // namespace tgan
