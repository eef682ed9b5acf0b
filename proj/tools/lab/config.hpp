#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raf/experiments.hpp"

namespace raf::lab {

using Json = nlohmann::ordered_json;

/// Corpus audit / calibration inputs: paired WAV files matched by name.
struct AuditConfig {
  std::string real_dir;
  std::string fake_dir;
  std::vector<double> alphas{10000.0, 10000.0, 1.0};
  /// Empty means the default resolutions.
  std::vector<dsp::StftConfig> resolutions;

  void validate() const;
};

// Each config type converts to a fully materialized JSON object and back.
// Reading is strict: unknown keys and type mismatches throw ConfigError
// naming the offending key path.
Json to_json(const experiments::ToyConfig& c);
Json to_json(const experiments::SegmentStudyConfig& c);
Json to_json(const experiments::WaveToyConfig& c);
Json to_json(const experiments::CompareConfig& c);
Json to_json(const AuditConfig& c);

void from_json(const Json& j, experiments::ToyConfig& c);
void from_json(const Json& j, experiments::SegmentStudyConfig& c);
void from_json(const Json& j, experiments::WaveToyConfig& c);
void from_json(const Json& j, experiments::CompareConfig& c);
void from_json(const Json& j, AuditConfig& c);

inline constexpr const char* kArtifactVersion = "0.1.0";

const std::vector<std::string>& command_names();

struct RunManifest {
  std::string command;
  /// Resolved config with every default materialized.
  Json config;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
  std::string version = kArtifactVersion;

  /// Everything that determines the outputs; excludes the output
  /// directory.
  Json identity() const;
  Json to_json() const;
  /// FNV-1a 64 of identity().dump(), as 16 hex digits.
  std::string hash() const;
};

/// Parses a config document for `command`, merges it over the defaults and
/// returns the resolved config. An empty or null document gives defaults.
Json resolve_config(const std::string& command, const Json& doc);

Json parse_json_file(const std::filesystem::path& path);

/// Reads a manifest written by to_json().
RunManifest manifest_from_json(const Json& j);

std::uint64_t fnv1a64(std::string_view bytes);

/// "A..B" (inclusive) or a single integer.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

}  // namespace raf::lab
