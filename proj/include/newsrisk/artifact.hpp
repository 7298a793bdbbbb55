#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace newsrisk {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
/// SHA-256 of a file's bytes; throws IoError when unreadable.
std::string file_sha256(const std::string& path);

/// Provenance block written at the top of every artifact. Every line starts
/// with '#', so record readers skip it.
struct ArtifactHeader {
  std::string command;
  /// Run configuration without output paths; serialized with sorted keys.
  nlohmann::json config = nlohmann::json::object();
  /// (file name, sha256) per input, in the order given.
  std::vector<std::pair<std::string, std::string>> inputs;

  void add_input(const std::string& path);
  /// First 16 hex digits of sha256(config.dump()).
  std::string config_hash() const;
};

void write_header(std::ostream& out, const ArtifactHeader& header);

/// Writes header + body to `path` through a temporary file and rename.
/// Throws IoError on failure.
void write_artifact(const std::string& path, const ArtifactHeader& header,
                    const std::function<void(std::ostream&)>& body);

}  // namespace newsrisk
