// Copyright 2026 The gazekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gazekit {

const char* toolkit_version();

/// 64-bit FNV-1a digest.
std::uint64_t fnv1a64(std::string_view bytes);

/// "fnv1a64:<16 hex digits>" of a file's bytes.
std::string hash_file(const std::filesystem::path& path);

/// Current UTC time as ISO-8601 with a trailing Z.
std::string utc_now();

/// Provenance record written once into every run directory.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config;
  std::map<std::string, std::string> input_hashes;  ///< path -> digest
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> outputs;  ///< paths relative to the run directory
  std::string version = toolkit_version();
  std::string started_at;
  std::string finished_at;
  std::string status = "ok";  ///< "ok", or "failed: <diagnostic>"

  void add_input(const std::filesystem::path& path);

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  /// Writes <dir>/manifest.json.
  void write(const std::filesystem::path& dir) const;
  static RunManifest read(const std::filesystem::path& dir);
};

/// Writes text to a file, creating parent directories. Throws RuntimeFailure.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace gazekit
