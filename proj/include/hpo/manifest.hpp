#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hpo/io.hpp"

namespace hpo {

/// SHA-1 of "blob <size>\0<contents>", as printed by `git hash-object`.
std::string git_blob_sha1(std::string_view contents);
std::string git_blob_sha1_file(const std::filesystem::path& path);

struct ManifestInput {
  std::string role;  // "hyp", "ref", "config", ...
  std::string path;
  std::string sha1;
};

/// What a run did and with which inputs; rerunning from it reproduces the
/// primary outputs.
struct RunManifest {
  std::string command;
  Json config = Json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<ManifestInput> inputs;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;  // UTC, ISO 8601

  void add_input(const std::string& role, const std::filesystem::path& path);
  void write(const std::filesystem::path& run_dir) const;
  static RunManifest read(const std::filesystem::path& path);
};

OrderedJson to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const Json& record);

std::string utc_timestamp();

inline constexpr const char* kManifestFile = "manifest.json";

}  // namespace hpo
