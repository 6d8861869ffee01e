#include "hpo/manifest.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "hpo/error.hpp"

namespace hpo {

std::string git_blob_sha1(std::string_view contents) {
  const std::string header = "blob " + std::to_string(contents.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw RuntimeFailure("sha1: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, contents.data(), contents.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw RuntimeFailure("sha1: digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

std::string git_blob_sha1_file(const std::filesystem::path& path) { return git_blob_sha1(read_file(path)); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void RunManifest::add_input(const std::string& role, const std::filesystem::path& path) {
  inputs.push_back({role, path.string(), git_blob_sha1_file(path)});
}

OrderedJson to_json(const RunManifest& m) {
  OrderedJson out;
  out["command"] = m.command;
  out["config"] = OrderedJson::parse(m.config.dump());
  out["seeds"] = m.seeds;
  OrderedJson inputs = OrderedJson::array();
  for (const auto& in : m.inputs) inputs.push_back({{"role", in.role}, {"path", in.path}, {"sha1", in.sha1}});
  out["inputs"] = std::move(inputs);
  out["started_at"] = m.started_at;
  out["finished_at"] = m.finished_at;
  return out;
}

RunManifest manifest_from_json(const Json& record) {
  RunManifest m;
  try {
    m.command = record.at("command").get<std::string>();
    m.config = record.at("config");
    m.seeds = record.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& in : record.at("inputs"))
      m.inputs.push_back({in.at("role").get<std::string>(), in.at("path").get<std::string>(), in.at("sha1").get<std::string>()});
    m.started_at = record.value("started_at", "");
    m.finished_at = record.value("finished_at", "");
  } catch (const Json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  return m;
}

void RunManifest::write(const std::filesystem::path& run_dir) const {
  write_file(run_dir / kManifestFile, to_json(*this).dump(2) + "\n");
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(doc);
}

}  // namespace hpo
